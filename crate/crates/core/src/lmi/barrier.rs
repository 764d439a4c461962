//! A small log-det barrier solver for problems of the form
//!
//! ```text
//! maximize cᵀx  s.t.  Cᵢ + Σₐ xₐ Aᵢₐ ⪰ 0  (every block i),  ‖x‖ ≤ R
//! ```
//!
//! Coefficient matrices are sparse triplet lists with both triangles stored.
//! A phase-I problem (shift every block by `sI` and minimize `s`) either
//! yields a strictly feasible start or proves the interior empty.

use nalgebra::{DMatrix, DVector};

use crate::error::LmiError;

type Triplets = Vec<(usize, usize, f64)>;

#[derive(Debug, Clone)]
pub(crate) struct LmiBlock {
    pub constant: DMatrix<f64>,
    /// `coeffs[a]` holds the nonzeros of `Aₐ`.
    pub coeffs: Vec<Triplets>,
}

impl LmiBlock {
    /// Builds a block from dense coefficient matrices.
    pub fn from_dense(constant: DMatrix<f64>, dense: &[DMatrix<f64>]) -> Self {
        let coeffs = dense
            .iter()
            .map(|a| {
                let mut t = Vec::new();
                for j in 0..a.ncols() {
                    for i in 0..a.nrows() {
                        if a[(i, j)] != 0.0 {
                            t.push((i, j, a[(i, j)]));
                        }
                    }
                }
                t
            })
            .collect();
        Self { constant, coeffs }
    }

    pub fn size(&self) -> usize {
        self.constant.nrows()
    }

    fn eval(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut g = self.constant.clone();
        for (a, t) in self.coeffs.iter().enumerate() {
            let xa = x[a];
            if xa != 0.0 {
                for &(i, j, v) in t {
                    g[(i, j)] += xa * v;
                }
            }
        }
        g
    }

    /// Drops rows that vanish identically and rescales rows whose diagonal
    /// is a positive constant to unit diagonal. Both are congruences, so the
    /// feasible set is unchanged. Returns the kept rows and their scales.
    pub fn conditioned(&self) -> (Self, Vec<usize>, Vec<f64>) {
        let s = self.size();
        let mut touched = vec![false; s];
        let mut diag_var = vec![false; s];
        for t in &self.coeffs {
            for &(i, j, _) in t {
                touched[i] = true;
                touched[j] = true;
                if i == j {
                    diag_var[i] = true;
                }
            }
        }
        let keep: Vec<usize> = (0..s)
            .filter(|&i| touched[i] || self.constant.row(i).iter().any(|v| *v != 0.0))
            .collect();
        let mut pos = vec![usize::MAX; s];
        for (k, &i) in keep.iter().enumerate() {
            pos[i] = k;
        }
        let scale: Vec<f64> = keep
            .iter()
            .map(|&i| {
                let c = self.constant[(i, i)];
                if !diag_var[i] && c > 0.0 {
                    1.0 / c.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        let constant = DMatrix::from_fn(keep.len(), keep.len(), |p, q| {
            self.constant[(keep[p], keep[q])] * scale[p] * scale[q]
        });
        let coeffs = self
            .coeffs
            .iter()
            .map(|t| {
                t.iter()
                    .map(|&(i, j, v)| (pos[i], pos[j], v * scale[pos[i]] * scale[pos[j]]))
                    .collect()
            })
            .collect();
        (Self { constant, coeffs }, keep, scale)
    }

    fn shifted(&self, var: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.push((0..self.size()).map(|i| (i, i, 1.0)).collect());
        debug_assert_eq!(coeffs.len(), var + 1);
        Self {
            constant: self.constant.clone(),
            coeffs,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct LmiProgram {
    pub objective: DVector<f64>,
    pub blocks: Vec<LmiBlock>,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum BarrierOutcome {
    Optimal { x: DVector<f64>, value: f64 },
    /// Best phase-I value: no point with every block `⪰ −margin·I` exists
    /// for `margin` below this.
    Infeasible { margin: f64 },
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct BarrierSettings {
    pub mu: f64,
    pub gap_tol: f64,
    /// Phase I must reach `s < −feas_margin` to count as strictly feasible.
    pub feas_margin: f64,
    pub max_newton: usize,
    pub max_outer: usize,
}

impl Default for BarrierSettings {
    fn default() -> Self {
        Self {
            mu: 16.0,
            gap_tol: 1e-10,
            feas_margin: 1e-10,
            max_newton: 80,
            max_outer: 60,
        }
    }
}

struct Eval {
    value: f64,
    grad: DVector<f64>,
    hess: DMatrix<f64>,
}

/// Solves `H·dx = −g`, raising a diagonal shift until `H` factors.
fn newton_direction(hess: &DMatrix<f64>, grad: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = hess.diagonal().amax().max(1e-300);
    let mut shift = 1e-14 * scale;
    for _ in 0..8 {
        let mut h = hess.clone();
        for i in 0..h.nrows() {
            h[(i, i)] += shift;
        }
        if let Some(c) = h.cholesky() {
            return Some(c.solve(&-grad));
        }
        shift *= 100.0;
    }
    None
}

impl LmiProgram {
    pub fn nvars(&self) -> usize {
        self.objective.len()
    }

    fn barrier_dim(&self) -> f64 {
        self.blocks.iter().map(|b| b.size()).sum::<usize>() as f64 + 1.0
    }

    /// `−t·cᵀx − Σ log det Gᵢ(x) − log(R² − ‖x‖²)`, or `None` outside the domain.
    fn value(&self, x: &DVector<f64>, t: f64) -> Option<f64> {
        let q = self.radius * self.radius - x.norm_squared();
        if !(q > 0.0) {
            return None;
        }
        let mut v = -t * self.objective.dot(x) - q.ln();
        for b in &self.blocks {
            let chol = b.eval(x).cholesky()?;
            v -= 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        }
        v.is_finite().then_some(v)
    }

    fn evaluate(&self, x: &DVector<f64>, t: f64) -> Option<Eval> {
        let nv = self.nvars();
        let q = self.radius * self.radius - x.norm_squared();
        if !(q > 0.0) {
            return None;
        }
        let mut value = -t * self.objective.dot(x) - q.ln();
        let mut grad = -t * &self.objective + x * (2.0 / q);
        let mut hess = DMatrix::identity(nv, nv) * (2.0 / q) + (x * x.transpose()) * (4.0 / (q * q));
        for b in &self.blocks {
            let chol = b.eval(x).cholesky()?;
            value -= 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
            let l = chol.l();
            let s = b.size();
            // Bₐ = L⁻¹AₐL⁻ᵀ; the Hessian is the Gram matrix ⟨Bₐ, B_c⟩, which
            // stays positive semidefinite under roundoff.
            let mut active = Vec::new();
            let mut scaled = Vec::new();
            for (a, t) in b.coeffs.iter().enumerate() {
                if t.is_empty() {
                    continue;
                }
                let mut dense = DMatrix::zeros(s, s);
                for &(i, j, v) in t {
                    dense[(i, j)] += v;
                }
                let left = l.solve_lower_triangular(&dense)?;
                let ba = l.solve_lower_triangular(&left.transpose())?;
                grad[a] -= ba.trace();
                active.push(a);
                scaled.push(ba);
            }
            for ia in 0..active.len() {
                for ic in ia..active.len() {
                    let h = scaled[ia].dot(&scaled[ic]);
                    let (a, c) = (active[ia], active[ic]);
                    hess[(a, c)] += h;
                    if a != c {
                        hess[(c, a)] += h;
                    }
                }
            }
        }
        value.is_finite().then_some(Eval { value, grad, hess })
    }

    /// Newton centering for a fixed `t`. Returns the number of steps taken.
    fn center(&self, x: &mut DVector<f64>, t: f64, settings: &BarrierSettings) -> Result<usize, LmiError> {
        for it in 0..settings.max_newton {
            let e = self
                .evaluate(x, t)
                .ok_or_else(|| LmiError::Solver("iterate left the barrier domain".into()))?;
            let dx = newton_direction(&e.hess, &e.grad)
                .ok_or_else(|| LmiError::Solver("singular Newton system".into()))?;
            let slope = e.grad.dot(&dx);
            if -slope / 2.0 <= 1e-11 {
                return Ok(it);
            }
            let mut alpha = 1.0;
            loop {
                let trial = &*x + &dx * alpha;
                if let Some(v) = self.value(&trial, t) {
                    if v <= e.value + 0.25 * alpha * slope {
                        *x = trial;
                        break;
                    }
                }
                alpha *= 0.5;
                if alpha < 1e-14 {
                    return Ok(it);
                }
            }
        }
        Ok(settings.max_newton)
    }

    /// Barrier iterations from a strictly feasible `x`. `stop` is consulted
    /// after each centering.
    fn run(
        &self,
        mut x: DVector<f64>,
        settings: &BarrierSettings,
        stop: impl Fn(&DVector<f64>) -> bool,
    ) -> Result<DVector<f64>, LmiError> {
        let dim = self.barrier_dim();
        let mut t = 1.0;
        for _ in 0..settings.max_outer {
            self.center(&mut x, t, settings)?;
            if dim / t < settings.gap_tol || stop(&x) {
                return Ok(x);
            }
            t *= settings.mu;
        }
        Ok(x)
    }

    fn min_eigenvalue_at(&self, x: &DVector<f64>) -> f64 {
        self.blocks
            .iter()
            .map(|b| crate::geometry::min_eigenvalue(&b.eval(x)))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn solve(&self, x0: &DVector<f64>, settings: &BarrierSettings) -> Result<BarrierOutcome, LmiError> {
        let nv = self.nvars();
        if x0.len() != nv || self.blocks.iter().any(|b| b.coeffs.len() != nv) {
            return Err(LmiError::Solver("inconsistent program dimensions".into()));
        }
        if x0.norm() >= self.radius {
            return Err(LmiError::Solver("starting point outside the ball".into()));
        }

        let start = if self.min_eigenvalue_at(x0) > settings.feas_margin {
            x0.clone()
        } else {
            let mut blocks: Vec<LmiBlock> = self.blocks.iter().map(|b| b.shifted(nv)).collect();
            let mut floor = LmiBlock {
                constant: DMatrix::from_element(1, 1, 1.0),
                coeffs: vec![Vec::new(); nv + 1],
            };
            floor.coeffs[nv].push((0, 0, 1.0));
            blocks.push(floor);
            let mut objective = DVector::zeros(nv + 1);
            objective[nv] = -1.0;
            let phase1 = LmiProgram {
                objective,
                blocks,
                // The shift variable lives in [−1, s₀] and must not eat the ball.
                radius: self.radius * 2.0,
            };
            let s0 = (-self.min_eigenvalue_at(x0)).max(0.0) + 1.0;
            if (x0.norm_squared() + s0 * s0).sqrt() >= phase1.radius {
                return Err(LmiError::Solver("phase-I start outside the ball".into()));
            }
            let y0 = x0.clone().insert_row(nv, s0);
            let y = phase1.run(y0, settings, |y| y[nv] < -0.5)?;
            let s = y[nv];
            if s >= -settings.feas_margin {
                return Ok(BarrierOutcome::Infeasible { margin: s });
            }
            y.rows(0, nv).into_owned()
        };

        let x = self.run(start, settings, |_| false)?;
        Ok(BarrierOutcome::Optimal {
            value: self.objective.dot(&x),
            x,
        })
    }
}
