//! Gain selection for the batch estimator.
//!
//! For a bundle `(Φ, d, Σ)` and a rate matrix `Γ` the gain `Λ = P⁻¹X` is
//! chosen so that the P-radius of the updated zonotope obeys
//! `r⁺ ≤ β·r + ε`. The matrix inequality
//!
//! ```text
//! ⎡ βP   0      0      P − ΦXᵀ     ⎤
//! ⎢ 0    Γ′ᵀΓ′  0      ΓᵀP − ΓᵀΦXᵀ ⎥  ⪰ 0
//! ⎢ 0    0      Σ′ᵀΣ′  ΣXᵀ         ⎥
//! ⎣ *    *      *      P           ⎦
//! ```
//!
//! is the Schur-complement form of
//! `‖(I − ΛΦᵀ)(z̄ + Γs) + ΛΣη‖²_P ≤ β‖z̄‖²_P + ‖Γ′s‖² + ‖Σ′η‖²`.
//! Among feasible `(P, X)` the one maximizing `τ` with
//! `(1 − β)P/ε ⪰ τI` is returned.

mod barrier;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::candidates::{LambdaGain, StripBundle};
use crate::error::{GeometryError, LmiError};
use crate::geometry::{matrix_to_rows, min_eigenvalue, PMatrix, Zonotope};
use barrier::{BarrierOutcome, BarrierSettings, LmiBlock, LmiProgram};

/// Largest `n` for which `max ‖Γ′s‖²` is enumerated over vertices.
pub const EPSILON_MAX_N: usize = 16;
/// Largest `m′` for which `max ‖Σ′η‖²` is enumerated over vertices.
pub const EPSILON_MAX_M: usize = 20;
/// Lower bound on the eigenvalues of `P` (with `P ⪯ I`).
pub const P_REGULARIZATION: f64 = 1e-9;
/// Slack granted to `F` when the contraction constraint is degenerate.
pub const DEGENERATE_RELAXATION: f64 = 1e-9;
/// Certificate recheck tolerance on `λ_min(F)`.
pub const F_PSD_TOL: f64 = 1e-7;
/// Slack of the contraction check.
pub const CONTRACTION_TOL: f64 = 1e-7;

const BALL_RADIUS: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContractionConfig {
    pub beta: f64,
    /// `Γ′`; `None` uses the step's `Γ`.
    #[serde(with = "opt_rows")]
    pub gamma_prime: Option<DMatrix<f64>>,
    /// `Σ′`; `None` uses the bundle's `Σ`.
    #[serde(with = "opt_rows")]
    pub sigma_prime: Option<DMatrix<f64>>,
    pub tau_floor: f64,
}

impl Default for ContractionConfig {
    fn default() -> Self {
        Self {
            beta: 0.95,
            gamma_prime: None,
            sigma_prime: None,
            tau_floor: 1e-9,
        }
    }
}

impl ContractionConfig {
    pub fn validate(&self) -> Result<(), LmiError> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(LmiError::Solver(format!("beta must lie in (0, 1], got {}", self.beta)));
        }
        if !(self.tau_floor > 0.0) || !self.tau_floor.is_finite() {
            return Err(LmiError::Solver(format!("tau_floor must be positive, got {}", self.tau_floor)));
        }
        Ok(())
    }

    fn effective(&self, gamma: &DMatrix<f64>, bundle: &StripBundle) -> (DMatrix<f64>, DMatrix<f64>) {
        (
            self.gamma_prime.clone().unwrap_or_else(|| gamma.clone()),
            self.sigma_prime.clone().unwrap_or_else(|| bundle.size_diag()),
        )
    }
}

mod opt_rows {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &Option<DMatrix<f64>>, s: S) -> Result<S::Ok, S::Error> {
        match m {
            Some(m) => s.serialize_some(&crate::geometry::matrix_to_rows(m)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<DMatrix<f64>>, D::Error> {
        let rows: Option<Vec<Vec<f64>>> = Option::deserialize(d)?;
        rows.map(|r| crate::geometry::matrix_from_rows(&r, r.len()).map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum P2Status {
    Optimal,
    Infeasible,
}

impl std::fmt::Display for P2Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            P2Status::Optimal => "optimal",
            P2Status::Infeasible => "infeasible",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct P2Optimum {
    pub p: PMatrix,
    pub x: DMatrix<f64>,
    pub lambda: LambdaGain,
    pub tau: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum P2Solution {
    Optimal(P2Optimum),
    /// No `(P, X)` meets the constraints; `margin` is the phase-I residual.
    Infeasible { epsilon: f64, margin: f64 },
}

impl P2Solution {
    pub fn status(&self) -> P2Status {
        match self {
            P2Solution::Optimal(_) => P2Status::Optimal,
            P2Solution::Infeasible { .. } => P2Status::Infeasible,
        }
    }

    pub fn epsilon(&self) -> f64 {
        match self {
            P2Solution::Optimal(o) => o.epsilon,
            P2Solution::Infeasible { epsilon, .. } => *epsilon,
        }
    }

    pub fn optimum(&self) -> Option<&P2Optimum> {
        match self {
            P2Solution::Optimal(o) => Some(o),
            P2Solution::Infeasible { .. } => None,
        }
    }
}

/// Exact maximum of `‖Ms‖²` over the unit hypercube.
fn max_quadratic_on_cube(m: &DMatrix<f64>, limit: usize, what: &'static str) -> Result<f64, GeometryError> {
    let k = m.ncols();
    if k == 0 {
        return Ok(0.0);
    }
    let gram = m.transpose() * m;
    let diagonal = (0..k).all(|i| (0..k).all(|j| i == j || gram[(i, j)] == 0.0));
    if diagonal {
        return Ok(gram.diagonal().sum());
    }
    if k > limit {
        return Err(GeometryError::GuardExceeded { what, value: k, limit });
    }
    let mut v: DVector<f64> = m.column_sum();
    let mut signs = vec![1.0f64; k];
    let mut best = v.norm_squared();
    for step in 1u64..(1u64 << (k - 1)) {
        let j = step.trailing_zeros() as usize + 1;
        signs[j] = -signs[j];
        v.axpy(2.0 * signs[j], &m.column(j), 1.0);
        best = best.max(v.norm_squared());
    }
    Ok(best)
}

/// `ε = max_{s∈𝐁ⁿ} ‖Γ′s‖² + max_{η∈𝐁^m′} ‖Σ′η‖²`.
pub fn epsilon(gamma_prime: &DMatrix<f64>, sigma_prime: &DMatrix<f64>) -> Result<f64, GeometryError> {
    if gamma_prime.iter().chain(sigma_prime.iter()).any(|v| !v.is_finite()) {
        return Err(GeometryError::NonFinite("epsilon input"));
    }
    Ok(max_quadratic_on_cube(gamma_prime, EPSILON_MAX_N, "epsilon n")?
        + max_quadratic_on_cube(sigma_prime, EPSILON_MAX_M, "epsilon m'")?)
}

struct Blocks<'a> {
    phi: &'a DMatrix<f64>,
    sigma: DMatrix<f64>,
    gamma: &'a DMatrix<f64>,
    gamma_prime: DMatrix<f64>,
    sigma_prime: DMatrix<f64>,
    beta: f64,
}

impl Blocks<'_> {
    fn n(&self) -> usize {
        self.phi.nrows()
    }

    fn m(&self) -> usize {
        self.phi.ncols()
    }

    /// Dense `F(P, X)`.
    fn f(&self, p: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
        let (n, m) = (self.n(), self.m());
        let size = 3 * n + m;
        let mut f = DMatrix::zeros(size, size);
        let last = 2 * n + m;
        let b1 = p - self.phi * x.transpose();
        let b2 = self.gamma.transpose() * &b1;
        let b3 = &self.sigma * x.transpose();
        f.view_mut((0, 0), (n, n)).copy_from(&(p * self.beta));
        f.view_mut((n, n), (n, n))
            .copy_from(&(self.gamma_prime.transpose() * &self.gamma_prime));
        f.view_mut((2 * n, 2 * n), (m, m))
            .copy_from(&(self.sigma_prime.transpose() * &self.sigma_prime));
        f.view_mut((last, last), (n, n)).copy_from(p);
        for (row, b) in [(0, &b1), (n, &b2), (2 * n, &b3)] {
            f.view_mut((row, last), (b.nrows(), n)).copy_from(b);
            f.view_mut((last, row), (n, b.nrows())).copy_from(&b.transpose());
        }
        f
    }
}

fn check_dims(n: usize, bundle: &StripBundle, gamma: &DMatrix<f64>, cfg: &ContractionConfig) -> Result<(), GeometryError> {
    let m = bundle.len();
    let mismatch = |expected, got| GeometryError::DimensionMismatch { expected, got };
    if bundle.dim() != n {
        return Err(mismatch(n, bundle.dim()));
    }
    if gamma.shape() != (n, n) {
        return Err(mismatch(n, gamma.nrows().max(gamma.ncols())));
    }
    if let Some(g) = &cfg.gamma_prime {
        if g.ncols() != n {
            return Err(mismatch(n, g.ncols()));
        }
    }
    if let Some(s) = &cfg.sigma_prime {
        if s.ncols() != m {
            return Err(mismatch(m, s.ncols()));
        }
    }
    Ok(())
}

/// The matrix `F(P, X)` of size `3n + m′`.
pub fn assemble_f(
    p: &PMatrix,
    x: &DMatrix<f64>,
    bundle: &StripBundle,
    gamma: &DMatrix<f64>,
    cfg: &ContractionConfig,
) -> Result<DMatrix<f64>, LmiError> {
    let n = p.dim();
    check_dims(n, bundle, gamma, cfg)?;
    if x.shape() != (n, bundle.len()) {
        return Err(GeometryError::DimensionMismatch {
            expected: n * bundle.len(),
            got: x.len(),
        }
        .into());
    }
    let (gamma_prime, sigma_prime) = cfg.effective(gamma, bundle);
    let blocks = Blocks {
        phi: bundle.orientations(),
        sigma: bundle.size_diag(),
        gamma,
        gamma_prime,
        sigma_prime,
        beta: cfg.beta,
    };
    Ok(blocks.f(p.matrix(), x))
}

/// Solves for `(P, X, τ)`; an empty feasible set is reported as
/// [`P2Solution::Infeasible`], never as an error.
///
/// The `τ` constraint is written as `P ⪰ tI` with `τ = t(1 − β)/ε`. When
/// `β = 1` or `ε = 0` the contraction target is void and the program is
/// unbounded in the scale of `P`: the constraint becomes `P ⪰ τI`, `P ⪯ I`
/// is imposed as a normalization, and `F` gets a small slack so that the
/// singular but feasible `X = 0` point has an interior.
pub fn solve_p2(
    prior: &Zonotope,
    bundle: &StripBundle,
    gamma: &DMatrix<f64>,
    cfg: &ContractionConfig,
) -> Result<P2Solution, LmiError> {
    cfg.validate()?;
    let n = prior.dim();
    let m = bundle.len();
    check_dims(n, bundle, gamma, cfg)?;
    let (gamma_prime, sigma_prime) = cfg.effective(gamma, bundle);
    let eps = epsilon(&gamma_prime, &sigma_prime)?;
    let degenerate = cfg.beta >= 1.0 || eps == 0.0;
    let floor = if degenerate {
        cfg.tau_floor.max(P_REGULARIZATION)
    } else {
        (cfg.tau_floor * eps / (1.0 - cfg.beta)).max(P_REGULARIZATION)
    };

    let blocks = Blocks {
        phi: bundle.orientations(),
        sigma: bundle.size_diag(),
        gamma,
        gamma_prime,
        sigma_prime,
        beta: cfg.beta,
    };

    // Variables: upper triangle of P, X column-major, t.
    let p_index: Vec<(usize, usize)> = (0..n).flat_map(|j| (0..=j).map(move |i| (i, j))).collect();
    let np = p_index.len();
    let nv = np + n * m + 1;
    let sym_basis = |i: usize, j: usize| {
        let mut e = DMatrix::zeros(n, n);
        e[(i, j)] = 1.0;
        e[(j, i)] = 1.0;
        e
    };
    let zero_p = DMatrix::zeros(n, n);
    let zero_x = DMatrix::zeros(n, m);
    let f0 = blocks.f(&zero_p, &zero_x);
    let mut f_coeffs = Vec::with_capacity(nv);
    let mut q_coeffs = Vec::with_capacity(nv);
    for &(i, j) in &p_index {
        let e = sym_basis(i, j);
        f_coeffs.push(blocks.f(&e, &zero_x) - &f0);
        q_coeffs.push(e);
    }
    for a in 0..n * m {
        let mut xa = DMatrix::zeros(n, m);
        xa[(a % n, a / n)] = 1.0;
        f_coeffs.push(blocks.f(&zero_p, &xa) - &f0);
        q_coeffs.push(DMatrix::zeros(n, n));
    }
    f_coeffs.push(DMatrix::zeros(f0.nrows(), f0.ncols()));
    q_coeffs.push(-DMatrix::identity(n, n));

    let (mut f_block, _, _) = LmiBlock::from_dense(f0.clone(), &f_coeffs).conditioned();
    if degenerate {
        for i in 0..f_block.size() {
            f_block.constant[(i, i)] += DEGENERATE_RELAXATION;
        }
    }
    let lower = LmiBlock::from_dense(DMatrix::zeros(n, n), &q_coeffs);
    let upper = LmiBlock::from_dense(
        DMatrix::identity(n, n),
        &q_coeffs[..np]
            .iter()
            .map(|e| -e)
            .chain((np..nv).map(|_| DMatrix::zeros(n, n)))
            .collect::<Vec<_>>(),
    );
    let mut t_coeffs = vec![DMatrix::zeros(1, 1); nv];
    t_coeffs[nv - 1][(0, 0)] = 1.0;
    let t_block = LmiBlock::from_dense(DMatrix::from_element(1, 1, -floor), &t_coeffs);

    let mut objective = DVector::zeros(nv);
    objective[nv - 1] = 1.0;
    let mut program_blocks = vec![f_block, lower, t_block];
    if degenerate {
        program_blocks.push(upper);
    }
    let program = LmiProgram {
        objective,
        blocks: program_blocks,
        radius: BALL_RADIUS,
    };
    let mut x0 = DVector::zeros(nv);
    for (a, &(i, j)) in p_index.iter().enumerate() {
        if i == j {
            x0[a] = 0.5;
        }
    }
    x0[nv - 1] = 0.25;

    match program.solve(&x0, &BarrierSettings::default())? {
        BarrierOutcome::Infeasible { margin } => Ok(P2Solution::Infeasible { epsilon: eps, margin }),
        BarrierOutcome::Optimal { x, value } => {
            let mut p = DMatrix::zeros(n, n);
            for (a, &(i, j)) in p_index.iter().enumerate() {
                p[(i, j)] = x[a];
                p[(j, i)] = x[a];
            }
            let xm = DMatrix::from_column_slice(n, m, x.rows(np, n * m).as_slice());
            let p = PMatrix::new(p)?;
            let lambda = match p.matrix().clone().cholesky() {
                Some(c) => c.solve(&xm),
                None => {
                    let reg = p.matrix() + DMatrix::identity(n, n) * P_REGULARIZATION;
                    reg.cholesky()
                        .ok_or_else(|| LmiError::Solver("P is not positive definite".into()))?
                        .solve(&xm)
                }
            };
            let f = blocks.f(p.matrix(), &xm);
            let min_f = min_eigenvalue(&f);
            if min_f < -F_PSD_TOL {
                return Err(LmiError::Solver(format!("certificate recheck failed: λmin(F) = {min_f:e}")));
            }
            let tau = if degenerate { value } else { value * (1.0 - cfg.beta) / eps };
            Ok(P2Solution::Optimal(P2Optimum {
                p,
                x: xm,
                lambda: LambdaGain::new(lambda)?,
                tau,
                epsilon: eps,
            }))
        }
    }
}

/// `p_radius(next, P) ≤ β·p_radius(prev, P) + ε + 1e-7` with this step's `P`.
pub fn verify_contraction(prev: &Zonotope, next: &Zonotope, sol: &P2Optimum, beta: f64) -> Result<bool, GeometryError> {
    let before = prev.p_radius(&sol.p)?;
    let after = next.p_radius(&sol.p)?;
    Ok(after <= beta * before + sol.epsilon + CONTRACTION_TOL)
}

/// Diagnostic record of one P2 solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LmiDump {
    pub k: usize,
    pub batch: usize,
    pub status: P2Status,
    pub beta: f64,
    pub epsilon: f64,
    pub tau: Option<f64>,
    pub margin: Option<f64>,
    #[serde(rename = "Phi")]
    pub phi: Vec<Vec<f64>>,
    pub d: Vec<f64>,
    pub sigma: Vec<f64>,
    #[serde(rename = "Gamma")]
    pub gamma: Vec<Vec<f64>>,
    #[serde(rename = "P")]
    pub p: Option<Vec<Vec<f64>>>,
    #[serde(rename = "X")]
    pub x: Option<Vec<Vec<f64>>>,
    #[serde(rename = "Lambda")]
    pub lambda: Option<Vec<Vec<f64>>>,
    #[serde(rename = "F")]
    pub f: Option<Vec<Vec<f64>>>,
    pub f_min_eigenvalue: Option<f64>,
    pub constraints: Vec<String>,
}

impl LmiDump {
    pub fn new(
        k: usize,
        batch: usize,
        bundle: &StripBundle,
        gamma: &DMatrix<f64>,
        cfg: &ContractionConfig,
        sol: &P2Solution,
    ) -> Self {
        let f = sol
            .optimum()
            .and_then(|o| assemble_f(&o.p, &o.x, bundle, gamma, cfg).ok());
        Self {
            k,
            batch,
            status: sol.status(),
            beta: cfg.beta,
            epsilon: sol.epsilon(),
            tau: sol.optimum().map(|o| o.tau),
            margin: match sol {
                P2Solution::Infeasible { margin, .. } => Some(*margin),
                P2Solution::Optimal(_) => None,
            },
            phi: matrix_to_rows(bundle.orientations()),
            d: bundle.centers().iter().copied().collect(),
            sigma: bundle.sizes().iter().copied().collect(),
            gamma: matrix_to_rows(gamma),
            p: sol.optimum().map(|o| matrix_to_rows(o.p.matrix())),
            x: sol.optimum().map(|o| matrix_to_rows(&o.x)),
            lambda: sol.optimum().map(|o| matrix_to_rows(o.lambda.matrix())),
            f_min_eigenvalue: f.as_ref().map(min_eigenvalue),
            f: f.as_ref().map(matrix_to_rows),
            constraints: vec![
                "F(P,X) >= 0".into(),
                "(1-beta) P / epsilon >= tau I".into(),
                format!("tau >= {:e}", cfg.tau_floor),
                "P <= I".into(),
            ],
        }
    }
}
