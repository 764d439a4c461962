//! Zonotopes that overbound a zonotope intersected with one strip (the
//! column-elimination family) or with a bundle of strips (the gain-matrix
//! family).

use nalgebra::{DMatrix, DVector};

use crate::error::GeometryError;
use crate::geometry::{Strip, Zonotope};

/// Relative threshold under which `cᵀHʲ` is treated as zero.
pub const DOT_TOL: f64 = 1e-12;

/// Stacked strips `{θ : |Φᵀθ − d| ≤ σ}` (elementwise).
#[derive(Debug, Clone, PartialEq)]
pub struct StripBundle {
    orientations: DMatrix<f64>,
    centers: DVector<f64>,
    sizes: DVector<f64>,
}

impl StripBundle {
    pub fn new(
        orientations: DMatrix<f64>,
        centers: DVector<f64>,
        sizes: DVector<f64>,
    ) -> Result<Self, GeometryError> {
        let m = orientations.ncols();
        for v in [centers.len(), sizes.len()] {
            if v != m {
                return Err(GeometryError::DimensionMismatch { expected: m, got: v });
            }
        }
        if (0..m).any(|j| orientations.column(j).iter().all(|v| *v == 0.0)) {
            return Err(GeometryError::ZeroOrientation);
        }
        if let Some(&s) = sizes.iter().find(|s| **s < 0.0) {
            return Err(GeometryError::NegativeSize(s));
        }
        if orientations.iter().chain(centers.iter()).chain(sizes.iter()).any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite("strip bundle"));
        }
        Ok(Self {
            orientations,
            centers,
            sizes,
        })
    }

    pub fn from_strips(strips: &[Strip]) -> Result<Self, GeometryError> {
        let Some(first) = strips.first() else {
            return Err(GeometryError::Malformed("empty strip list".into()));
        };
        let n = first.dim();
        if let Some(s) = strips.iter().find(|s| s.dim() != n) {
            return Err(GeometryError::DimensionMismatch {
                expected: n,
                got: s.dim(),
            });
        }
        let orientations = DMatrix::from_fn(n, strips.len(), |i, j| strips[j].orientation()[i]);
        let centers = DVector::from_iterator(strips.len(), strips.iter().map(Strip::center));
        let sizes = DVector::from_iterator(strips.len(), strips.iter().map(Strip::size));
        Self::new(orientations, centers, sizes)
    }

    /// `Φ`, one orientation per column.
    pub fn orientations(&self) -> &DMatrix<f64> {
        &self.orientations
    }

    pub fn centers(&self) -> &DVector<f64> {
        &self.centers
    }

    pub fn sizes(&self) -> &DVector<f64> {
        &self.sizes
    }

    /// `Σ = diag(σ)`.
    pub fn size_diag(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.sizes)
    }

    pub fn dim(&self) -> usize {
        self.orientations.nrows()
    }

    pub fn len(&self) -> usize {
        self.orientations.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn strip(&self, j: usize) -> Strip {
        Strip::new(self.orientations.column(j).into_owned(), self.centers[j], self.sizes[j])
            .expect("bundle columns are valid strips")
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        (0..self.len()).all(|j| self.strip(j).contains(x, tol))
    }

    /// Same set with unit-norm orientation columns.
    pub fn normalized(&self) -> Self {
        let strips: Vec<Strip> = (0..self.len()).map(|j| self.strip(j).normalized()).collect();
        Self::from_strips(&strips).expect("normalizing keeps strips valid")
    }
}

/// Gain `Λ ∈ ℝⁿˣᵐ'` of the bundle overbound.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaGain(DMatrix<f64>);

impl LambdaGain {
    pub fn new(m: DMatrix<f64>) -> Result<Self, GeometryError> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite("lambda"));
        }
        Ok(Self(m))
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Self(DMatrix::zeros(n, m))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// The `r + 1` overbounds of `z ∩ s` obtained by eliminating one generator.
///
/// Candidate 0 is `z` itself. Candidate `j` moves the center onto the strip
/// along `Hʲ`, removes the `c`-component of every other generator using
/// `Hʲ`, and rescales `Hʲ` to the strip width. When `cᵀHʲ` is negligible the
/// candidate is `z`.
pub fn bravo_candidates(z: &Zonotope, s: &Strip) -> Result<Vec<Zonotope>, GeometryError> {
    if s.dim() != z.dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: z.dim(),
            got: s.dim(),
        });
    }
    let c = s.orientation();
    let p = z.center();
    let h = z.generators();
    let r = z.order();
    let proj = h.transpose() * c;
    let c_norm = c.norm();
    let offset = s.center() - c.dot(p);

    let mut out = Vec::with_capacity(r + 1);
    out.push(z.clone());
    for j in 0..r {
        let hj = h.column(j);
        let cj = proj[j];
        if cj.abs() <= DOT_TOL * c_norm * hj.norm() {
            out.push(z.clone());
            continue;
        }
        let center = p + hj * (offset / cj);
        let mut t = DMatrix::zeros(z.dim(), r);
        for i in 0..r {
            if i == j {
                t.set_column(i, &(hj * (s.size() / cj)));
            } else {
                t.set_column(i, &(h.column(i) - hj * (proj[i] / cj)));
            }
        }
        out.push(Zonotope::new(center, t)?);
    }
    Ok(out)
}

/// Candidate of least exact volume; ties go to the lowest index.
pub fn select_min_volume(cands: &[Zonotope]) -> Result<(Zonotope, usize), GeometryError> {
    let mut best: Option<(usize, f64)> = None;
    for (i, z) in cands.iter().enumerate() {
        let v = z.volume()?;
        if best.is_none_or(|(_, bv)| v < bv) {
            best = Some((i, v));
        }
    }
    let (idx, _) = best.ok_or_else(|| GeometryError::Malformed("empty candidate list".into()))?;
    Ok((cands[idx].clone(), idx))
}

/// `p̂ = p + Λ(d − Φᵀp)`, `Ĥ = [(I − ΛΦᵀ)H  ΛΣ]`.
pub fn lambda_zonotope(z: &Zonotope, bundle: &StripBundle, lam: &LambdaGain) -> Result<Zonotope, GeometryError> {
    let n = z.dim();
    let m = bundle.len();
    let l = lam.matrix();
    if bundle.dim() != n {
        return Err(GeometryError::DimensionMismatch {
            expected: n,
            got: bundle.dim(),
        });
    }
    if l.nrows() != n || l.ncols() != m {
        return Err(GeometryError::DimensionMismatch {
            expected: n * m,
            got: l.nrows() * l.ncols(),
        });
    }
    let phi = bundle.orientations();
    let p = z.center();
    let center = p + l * (bundle.centers() - phi.transpose() * p);
    let contraction = DMatrix::identity(n, n) - l * phi.transpose();
    let r = z.order();
    let mut h = DMatrix::zeros(n, r + m);
    h.columns_mut(0, r).copy_from(&(contraction * z.generators()));
    h.columns_mut(r, m).copy_from(&(l * bundle.size_diag()));
    Zonotope::new(center, h)
}
