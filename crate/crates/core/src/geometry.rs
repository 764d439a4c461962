//! Zonotopes, strips and P-matrices.
//!
//! A zonotope `p ⊕ H𝐁ʳ` is the image of the unit hypercube `𝐁ʳ` under the
//! affine map `w ↦ p + Hw`. Everything here is immutable; every operation
//! returns a new value.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::GeometryError;
use crate::lp;

/// Generator columns shorter than this are dropped at construction.
pub const GENERATOR_DROP_TOL: f64 = 1e-14;
/// Default slack for [`Zonotope::contains_point`], in hypercube units.
pub const DEFAULT_CONTAINMENT_TOL: f64 = 1e-9;
/// Largest dimension for which [`Zonotope::volume`] is evaluated exactly.
pub const VOLUME_MAX_DIM: usize = 4;
/// Largest order for which [`Zonotope::p_radius`] enumerates vertices.
pub const P_RADIUS_MAX_ORDER: usize = 20;

/// Halfspace `{x : normalᵀx ≤ offset}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    pub normal: DVector<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: DVector<f64>, offset: f64) -> Self {
        Self { normal, offset }
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.normal.dot(x) <= self.offset + tol * self.normal.norm().max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Zonotope {
    center: DVector<f64>,
    generators: DMatrix<f64>,
}

impl Zonotope {
    /// Builds `center ⊕ generators·𝐁ʳ`, dropping negligible generator columns.
    pub fn new(center: DVector<f64>, generators: DMatrix<f64>) -> Result<Self, GeometryError> {
        let n = center.len();
        if n == 0 {
            return Err(GeometryError::EmptyDimension);
        }
        if generators.nrows() != n {
            return Err(GeometryError::DimensionMismatch {
                expected: n,
                got: generators.nrows(),
            });
        }
        if center.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite("center"));
        }
        if generators.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite("generators"));
        }
        let keep: Vec<usize> = (0..generators.ncols())
            .filter(|&j| generators.column(j).norm() >= GENERATOR_DROP_TOL)
            .collect();
        let generators = if keep.len() == generators.ncols() {
            generators
        } else {
            generators.select_columns(&keep)
        };
        Ok(Self { center, generators })
    }

    /// The singleton `{center}`.
    pub fn point(center: DVector<f64>) -> Result<Self, GeometryError> {
        let n = center.len();
        Self::new(center, DMatrix::zeros(n, 0))
    }

    /// Axis-aligned box `center ± half_widths`.
    pub fn from_half_widths(
        center: DVector<f64>,
        half_widths: &[f64],
    ) -> Result<Self, GeometryError> {
        if half_widths.len() != center.len() {
            return Err(GeometryError::DimensionMismatch {
                expected: center.len(),
                got: half_widths.len(),
            });
        }
        if let Some(&w) = half_widths.iter().find(|w| **w < 0.0) {
            return Err(GeometryError::NegativeSize(w));
        }
        let g = DMatrix::from_diagonal(&DVector::from_column_slice(half_widths));
        Self::new(center, g)
    }

    /// Axis-aligned box `[lower, upper]`.
    pub fn from_bounds(lower: &[f64], upper: &[f64]) -> Result<Self, GeometryError> {
        if lower.len() != upper.len() {
            return Err(GeometryError::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        let center = DVector::from_iterator(
            lower.len(),
            lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)),
        );
        let half: Vec<f64> = lower.iter().zip(upper).map(|(l, u)| 0.5 * (u - l)).collect();
        Self::from_half_widths(center, &half)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn order(&self) -> usize {
        self.generators.ncols()
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn generators(&self) -> &DMatrix<f64> {
        &self.generators
    }

    pub fn translate(&self, offset: &DVector<f64>) -> Result<Self, GeometryError> {
        self.check_dim(offset.len())?;
        Ok(Self {
            center: &self.center + offset,
            generators: self.generators.clone(),
        })
    }

    /// `self ⊕ diag(gamma)·𝐁ⁿ`.
    pub fn minkowski_sum_box(&self, gamma: &[f64]) -> Result<Self, GeometryError> {
        self.check_dim(gamma.len())?;
        if let Some(&g) = gamma.iter().find(|g| **g < 0.0) {
            return Err(GeometryError::NegativeSize(g));
        }
        let n = self.dim();
        let r = self.order();
        let mut h = DMatrix::zeros(n, r + n);
        h.columns_mut(0, r).copy_from(&self.generators);
        for (i, &g) in gamma.iter().enumerate() {
            h[(i, r + i)] = g;
        }
        Self::new(self.center.clone(), h)
    }

    /// Minkowski sum by generator concatenation.
    pub fn minkowski_sum(&self, other: &Zonotope) -> Result<Self, GeometryError> {
        self.check_dim(other.dim())?;
        let n = self.dim();
        let (r1, r2) = (self.order(), other.order());
        let mut h = DMatrix::zeros(n, r1 + r2);
        h.columns_mut(0, r1).copy_from(&self.generators);
        h.columns_mut(r1, r2).copy_from(&other.generators);
        Self::new(&self.center + &other.center, h)
    }

    /// Support function `cᵀp + Σⱼ |cᵀHʲ|`.
    pub fn support_value(&self, direction: &DVector<f64>) -> Result<f64, GeometryError> {
        self.check_dim(direction.len())?;
        if direction.iter().all(|v| *v == 0.0) {
            return Err(GeometryError::ZeroDirection);
        }
        let proj = self.generators.transpose() * direction;
        Ok(direction.dot(&self.center) + proj.iter().map(|v| v.abs()).sum::<f64>())
    }

    /// Point of the zonotope attaining the support value in `direction`.
    pub fn support_point(&self, direction: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
        self.check_dim(direction.len())?;
        let proj = self.generators.transpose() * direction;
        let w = proj.map(|v| if v > 0.0 { 1.0 } else if v < 0.0 { -1.0 } else { 0.0 });
        Ok(&self.center + &self.generators * w)
    }

    /// True iff `x = p + Hw` for some `‖w‖∞ ≤ 1 + tol` (solved as an LP).
    pub fn contains_point(&self, x: &DVector<f64>, tol: f64) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        lp::hypercube_gauge(self, x).is_some_and(|g| g <= 1.0 + tol)
    }

    /// Exact volume `2ⁿ Σ_J |det H_J|` over all n-column minors.
    pub fn volume(&self) -> Result<f64, GeometryError> {
        let n = self.dim();
        if n > VOLUME_MAX_DIM {
            return Err(GeometryError::GuardExceeded {
                what: "volume dimension",
                value: n,
                limit: VOLUME_MAX_DIM,
            });
        }
        let r = self.order();
        if r < n {
            return Ok(0.0);
        }
        let sum: f64 = (0..r)
            .combinations(n)
            .map(|cols| self.generators.select_columns(&cols).determinant().abs())
            .sum();
        Ok(2f64.powi(n as i32) * sum)
    }

    /// P-radius `max_{w∈𝐁ʳ} wᵀHᵀPHw`, by enumerating hypercube vertices.
    ///
    /// Antipodal vertices give the same value, so only `2^(r-1)` are visited,
    /// in Gray-code order so each step is a rank-one update of `Hw`.
    pub fn p_radius(&self, p: &PMatrix) -> Result<f64, GeometryError> {
        self.check_dim(p.dim())?;
        let r = self.order();
        if r > P_RADIUS_MAX_ORDER {
            return Err(GeometryError::GuardExceeded {
                what: "p-radius order",
                value: r,
                limit: P_RADIUS_MAX_ORDER,
            });
        }
        if r == 0 {
            return Ok(0.0);
        }
        let h = &self.generators;
        let pm = p.matrix();
        let mut signs = vec![1.0f64; r];
        let mut v: DVector<f64> = h.column_sum();
        let mut best = (pm * &v).dot(&v);
        let free = r - 1;
        for step in 1u64..(1u64 << free) {
            let j = step.trailing_zeros() as usize + 1;
            signs[j] = -signs[j];
            v.axpy(2.0 * signs[j], &h.column(j), 1.0);
            let val = (pm * &v).dot(&v);
            if val > best {
                best = val;
            }
        }
        Ok(best)
    }

    /// Smallest axis-aligned box containing the zonotope, as an order-n zonotope.
    pub fn reduce_to_interval_hull(&self) -> Self {
        let half: Vec<f64> = self
            .generators
            .row_iter()
            .map(|row| row.iter().map(|v| v.abs()).sum())
            .collect();
        Self::from_half_widths(self.center.clone(), &half)
            .expect("row sums are finite and nonnegative")
    }

    /// Limits the order to `max_order` (at least `n`).
    ///
    /// The `max_order - n` generators with the largest `‖h‖₁ − ‖h‖∞` are kept
    /// and the remainder is replaced by its interval hull. With
    /// `max_order == n` this is exactly [`Zonotope::reduce_to_interval_hull`].
    pub fn reduce_order(&self, max_order: usize) -> Self {
        let n = self.dim();
        let max_order = max_order.max(n);
        let r = self.order();
        if r <= max_order {
            return self.clone();
        }
        let keep = max_order - n;
        let score = |j: usize| {
            let c = self.generators.column(j);
            c.iter().map(|v| v.abs()).sum::<f64>() - c.amax()
        };
        let mut idx: Vec<usize> = (0..r).collect();
        idx.sort_by(|a, b| score(*b).total_cmp(&score(*a)).then(a.cmp(b)));
        let (kept, rest) = idx.split_at(keep);
        let mut kept = kept.to_vec();
        kept.sort_unstable();
        let rest_hull: Vec<f64> = (0..n)
            .map(|i| rest.iter().map(|&j| self.generators[(i, j)].abs()).sum())
            .collect();
        let mut h = DMatrix::zeros(n, keep + n);
        for (dst, &j) in kept.iter().enumerate() {
            h.set_column(dst, &self.generators.column(j));
        }
        for (i, w) in rest_hull.iter().enumerate() {
            h[(i, keep + i)] = *w;
        }
        Self::new(self.center.clone(), h).expect("finite generators")
    }

    /// Per-coordinate bounds of the interval hull.
    pub fn interval_bounds(&self) -> (DVector<f64>, DVector<f64>) {
        let half = DVector::from_iterator(
            self.dim(),
            self.generators
                .row_iter()
                .map(|row| row.iter().map(|v| v.abs()).sum::<f64>()),
        );
        (&self.center - &half, &self.center + &half)
    }

    /// `p + Hw` for `w` drawn uniformly from `𝐁ʳ` using a seeded generator.
    pub fn sample_point(&self, seed: u64) -> DVector<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let w = DVector::from_fn(self.order(), |_, _| rng.gen_range(-1.0..=1.0));
        &self.center + &self.generators * w
    }

    /// Boundary points of a planar zonotope, one support point per direction
    /// on an evenly spaced fan of `count` directions, consecutive duplicates
    /// removed.
    pub fn boundary_points(&self, count: usize) -> Result<Vec<[f64; 2]>, GeometryError> {
        if self.dim() != 2 {
            return Err(GeometryError::DimensionMismatch {
                expected: 2,
                got: self.dim(),
            });
        }
        let mut out: Vec<[f64; 2]> = Vec::with_capacity(count);
        for k in 0..count {
            let a = std::f64::consts::TAU * (k as f64 + 0.5) / count as f64;
            let s = self.support_point(&DVector::from_vec(vec![a.cos(), a.sin()]))?;
            let pt = [s[0], s[1]];
            if out.last() != Some(&pt) {
                out.push(pt);
            }
        }
        if out.len() > 1 && out.first() == out.last() {
            out.pop();
        }
        Ok(out)
    }

    fn check_dim(&self, got: usize) -> Result<(), GeometryError> {
        if got != self.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }
}

/// Wire form: `{"p": [..], "H": [[..row-major..]]}`.
#[derive(Serialize, Deserialize)]
struct ZonotopeJson {
    p: Vec<f64>,
    #[serde(rename = "H")]
    h: Vec<Vec<f64>>,
}

impl Serialize for Zonotope {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ZonotopeJson {
            p: self.center.iter().copied().collect(),
            h: self
                .generators
                .row_iter()
                .map(|row| row.iter().copied().collect())
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Zonotope {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = ZonotopeJson::deserialize(deserializer)?;
        let n = raw.p.len();
        let generators = matrix_from_rows(&raw.h, n).map_err(serde::de::Error::custom)?;
        Zonotope::new(DVector::from_vec(raw.p), generators).map_err(serde::de::Error::custom)
    }
}

/// Row-major nested vectors into an `nrows × c` matrix. An empty outer list
/// means zero columns.
pub(crate) fn matrix_from_rows(rows: &[Vec<f64>], nrows: usize) -> Result<DMatrix<f64>, GeometryError> {
    if rows.is_empty() {
        return Ok(DMatrix::zeros(nrows, 0));
    }
    if rows.len() != nrows {
        return Err(GeometryError::Malformed(format!(
            "expected {nrows} rows, got {}",
            rows.len()
        )));
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(GeometryError::Malformed("ragged rows".into()));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub(crate) fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Strip `{θ : |cᵀθ − d| ≤ σ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Strip {
    orientation: DVector<f64>,
    center: f64,
    size: f64,
}

impl Strip {
    pub fn new(orientation: DVector<f64>, center: f64, size: f64) -> Result<Self, GeometryError> {
        if orientation.iter().any(|v| !v.is_finite()) || !center.is_finite() || !size.is_finite() {
            return Err(GeometryError::NonFinite("strip"));
        }
        if orientation.iter().all(|v| *v == 0.0) {
            return Err(GeometryError::ZeroOrientation);
        }
        if size < 0.0 {
            return Err(GeometryError::NegativeSize(size));
        }
        Ok(Self {
            orientation,
            center,
            size,
        })
    }

    pub fn orientation(&self) -> &DVector<f64> {
        &self.orientation
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn size(&self) -> f64 {
        self.size
    }

    pub fn dim(&self) -> usize {
        self.orientation.len()
    }

    /// Membership with slack `tol` measured along the unit normal.
    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        (self.orientation.dot(x) - self.center).abs() <= self.size + tol * self.orientation.norm()
    }

    /// Same set, unit-norm orientation.
    pub fn normalized(&self) -> Self {
        let s = self.orientation.norm();
        Self {
            orientation: &self.orientation / s,
            center: self.center / s,
            size: self.size / s,
        }
    }
}

/// Symmetric positive semidefinite weight matrix of a P-radius.
#[derive(Debug, Clone, PartialEq)]
pub struct PMatrix(DMatrix<f64>);

impl PMatrix {
    pub const SYMMETRY_TOL: f64 = 1e-12;
    pub const PSD_TOL: f64 = 1e-9;

    pub fn new(m: DMatrix<f64>) -> Result<Self, GeometryError> {
        if !m.is_square() {
            return Err(GeometryError::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite("P"));
        }
        let asym = (&m - m.transpose()).amax();
        if asym > Self::SYMMETRY_TOL * m.amax().max(1.0) {
            return Err(GeometryError::NotSymmetric(asym));
        }
        let sym = (&m + m.transpose()) * 0.5;
        let min_eig = min_eigenvalue(&sym);
        if min_eig < -Self::PSD_TOL {
            return Err(GeometryError::NotPsd(min_eig));
        }
        Ok(Self(sym))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.0)
    }
}

pub(crate) fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}
