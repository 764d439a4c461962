use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{GeometryError, RecordError};
use crate::geometry::{matrix_from_rows, matrix_to_rows, Zonotope};

/// One time step of data: `m` scalar measurements of an `n`-parameter model.
///
/// Column `i` of the regressor bounds belongs to measurement `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub k: usize,
    pub y: DVector<f64>,
    pub phi_lower: DMatrix<f64>,
    pub phi_upper: DMatrix<f64>,
    pub u_lower: DVector<f64>,
    pub u_upper: DVector<f64>,
    /// Per-parameter bound on `|θₖ − θₖ₋₁|`.
    pub gamma: DVector<f64>,
}

impl MeasurementRecord {
    pub fn new(
        k: usize,
        y: DVector<f64>,
        phi_lower: DMatrix<f64>,
        phi_upper: DMatrix<f64>,
        u_lower: DVector<f64>,
        u_upper: DVector<f64>,
        gamma: DVector<f64>,
    ) -> Result<Self, RecordError> {
        let bad = |msg: String| RecordError::Invalid { k, msg };
        let m = y.len();
        let n = phi_lower.nrows();
        if m == 0 || n == 0 {
            return Err(bad("empty measurement or parameter dimension".into()));
        }
        if phi_lower.shape() != (n, m) || phi_upper.shape() != (n, m) {
            return Err(bad(format!(
                "regressor bounds must be {n}x{m}, got {:?} and {:?}",
                phi_lower.shape(),
                phi_upper.shape()
            )));
        }
        if u_lower.len() != m || u_upper.len() != m {
            return Err(bad(format!("additive bounds must have length {m}")));
        }
        if gamma.len() != n {
            return Err(bad(format!("gamma must have length {n}, got {}", gamma.len())));
        }
        let all = y
            .iter()
            .chain(phi_lower.iter())
            .chain(phi_upper.iter())
            .chain(u_lower.iter())
            .chain(u_upper.iter())
            .chain(gamma.iter());
        if all.clone().any(|v| !v.is_finite()) {
            return Err(bad("non-finite entry".into()));
        }
        if phi_lower.iter().zip(phi_upper.iter()).any(|(l, u)| l > u) {
            return Err(bad("phi_l exceeds phi_u".into()));
        }
        if u_lower.iter().zip(u_upper.iter()).any(|(l, u)| l > u) {
            return Err(bad("u_l exceeds u_u".into()));
        }
        if gamma.iter().any(|g| *g < 0.0) {
            return Err(bad("gamma must be nonnegative".into()));
        }
        Ok(Self {
            k,
            y,
            phi_lower,
            phi_upper,
            u_lower,
            u_upper,
            gamma,
        })
    }

    pub fn n(&self) -> usize {
        self.phi_lower.nrows()
    }

    pub fn m(&self) -> usize {
        self.y.len()
    }

    /// Whether `θ` satisfies every cone of this record.
    pub fn consistent_with(&self, theta: &DVector<f64>, tol: f64) -> bool {
        (0..self.m()).all(|i| {
            let hi = self.phi_upper.column(i).dot(theta);
            let lo = self.phi_lower.column(i).dot(theta);
            hi >= self.y[i] - self.u_upper[i] - tol && lo <= self.y[i] - self.u_lower[i] + tol
        })
    }
}

/// Shifts the data so that `θ̄ = θ + d` is the unknown.
///
/// With `θ + d ≥ 0` the bounds `φˡᵀθ̄ ≤ φᵀθ̄ ≤ φᵘᵀθ̄` hold again, and the
/// offset `φᵀd` is absorbed into the additive bounds.
pub fn transform_nonneg(record: &MeasurementRecord, d: &DVector<f64>) -> Result<MeasurementRecord, GeometryError> {
    if d.len() != record.n() {
        return Err(GeometryError::DimensionMismatch {
            expected: record.n(),
            got: d.len(),
        });
    }
    let mut out = record.clone();
    out.u_upper = &record.u_upper - record.phi_lower.transpose() * d;
    out.u_lower = &record.u_lower - record.phi_upper.transpose() * d;
    Ok(out)
}

/// Maps a set for `θ̄` back to `θ`.
pub fn untransform(z: &Zonotope, d: &DVector<f64>) -> Result<Zonotope, GeometryError> {
    z.translate(&-d)
}

#[derive(Serialize, Deserialize)]
struct RecordJson {
    k: usize,
    y: Vec<f64>,
    phi_l: Vec<Vec<f64>>,
    phi_u: Vec<Vec<f64>>,
    u_l: Vec<f64>,
    u_u: Vec<f64>,
    gamma: Vec<f64>,
}

impl Serialize for MeasurementRecord {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RecordJson {
            k: self.k,
            y: self.y.iter().copied().collect(),
            phi_l: matrix_to_rows(&self.phi_lower),
            phi_u: matrix_to_rows(&self.phi_upper),
            u_l: self.u_lower.iter().copied().collect(),
            u_u: self.u_upper.iter().copied().collect(),
            gamma: self.gamma.iter().copied().collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MeasurementRecord {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let j = RecordJson::deserialize(d)?;
        let n = j.phi_l.len();
        let phi_l = matrix_from_rows(&j.phi_l, n).map_err(D::Error::custom)?;
        let phi_u = matrix_from_rows(&j.phi_u, j.phi_u.len()).map_err(D::Error::custom)?;
        MeasurementRecord::new(
            j.k,
            DVector::from_vec(j.y),
            phi_l,
            phi_u,
            DVector::from_vec(j.u_l),
            DVector::from_vec(j.u_u),
            DVector::from_vec(j.gamma),
        )
        .map_err(D::Error::custom)
    }
}
