//! Per-measurement information sets and their minimal support strips.

use nalgebra::DVector;

use crate::candidates::StripBundle;
use crate::error::{GeometryError, StripError};
use crate::estimators::MeasurementRecord;
use crate::geometry::{Halfspace, Strip, Zonotope};
pub use crate::lp::{lp_max_linear, LpOptimum};

/// `{θ : lower_orientationᵀθ ≥ lower_rhs, upper_orientationᵀθ ≤ upper_rhs}`.
///
/// For measurement `i` the lower side uses the upper regressor bound and
/// `y − uᵘ`, the upper side the lower regressor bound and `y − uˡ`. When the
/// two bounding hyperplanes intersect the set is a convex cone.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeConstraint {
    pub lower_orientation: DVector<f64>,
    pub lower_rhs: f64,
    pub upper_orientation: DVector<f64>,
    pub upper_rhs: f64,
}

impl ConeConstraint {
    pub fn new(
        lower_orientation: DVector<f64>,
        lower_rhs: f64,
        upper_orientation: DVector<f64>,
        upper_rhs: f64,
    ) -> Result<Self, GeometryError> {
        if lower_orientation.iter().all(|v| *v == 0.0) || upper_orientation.iter().all(|v| *v == 0.0) {
            return Err(GeometryError::ZeroOrientation);
        }
        if lower_orientation.len() != upper_orientation.len() {
            return Err(GeometryError::DimensionMismatch {
                expected: lower_orientation.len(),
                got: upper_orientation.len(),
            });
        }
        Ok(Self {
            lower_orientation,
            lower_rhs,
            upper_orientation,
            upper_rhs,
        })
    }

    pub fn dim(&self) -> usize {
        self.lower_orientation.len()
    }

    /// The two defining halfspaces in `aᵀθ ≤ b` form.
    pub fn halfspaces(&self) -> [Halfspace; 2] {
        [
            Halfspace::new(-&self.lower_orientation, -self.lower_rhs),
            Halfspace::new(self.upper_orientation.clone(), self.upper_rhs),
        ]
    }

    pub fn contains(&self, theta: &DVector<f64>, tol: f64) -> bool {
        self.halfspaces().iter().all(|h| h.contains(theta, tol))
    }
}

/// One minimal support strip together with its certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportStripResult {
    pub strip: Strip,
    /// Distance from the cone hyperplane to the farthest feasible point.
    pub delta: f64,
    /// A point on the defining hyperplane.
    pub anchor: DVector<f64>,
    /// The LP maximizer; it lies on the far boundary of the strip.
    pub argmax: DVector<f64>,
}

/// Cone of measurement `i` (zero-based) of `record`.
pub fn cone_from_measurement(record: &MeasurementRecord, i: usize) -> Result<ConeConstraint, StripError> {
    let m = record.m();
    if i >= m {
        return Err(StripError::IndexOutOfRange { index: i, m });
    }
    let phi_u = record.phi_upper.column(i).into_owned();
    let phi_l = record.phi_lower.column(i).into_owned();
    if phi_u.iter().all(|v| *v == 0.0) || phi_l.iter().all(|v| *v == 0.0) {
        return Err(StripError::DegenerateMeasurement { index: i });
    }
    let y = record.y[i];
    Ok(ConeConstraint::new(
        phi_u,
        y - record.u_upper[i],
        phi_l,
        y - record.u_lower[i],
    )?)
}

/// All cones of a record.
pub fn cones_from_record(record: &MeasurementRecord) -> Result<Vec<ConeConstraint>, StripError> {
    (0..record.m()).map(|i| cone_from_measurement(record, i)).collect()
}

/// Two support strips per cone, each bounding `z ∩ (all cones)`.
///
/// Lower side: `δ₁ = max (φ₁ᵀθ − b₁)/‖φ₁‖`, strip `b₁ ≤ φ₁ᵀθ ≤ b₁ + δ₁‖φ₁‖`.
/// Upper side: `δ₂ = max (b₂ − φ₂ᵀθ)/‖φ₂‖`, strip `b₂ − δ₂‖φ₂‖ ≤ φ₂ᵀθ ≤ b₂`,
/// i.e. centered on the feasible side of its hyperplane.
pub fn support_strips(z: &Zonotope, cones: &[ConeConstraint]) -> Result<Vec<SupportStripResult>, StripError> {
    let constraints: Vec<Halfspace> = cones.iter().flat_map(|c| c.halfspaces()).collect();
    let mut out = Vec::with_capacity(2 * cones.len());
    for cone in cones {
        if cone.dim() != z.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: z.dim(),
                got: cone.dim(),
            }
            .into());
        }
        let phi1 = &cone.lower_orientation;
        let norm1 = phi1.norm();
        let opt = lp_max_linear(phi1, z, &constraints)?;
        let delta1 = ((opt.value - cone.lower_rhs) / norm1).max(0.0);
        let half1 = 0.5 * delta1 * norm1;
        out.push(SupportStripResult {
            strip: Strip::new(phi1.clone(), cone.lower_rhs + half1, half1)?,
            delta: delta1,
            anchor: phi1 * (cone.lower_rhs / (norm1 * norm1)),
            argmax: opt.argmax,
        });

        let phi2 = &cone.upper_orientation;
        let norm2 = phi2.norm();
        let opt = lp_max_linear(&-phi2, z, &constraints)?;
        let delta2 = ((cone.upper_rhs + opt.value) / norm2).max(0.0);
        let half2 = 0.5 * delta2 * norm2;
        out.push(SupportStripResult {
            strip: Strip::new(phi2.clone(), cone.upper_rhs - half2, half2)?,
            delta: delta2,
            anchor: phi2 * (cone.upper_rhs / (norm2 * norm2)),
            argmax: opt.argmax,
        });
    }
    Ok(out)
}

/// Stacks strips into `(Φ, d, σ)`.
pub fn bundle(strips: &[Strip]) -> Result<StripBundle, GeometryError> {
    StripBundle::from_strips(strips)
}
