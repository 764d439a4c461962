use super::cazi::update_one;
use super::{predict, MeasurementRecord, StepContext, UpdateStrategy};
use crate::error::EstimatorError;
use crate::geometry::Zonotope;

/// Interval baseline: the single-measurement update followed by the
/// interval hull after every measurement. The hull is met with the prior
/// box, since both contain the feasible set.
#[derive(Debug, Clone, Copy, Default)]
pub struct BoxBaseline;

impl UpdateStrategy for BoxBaseline {
    fn name(&self) -> &'static str {
        "box"
    }

    fn step(&self, prev: &Zonotope, record: &MeasurementRecord, ctx: &mut StepContext<'_>) -> Result<Zonotope, EstimatorError> {
        let mut z = predict(prev, &record.gamma, ctx.max_order)?.reduce_to_interval_hull();
        for i in 0..record.m() {
            if let Some(next) = update_one(&z, record, i, ctx)? {
                z = meet(&z, &next.reduce_to_interval_hull())?;
            }
        }
        Ok(z)
    }
}

/// Intersection of two interval hulls. Falls back to `b` when rounding
/// leaves the intersection empty.
fn meet(a: &Zonotope, b: &Zonotope) -> Result<Zonotope, EstimatorError> {
    let (al, au) = a.interval_bounds();
    let (bl, bu) = b.interval_bounds();
    let lower = al.zip_map(&bl, f64::max);
    let upper = au.zip_map(&bu, f64::min);
    if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
        return Ok(b.clone());
    }
    Ok(Zonotope::from_bounds(lower.as_slice(), upper.as_slice())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn meet_of_boxes() {
        let a = Zonotope::from_bounds(&[0.0, 0.0], &[2.0, 2.0]).unwrap();
        let b = Zonotope::from_bounds(&[1.0, -1.0], &[3.0, 1.5]).unwrap();
        let m = meet(&a, &b).unwrap();
        assert_eq!(m.interval_bounds(), (dvector![1.0, 0.0], dvector![2.0, 1.5]));
    }
}
