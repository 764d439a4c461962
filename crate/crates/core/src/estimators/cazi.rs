use super::{predict, Iteration, MeasurementRecord, StepContext, UpdateStrategy};
use crate::candidates::{bravo_candidates, select_min_volume};
use crate::error::EstimatorError;
use crate::geometry::Zonotope;
use crate::strips::{cone_from_measurement, support_strips};

/// Measurement-by-measurement update: both support strips of each cone
/// generate generator-elimination candidates and the one of least volume
/// is kept. The order never grows, so reduction happens only at prediction.
#[derive(Debug, Clone, Copy, Default)]
pub struct Cazi;

/// Intersects `z` with the cone of measurement `i`. `None` means the
/// measurement was skipped under the skip policy.
pub(crate) fn update_one(
    z: &Zonotope,
    record: &MeasurementRecord,
    i: usize,
    ctx: &mut StepContext<'_>,
) -> Result<Option<Zonotope>, EstimatorError> {
    let cone = cone_from_measurement(record, i)?;
    let strips = match support_strips(z, std::slice::from_ref(&cone)) {
        Ok(s) => s,
        Err(e) => {
            ctx.on_strip_error(e, i)?;
            return Ok(None);
        }
    };
    let mut cands = Vec::with_capacity(2 * (z.order() + 1));
    for s in &strips {
        cands.extend(bravo_candidates(z, &s.strip)?);
    }
    let (best, index) = select_min_volume(&cands)?;
    ctx.iterations.push(Iteration::Candidate {
        measurement: i,
        index,
        volume: best.volume()?,
    });
    Ok(Some(best))
}

impl UpdateStrategy for Cazi {
    fn name(&self) -> &'static str {
        "cazi"
    }

    fn step(&self, prev: &Zonotope, record: &MeasurementRecord, ctx: &mut StepContext<'_>) -> Result<Zonotope, EstimatorError> {
        let mut z = predict(prev, &record.gamma, ctx.max_order)?;
        for i in 0..record.m() {
            if let Some(next) = update_one(&z, record, i, ctx)? {
                z = next;
            }
        }
        Ok(z)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{run, EmptyPolicy, EstimatorConfig};
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn rec(k: usize, y: f64, phi: [f64; 2], u: f64) -> MeasurementRecord {
        MeasurementRecord::new(
            k,
            dvector![y],
            dmatrix![phi[0]; phi[1]],
            dmatrix![phi[0]; phi[1]],
            dvector![-u],
            dvector![u],
            dvector![0.0, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn noninformative_measurement_keeps_prior() {
        let cfg = EstimatorConfig::default();
        // θ₁ + θ₂ ∈ [−100, 100] holds on the whole initial box.
        let t = run(&[rec(0, 0.0, [1.0, 1.0], 100.0)], &cfg).unwrap();
        assert_eq!(t.final_set(), &cfg.initial.zonotope().unwrap());
    }

    #[test]
    fn contains_truth_and_shrinks() {
        let truth = dvector![1.0, 1.0];
        let phis = [[1.0, 0.2], [0.3, 1.0], [1.0, -0.5], [0.7, 0.7]];
        let stream: Vec<_> = phis
            .iter()
            .enumerate()
            .map(|(k, p)| rec(k, p[0] * truth[0] + p[1] * truth[1] + 0.01, *p, 0.05))
            .collect();
        let t = run(&stream, &EstimatorConfig::default()).unwrap();
        let mut prev = 16.0;
        for s in &t.steps {
            assert!(s.afss.contains_point(&truth, 1e-9));
            let v = s.volume.unwrap();
            assert!(v <= prev + 1e-12);
            prev = v;
        }
        assert!(prev < 1.0);
    }

    #[test]
    fn inconsistent_measurement_follows_policy() {
        let bad = rec(0, 100.0, [1.0, 1.0], 0.1);
        assert!(matches!(
            run(std::slice::from_ref(&bad), &EstimatorConfig::default()),
            Err(EstimatorError::EmptyIntersection { k: 0 })
        ));
        let cfg = EstimatorConfig {
            empty_policy: EmptyPolicy::Skip,
            ..Default::default()
        };
        let t = run(&[bad], &cfg).unwrap();
        assert_eq!(t.steps[0].status, super::super::StepStatus::Skipped);
    }
}
