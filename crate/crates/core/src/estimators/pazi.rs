use nalgebra::DMatrix;

use super::{predict, rate_matrix, Iteration, MeasurementRecord, StepContext, UpdateStrategy};
use crate::candidates::{lambda_zonotope, StripBundle};
use crate::error::{EstimatorError, LmiError};
use crate::geometry::{Strip, Zonotope, P_RADIUS_MAX_ORDER};
use crate::lmi::{solve_p2, verify_contraction, LmiDump, P2Solution};
use crate::strips::{cones_from_record, support_strips};

/// Mini-batch update: the support strips of all measurements of a batch are
/// bundled and a gain from the contraction LMI maps the prior onto a
/// zonotope covering the intersection. Batches with no LMI solution keep
/// their prior.
#[derive(Debug, Clone, Copy, Default)]
pub struct Pazi;

impl UpdateStrategy for Pazi {
    fn name(&self) -> &'static str {
        "pazi"
    }

    fn step(&self, prev: &Zonotope, record: &MeasurementRecord, ctx: &mut StepContext<'_>) -> Result<Zonotope, EstimatorError> {
        let n = prev.dim();
        // The first solved batch sees the unreduced prediction, so the LMI
        // accounts for the rate term through Γ and the contraction bound
        // refers to the previous estimate.
        let mut z = predict(prev, &record.gamma, usize::MAX)?;
        let mut reference = prev.clone();
        let mut gamma = rate_matrix(&record.gamma);
        let cones = cones_from_record(record)?;
        let cfg = &ctx.config.contraction;

        for (batch, chunk) in cones.chunks(ctx.config.batch_size).enumerate() {
            let strips = match support_strips(&z, chunk) {
                Ok(s) => s,
                Err(e) => {
                    ctx.on_strip_error(e, batch)?;
                    continue;
                }
            };
            let normalized: Vec<Strip> = strips.iter().map(|s| s.strip.normalized()).collect();
            let bundle = StripBundle::from_strips(&normalized)?;
            let sol = match solve_p2(&z, &bundle, &gamma, cfg) {
                Ok(sol) => sol,
                Err(LmiError::Solver(message)) if ctx.config.empty_policy == super::EmptyPolicy::Skip => {
                    log::warn!("step {}: batch {batch}: {message}", ctx.k);
                    ctx.iterations.push(Iteration::SolverFailure { batch, message });
                    continue;
                }
                Err(source) => return Err(EstimatorError::Lmi { k: ctx.k, source }),
            };
            if ctx.config.dump_lmi {
                ctx.lmi.push(LmiDump::new(ctx.k, batch, &bundle, &gamma, cfg, &sol));
            }
            match &sol {
                P2Solution::Infeasible { epsilon, .. } => {
                    log::debug!("step {}: batch {batch}: LMI infeasible, prior kept", ctx.k);
                    ctx.iterations.push(Iteration::Batch {
                        batch,
                        status: sol.status(),
                        tau: None,
                        epsilon: *epsilon,
                        p_radius: None,
                        contraction: None,
                    });
                }
                P2Solution::Optimal(opt) => {
                    let next = lambda_zonotope(&z, &bundle, &opt.lambda)?;
                    let checkable = reference.order().max(next.order()) <= P_RADIUS_MAX_ORDER;
                    let (p_radius, contraction) = if checkable {
                        let before = reference.p_radius(&opt.p)?;
                        let after = next.p_radius(&opt.p)?;
                        (
                            Some((before, after)),
                            Some(verify_contraction(&reference, &next, opt, cfg.beta)?),
                        )
                    } else {
                        (None, None)
                    };
                    ctx.iterations.push(Iteration::Batch {
                        batch,
                        status: sol.status(),
                        tau: Some(opt.tau),
                        epsilon: opt.epsilon,
                        p_radius,
                        contraction,
                    });
                    z = next.reduce_order(ctx.max_order);
                    reference = z.clone();
                    gamma = DMatrix::zeros(n, n);
                }
            }
        }
        Ok(z)
    }
}
