//! Linear programs posed in the hypercube coordinates of a zonotope.
//!
//! A point of `p ⊕ H𝐁ʳ` is written `p + Hw` with `‖w‖∞ ≤ 1`, so optimizing a
//! linear function over the zonotope intersected with halfspaces becomes an
//! LP with `r` box-bounded variables and one row per halfspace. No facet
//! enumeration of the zonotope is ever needed.

use microlp::{ComparisonOp, OptimizationDirection, Problem, SolveOutcome};
use nalgebra::DVector;

use crate::error::LpError;
use crate::geometry::{Halfspace, Zonotope};

/// Rows whose coefficients all vanish are checked against this slack instead
/// of being handed to the solver.
const ZERO_ROW_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LpOptimum {
    /// `objectiveᵀ argmax`.
    pub value: f64,
    /// Maximizer in parameter space, `p + Hw*`.
    pub argmax: DVector<f64>,
    /// Hypercube coordinates `w*` of the maximizer.
    pub weights: DVector<f64>,
}

/// Maximizes `objectiveᵀθ` over `z ∩ {θ : aᵢᵀθ ≤ bᵢ}`.
///
/// Returns [`LpError::Infeasible`] when the intersection is empty.
pub fn lp_max_linear(
    objective: &DVector<f64>,
    z: &Zonotope,
    constraints: &[Halfspace],
) -> Result<LpOptimum, LpError> {
    let n = z.dim();
    if objective.len() != n || constraints.iter().any(|h| h.normal.len() != n) {
        return Err(LpError::Solver("dimension mismatch".into()));
    }
    let h = z.generators();
    let p = z.center();
    let r = z.order();

    let obj_norm = objective.norm();
    let obj_scale = if obj_norm > 0.0 { obj_norm } else { 1.0 };
    let obj_w = (h.transpose() * objective) / obj_scale;

    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = (0..r)
        .map(|j| problem.add_var(obj_w[j], (-1.0, 1.0)))
        .collect();

    for hs in constraints {
        let a_norm = hs.normal.norm();
        if a_norm == 0.0 {
            if hs.offset < -ZERO_ROW_TOL {
                return Err(LpError::Infeasible);
            }
            continue;
        }
        let row = (h.transpose() * &hs.normal) / a_norm;
        let rhs = (hs.offset - hs.normal.dot(p)) / a_norm;
        let terms: Vec<_> = vars
            .iter()
            .zip(row.iter())
            .filter(|(_, c)| c.abs() > 0.0)
            .map(|(v, c)| (*v, *c))
            .collect();
        if terms.is_empty() {
            if rhs < -ZERO_ROW_TOL {
                return Err(LpError::Infeasible);
            }
            continue;
        }
        problem.add_constraint(terms, ComparisonOp::Le, rhs);
    }

    let weights = if r == 0 {
        DVector::zeros(0)
    } else {
        let solution = match problem.solve() {
            Ok(SolveOutcome::Solution(s)) => s,
            Ok(SolveOutcome::Interrupted(_)) => {
                return Err(LpError::Solver("solve interrupted".into()))
            }
            Err(microlp::Error::Infeasible) => return Err(LpError::Infeasible),
            Err(microlp::Error::Unbounded) => return Err(LpError::Unbounded),
            Err(e) => return Err(LpError::Solver(e.to_string())),
        };
        DVector::from_iterator(
            r,
            vars.iter()
                .map(|v| solution.var_value_raw(*v).clamp(-1.0, 1.0)),
        )
    };

    let argmax = p + h * &weights;
    Ok(LpOptimum {
        value: objective.dot(&argmax),
        argmax,
        weights,
    })
}

/// Smallest `‖w‖∞` with `Hw = x − p`, or `None` when `x − p` is outside the
/// range of `H`.
pub(crate) fn hypercube_gauge(z: &Zonotope, x: &DVector<f64>) -> Option<f64> {
    let h = z.generators();
    let target = x - z.center();
    let r = z.order();
    let scale = target.amax().max(h.amax()).max(1.0);
    if r == 0 {
        return (target.amax() <= ZERO_ROW_TOL * scale).then_some(0.0);
    }

    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let w: Vec<_> = (0..r)
        .map(|_| problem.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY)))
        .collect();
    let t = problem.add_var(1.0, (0.0, f64::INFINITY));
    for row in 0..z.dim() {
        let terms: Vec<_> = w
            .iter()
            .enumerate()
            .filter(|(j, _)| h[(row, *j)] != 0.0)
            .map(|(j, v)| (*v, h[(row, j)] / scale))
            .collect();
        if terms.is_empty() {
            if target[row].abs() > ZERO_ROW_TOL * scale {
                return None;
            }
            continue;
        }
        problem.add_constraint(terms, ComparisonOp::Eq, target[row] / scale);
    }
    for v in &w {
        problem.add_constraint([(*v, 1.0), (t, -1.0)], ComparisonOp::Le, 0.0);
        problem.add_constraint([(*v, 1.0), (t, 1.0)], ComparisonOp::Ge, 0.0);
    }
    match problem.solve() {
        Ok(SolveOutcome::Solution(s)) => Some(s.var_value_raw(t)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn fig2() -> Zonotope {
        Zonotope::new(
            dvector![1.0, 3.0],
            dmatrix![0.3212, 0.2268, 0.5235; 0.0, 0.2063, 0.2467],
        )
        .unwrap()
    }

    #[test]
    fn unit_box_unconstrained() {
        let z = Zonotope::from_half_widths(dvector![0.0, 0.0], &[1.0, 1.0]).unwrap();
        let opt = lp_max_linear(&dvector![1.0, 0.0], &z, &[]).unwrap();
        assert!((opt.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matches_support_function_without_constraints() {
        let z = fig2();
        let c = dvector![1.0, 3.0];
        let opt = lp_max_linear(&c, &z, &[]).unwrap();
        assert!((opt.value - z.support_value(&c).unwrap()).abs() < 1e-9);
        assert!((opt.value - 12.4305).abs() < 1e-9);
    }

    #[test]
    fn disjoint_constraint_is_infeasible() {
        let z = Zonotope::from_half_widths(dvector![0.0, 0.0], &[1.0, 1.0]).unwrap();
        let hs = Halfspace::new(dvector![1.0, 0.0], -10.0);
        assert_eq!(
            lp_max_linear(&dvector![0.0, 1.0], &z, &[hs]),
            Err(LpError::Infeasible)
        );
    }

    #[test]
    fn constraint_cuts_the_box() {
        let z = Zonotope::from_half_widths(dvector![0.0, 0.0], &[1.0, 1.0]).unwrap();
        let hs = Halfspace::new(dvector![1.0, 1.0], 0.5);
        let opt = lp_max_linear(&dvector![1.0, 0.0], &z, &[hs]).unwrap();
        assert!((opt.value - 1.0).abs() < 1e-9);
        assert!(opt.argmax[1] <= -0.5 + 1e-9);
    }

    #[test]
    fn gauge_of_center_and_vertex() {
        let z = fig2();
        assert!(hypercube_gauge(&z, z.center()).unwrap() < 1e-12);
        let vertex = z.center() + z.generators() * dvector![1.0, -1.0, 1.0];
        assert!(hypercube_gauge(&z, &vertex).unwrap() <= 1.0 + 1e-9);
    }

    #[test]
    fn gauge_rejects_point_off_flat_zonotope() {
        let z = Zonotope::new(dvector![0.0, 0.0], dmatrix![1.0; 1.0]).unwrap();
        assert!(hypercube_gauge(&z, &dvector![0.5, -0.5]).is_none());
        assert!(hypercube_gauge(&z, &dvector![0.5, 0.5]).unwrap() < 0.5 + 1e-12);
    }
}
