//! Stream generator shared by the integration tests. It does not use the
//! engine model: regressor directions, bounds and errors are drawn directly.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zonoid::MeasurementRecord;

#[derive(Debug, Clone, Copy)]
pub struct StreamSpec {
    pub steps: usize,
    pub m: usize,
    /// Largest per-step parameter change (0 keeps θ constant).
    pub drift: f64,
    pub theta0: Option<[f64; 2]>,
    /// Regressor directions are drawn from `[0, angle_span]`.
    pub angle_span: f64,
}

impl Default for StreamSpec {
    fn default() -> Self {
        Self {
            steps: 40,
            m: 4,
            drift: 0.0,
            theta0: None,
            angle_span: std::f64::consts::FRAC_PI_2,
        }
    }
}

/// Records consistent with the returned truth at every step.
pub fn random_stream(seed: u64, spec: StreamSpec) -> (Vec<MeasurementRecord>, Vec<DVector<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut theta = match spec.theta0 {
        Some(t) => DVector::from_row_slice(&t),
        None => DVector::from_fn(2, |_, _| rng.gen_range(0.6..1.4)),
    };
    let rate = DVector::from_fn(2, |_, _| rng.gen_range(-spec.drift..=spec.drift));
    let mut records = Vec::with_capacity(spec.steps);
    let mut truth = Vec::with_capacity(spec.steps);
    for k in 0..spec.steps {
        let gamma = if k == 0 {
            DVector::zeros(2)
        } else {
            let next = &theta + &rate;
            let g = (&next - &theta).abs() * 1.01;
            theta = next;
            g
        };
        let m = spec.m;
        let mut y = DVector::zeros(m);
        let mut phi_l = DMatrix::zeros(2, m);
        let mut phi_u = DMatrix::zeros(2, m);
        let mut u_l = DVector::zeros(m);
        let mut u_u = DVector::zeros(m);
        for i in 0..m {
            let a: f64 = rng.gen_range(0.0..=spec.angle_span);
            let scale: f64 = rng.gen_range(0.5..2.0);
            let phi = DVector::from_vec(vec![a.cos() * scale, a.sin() * scale]);
            let rel: f64 = rng.gen_range(0.0..0.05);
            for r in 0..2 {
                let w = rel * phi[r].abs();
                phi_l[(r, i)] = phi[r] - w * rng.gen_range(0.0..=1.0);
                phi_u[(r, i)] = phi[r] + w * rng.gen_range(0.0..=1.0);
            }
            let b: f64 = rng.gen_range(0.02..0.1);
            u_l[i] = -b;
            u_u[i] = b;
            y[i] = phi.dot(&theta) + rng.gen_range(-b..=b);
        }
        records.push(MeasurementRecord::new(k, y, phi_l, phi_u, u_l, u_u, gamma).unwrap());
        truth.push(theta.clone());
    }
    (records, truth)
}
