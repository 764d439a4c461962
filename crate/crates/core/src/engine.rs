//! Turbocharger health monitoring.
//!
//! The normalized shaft acceleration is `θₜ·φ₁ + φ₂/θ_c`, where `φ₁ > 0` is
//! the turbine power term and `φ₂ < 0` the compressor term, both divided by
//! `J·ω`. The mass flows are known only within bounds, so both regressors
//! are interval-valued and the health vector `θ = [θₜ, 1/θ_c]` fits the
//! bounded-regressor model.
//!
//! The synthetic generator is a stand-in for recorded engine data: the
//! operating point follows bounded random walks, the flow bounds are
//! percentage envelopes around the true flows, and the speed-derivative
//! error is drawn uniformly within its band.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::EngineError;
use crate::estimators::MeasurementRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineParams {
    /// Specific heat of air, J/(kg·K).
    pub c_pa: f64,
    /// Specific heat of exhaust gas, J/(kg·K).
    pub c_pe: f64,
    /// Ratio of specific heats.
    pub gamma_ratio: f64,
    /// Shaft inertia, kg·m².
    pub j_tc: f64,
    /// Ambient temperature, K.
    pub t_amb: f64,
    /// Ambient pressure, Pa.
    pub p_amb: f64,
}

impl Default for EngineParams {
    fn default() -> Self {
        Self {
            c_pa: 1005.0,
            c_pe: 1100.0,
            gamma_ratio: 1.35,
            j_tc: 2.0,
            t_amb: 298.0,
            p_amb: 101_325.0,
        }
    }
}

impl EngineParams {
    pub fn validate(&self) -> Result<(), EngineError> {
        let all = [self.c_pa, self.c_pe, self.gamma_ratio, self.j_tc, self.t_amb, self.p_amb];
        if all.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(EngineError::InvalidParams("all constants must be positive".into()));
        }
        if self.gamma_ratio <= 1.0 {
            return Err(EngineError::InvalidParams("gamma_ratio must exceed 1".into()));
        }
        Ok(())
    }

    fn exponent(&self) -> f64 {
        (self.gamma_ratio - 1.0) / self.gamma_ratio
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    /// Shaft speed, rpm.
    pub n_tc: f64,
    pub eta_t0: f64,
    pub eta_c0: f64,
    /// True turbine and compressor mass flows, kg/s.
    pub w_2t: f64,
    pub w_c1: f64,
    pub w_2t_l: f64,
    pub w_2t_u: f64,
    pub w_c1_l: f64,
    pub w_c1_u: f64,
    /// Exhaust manifold temperature, K.
    pub t_2: f64,
    /// Intake and exhaust manifold pressures, Pa.
    pub p_1: f64,
    pub p_2: f64,
}

impl OperatingPoint {
    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: &str| Err(EngineError::InvalidOperatingPoint(m.into()));
        let vals = [
            self.n_tc, self.eta_t0, self.eta_c0, self.w_2t, self.w_c1, self.w_2t_l, self.w_2t_u, self.w_c1_l,
            self.w_c1_u, self.t_2, self.p_1, self.p_2,
        ];
        if vals.iter().any(|v| !v.is_finite()) {
            return bad("finite values");
        }
        if self.n_tc <= 0.0 {
            return bad("positive speed");
        }
        if self.eta_t0 <= 0.0 || self.eta_c0 <= 0.0 || self.t_2 <= 0.0 {
            return bad("positive efficiencies and temperature");
        }
        if !(0.0 < self.w_2t_l && self.w_2t_l <= self.w_2t && self.w_2t <= self.w_2t_u) {
            return bad("0 < W2t_l <= W2t <= W2t_u");
        }
        if !(0.0 < self.w_c1_l && self.w_c1_l <= self.w_c1 && self.w_c1 <= self.w_c1_u) {
            return bad("0 < Wc1_l <= Wc1 <= Wc1_u");
        }
        if self.p_1 <= 0.0 || self.p_2 <= 0.0 {
            return bad("positive pressures");
        }
        Ok(())
    }
}

/// Turbine and compressor degradation multipliers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HealthTruth {
    pub theta_t: f64,
    pub theta_c: f64,
}

impl Default for HealthTruth {
    fn default() -> Self {
        Self {
            theta_t: 1.0,
            theta_c: 1.0,
        }
    }
}

impl HealthTruth {
    /// Estimated vector `[θₜ, 1/θ_c]`.
    pub fn theta(&self) -> DVector<f64> {
        DVector::from_vec(vec![self.theta_t, 1.0 / self.theta_c])
    }
}

fn omega_term(params: &EngineParams, n_tc: f64) -> f64 {
    params.j_tc * n_tc * PI / 30.0
}

fn phi1_at(params: &EngineParams, op: &OperatingPoint, w_2t: f64) -> f64 {
    op.eta_t0 * params.c_pe * w_2t * op.t_2 / omega_term(params, op.n_tc)
        * (1.0 - (params.p_amb / op.p_2).powf(params.exponent()))
}

fn phi2_at(params: &EngineParams, op: &OperatingPoint, w_c1: f64) -> f64 {
    -params.c_pa * w_c1 * params.t_amb / (op.eta_c0 * omega_term(params, op.n_tc))
        * ((op.p_1 / params.p_amb).powf(params.exponent()) - 1.0)
}

/// Turbine (`φ₁`) and compressor (`φ₂`) regressors at the true flows.
pub fn regressors(params: &EngineParams, op: &OperatingPoint) -> Result<(f64, f64), EngineError> {
    params.validate()?;
    op.validate()?;
    Ok((phi1_at(params, op, op.w_2t), phi2_at(params, op, op.w_c1)))
}

/// `(φ₁ˡ, φ₁ᵘ, φ₂ˡ, φ₂ᵘ)` from the flow bounds. `φ₂` decreases with the
/// compressor flow, so its lower bound uses the upper flow.
pub fn regressor_bounds(params: &EngineParams, op: &OperatingPoint) -> Result<(f64, f64, f64, f64), EngineError> {
    params.validate()?;
    op.validate()?;
    Ok((
        phi1_at(params, op, op.w_2t_l),
        phi1_at(params, op, op.w_2t_u),
        phi2_at(params, op, op.w_c1_u),
        phi2_at(params, op, op.w_c1_l),
    ))
}

/// Closed interval used for random-walk ranges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range(pub f64, pub f64);

impl Range {
    fn width(&self) -> f64 {
        self.1 - self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OperatingRanges {
    pub n_tc: Range,
    pub p_1: Range,
    pub p_2: Range,
    pub t_2: Range,
    pub w_2t: Range,
    pub w_c1: Range,
    pub eta_t0: Range,
    pub eta_c0: Range,
}

impl Default for OperatingRanges {
    fn default() -> Self {
        Self {
            n_tc: Range(8_000.0, 20_000.0),
            p_1: Range(1.3e5, 3.0e5),
            p_2: Range(1.2e5, 2.8e5),
            t_2: Range(550.0, 750.0),
            w_2t: Range(1.0, 4.0),
            w_c1: Range(1.0, 4.0),
            eta_t0: Range(0.6, 0.75),
            eta_c0: Range(0.65, 0.8),
        }
    }
}

/// End point of a linear health drift over the run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Degradation {
    pub theta_t_end: f64,
    pub theta_c_end: f64,
}

/// Engine configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub params: EngineParams,
    pub ranges: OperatingRanges,
    pub truth: HealthTruth,
    /// Linear drift to these values; `None` keeps the health constant.
    pub degradation: Option<Degradation>,
    /// Relative margin added to the true per-step parameter change.
    pub gamma_margin: f64,
    pub n_steps: usize,
    pub m_per_step: usize,
    /// Total relative width of each flow interval (0.1 is ±5 %).
    pub flow_envelope: f64,
    /// Half-width of the speed-derivative error band.
    pub noise_bound: f64,
    /// Random-walk step as a fraction of each range.
    pub walk_step: f64,
    /// Fraction of each error band (flows and noise) the realized errors
    /// occupy, centered in the band. 1 lets them reach the bounds.
    pub error_fill: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            params: EngineParams::default(),
            ranges: OperatingRanges::default(),
            truth: HealthTruth::default(),
            degradation: None,
            gamma_margin: 0.01,
            n_steps: 1500,
            m_per_step: 4,
            flow_envelope: 0.1,
            noise_bound: 10.0,
            walk_step: 0.5,
            error_fill: 0.3,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        self.params.validate()?;
        let bad = |m: &str| Err(EngineError::InvalidParams(m.into()));
        if self.n_steps == 0 || self.m_per_step == 0 {
            return bad("n_steps and m_per_step must be positive");
        }
        if !(0.0..1.0).contains(&self.flow_envelope) {
            return bad("flow_envelope must be in [0, 1)");
        }
        if !(self.error_fill > 0.0 && self.error_fill <= 1.0) {
            return bad("error_fill must be in (0, 1]");
        }
        if !(self.noise_bound >= 0.0) || !(self.gamma_margin >= 0.0) || !(self.walk_step >= 0.0) {
            return bad("noise_bound, gamma_margin and walk_step must be nonnegative");
        }
        let r = &self.ranges;
        for (name, range) in [
            ("n_tc", r.n_tc),
            ("p_1", r.p_1),
            ("p_2", r.p_2),
            ("t_2", r.t_2),
            ("w_2t", r.w_2t),
            ("w_c1", r.w_c1),
            ("eta_t0", r.eta_t0),
            ("eta_c0", r.eta_c0),
        ] {
            if !(range.0 > 0.0 && range.0 <= range.1) {
                return Err(EngineError::InvalidParams(format!("range {name} must be positive and ordered")));
            }
        }
        if r.p_1.0 <= self.params.p_amb || r.p_2.0 <= self.params.p_amb {
            return bad("manifold pressures must exceed ambient pressure");
        }
        let health = [Some(self.truth.theta_t), Some(self.truth.theta_c)]
            .into_iter()
            .chain(self.degradation.map(|d| [Some(d.theta_t_end), Some(d.theta_c_end)]).into_iter().flatten())
            .flatten();
        for h in health {
            if !(h > 0.0 && h.is_finite()) {
                return bad("health parameters must be positive");
            }
        }
        Ok(())
    }

    /// Health at step `k`.
    pub fn truth_at(&self, k: usize) -> HealthTruth {
        match self.degradation {
            None => self.truth,
            Some(d) => {
                let s = if self.n_steps > 1 {
                    k as f64 / (self.n_steps - 1) as f64
                } else {
                    0.0
                };
                HealthTruth {
                    theta_t: self.truth.theta_t + s * (d.theta_t_end - self.truth.theta_t),
                    theta_c: self.truth.theta_c + s * (d.theta_c_end - self.truth.theta_c),
                }
            }
        }
    }
}

/// A synthesized stream and the parameter vector behind each record.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub records: Vec<MeasurementRecord>,
    pub truth: Vec<DVector<f64>>,
}

struct Walk {
    value: f64,
    range: Range,
}

impl Walk {
    fn new(range: Range, rng: &mut ChaCha8Rng) -> Self {
        Self {
            value: rng.gen_range(range.0..=range.1),
            range,
        }
    }

    fn advance(&mut self, step: f64, rng: &mut ChaCha8Rng) -> f64 {
        let d = step * self.range.width() * rng.gen_range(-1.0..=1.0);
        let mut v = self.value + d;
        // reflect at the range ends
        if v > self.range.1 {
            v = 2.0 * self.range.1 - v;
        }
        if v < self.range.0 {
            v = 2.0 * self.range.0 - v;
        }
        self.value = v.clamp(self.range.0, self.range.1);
        self.value
    }
}

/// Generates a stream whose records are all consistent with the truth.
pub fn synthesize_stream(cfg: &SynthConfig) -> Result<SynthOutput, EngineError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let r = &cfg.ranges;
    let mut walks: Vec<Walk> = [r.n_tc, r.p_1, r.p_2, r.t_2, r.w_2t, r.w_c1, r.eta_t0, r.eta_c0]
        .into_iter()
        .map(|range| Walk::new(range, &mut rng))
        .collect();
    let m = cfg.m_per_step;
    let mut records = Vec::with_capacity(cfg.n_steps);
    let mut truths = Vec::with_capacity(cfg.n_steps);
    let mut prev_theta = cfg.truth_at(0).theta();

    for k in 0..cfg.n_steps {
        let theta = cfg.truth_at(k).theta();
        let gamma = (&theta - &prev_theta).abs() * (1.0 + cfg.gamma_margin);
        prev_theta = theta.clone();

        let mut y = DVector::zeros(m);
        let mut phi_l = DMatrix::zeros(2, m);
        let mut phi_u = DMatrix::zeros(2, m);
        for i in 0..m {
            let v: Vec<f64> = walks.iter_mut().map(|w| w.advance(cfg.walk_step, &mut rng)).collect();
            let fill = cfg.error_fill;
            let (a_t, a_c): (f64, f64) = (
                0.5 + fill * (rng.gen::<f64>() - 0.5),
                0.5 + fill * (rng.gen::<f64>() - 0.5),
            );
            let env = cfg.flow_envelope;
            let op = OperatingPoint {
                n_tc: v[0],
                p_1: v[1],
                p_2: v[2],
                t_2: v[3],
                w_2t: v[4],
                w_c1: v[5],
                eta_t0: v[6],
                eta_c0: v[7],
                w_2t_l: v[4] * (1.0 - env * a_t),
                w_2t_u: v[4] * (1.0 + env * (1.0 - a_t)),
                w_c1_l: v[5] * (1.0 - env * a_c),
                w_c1_u: v[5] * (1.0 + env * (1.0 - a_c)),
            };
            let (p1, p2) = regressors(&cfg.params, &op)?;
            let (p1l, p1u, p2l, p2u) = regressor_bounds(&cfg.params, &op)?;
            let e = if cfg.noise_bound > 0.0 {
                fill * rng.gen_range(-cfg.noise_bound..=cfg.noise_bound)
            } else {
                0.0
            };
            y[i] = p1 * theta[0] + p2 * theta[1] + e;
            phi_l[(0, i)] = p1l;
            phi_l[(1, i)] = p2l;
            phi_u[(0, i)] = p1u;
            phi_u[(1, i)] = p2u;
        }
        let record = MeasurementRecord::new(
            k,
            y,
            phi_l,
            phi_u,
            DVector::from_element(m, -cfg.noise_bound),
            DVector::from_element(m, cfg.noise_bound),
            gamma,
        )
        .map_err(|e| EngineError::InvalidOperatingPoint(e.to_string()))?;
        records.push(record);
        truths.push(theta);
    }
    Ok(SynthOutput { records, truth: truths })
}
