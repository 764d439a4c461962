//! Recursive set-membership estimators.
//!
//! Every time step first inflates the previous estimate by the parameter
//! rate bound `γₖ` and then intersects it (approximately) with the
//! information carried by the step's measurements. The intersection
//! strategy is pluggable: see [`Registry`] and [`UpdateStrategy`].

mod box_baseline;
mod cazi;
mod pazi;
mod record;
mod registry;

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{EstimatorError, StripError};
use crate::geometry::Zonotope;
use crate::lmi::{ContractionConfig, LmiDump, P2Status};

pub use box_baseline::BoxBaseline;
pub use cazi::Cazi;
pub use pazi::Pazi;
pub use record::{transform_nonneg, untransform, MeasurementRecord};
pub use registry::{Registry, StrategyFactory, UpdateStrategy};

/// Largest mini-batch accepted by the batch estimator.
pub const MAX_BATCH: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EmptyPolicy {
    /// An inconsistent measurement aborts the run.
    #[default]
    Strict,
    /// An inconsistent measurement (or mini-batch) is ignored.
    Skip,
}

/// Initial estimate, either a box or an arbitrary zonotope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialSet {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Zonotope(Zonotope),
}

impl Default for InitialSet {
    fn default() -> Self {
        InitialSet::Box {
            lower: vec![0.0, 0.0],
            upper: vec![2.0, 2.0],
        }
    }
}

impl InitialSet {
    pub fn zonotope(&self) -> Result<Zonotope, EstimatorError> {
        match self {
            InitialSet::Box { lower, upper } => Ok(Zonotope::from_bounds(lower, upper)?),
            InitialSet::Zonotope(z) => Ok(z.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    /// Registry name of the update strategy.
    pub algorithm: String,
    /// Mini-batch size `M` of the batch estimator.
    pub batch_size: usize,
    /// Order cap; `None` means the parameter dimension.
    pub max_order: Option<usize>,
    pub empty_policy: EmptyPolicy,
    pub contraction: ContractionConfig,
    /// Offset `d` making `θ + d ≥ 0`; `None` when the parameters are
    /// already nonnegative.
    pub transform_offset: Option<Vec<f64>>,
    pub initial: InitialSet,
    /// Keep a full record of every LMI solve.
    pub dump_lmi: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            algorithm: "cazi".into(),
            batch_size: 4,
            max_order: None,
            empty_policy: EmptyPolicy::Strict,
            contraction: ContractionConfig::default(),
            transform_offset: None,
            initial: InitialSet::default(),
            dump_lmi: false,
        }
    }
}

impl EstimatorConfig {
    pub fn with_algorithm(mut self, name: &str) -> Self {
        self.algorithm = name.into();
        self
    }

    pub fn validate(&self, n: usize) -> Result<(), EstimatorError> {
        let bad = |m: String| Err(EstimatorError::Config(m));
        if !(1..=MAX_BATCH).contains(&self.batch_size) {
            return bad(format!("batch_size must be in 1..={MAX_BATCH}, got {}", self.batch_size));
        }
        if let Some(r) = self.max_order {
            if r < n {
                return bad(format!("max_order {r} is below the dimension {n}"));
            }
        }
        if let Some(d) = &self.transform_offset {
            if d.len() != n {
                return bad(format!("transform_offset has length {}, expected {n}", d.len()));
            }
            if d.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return bad("transform_offset must be finite and nonnegative".into());
            }
        }
        self.contraction
            .validate()
            .map_err(|e| EstimatorError::Config(e.to_string()))
    }

    pub fn max_order_for(&self, n: usize) -> usize {
        self.max_order.unwrap_or(n).max(n)
    }
}

/// One entry of the per-step diagnostic log.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Iteration {
    /// A single-measurement update picked candidate `index` (0 = prior kept).
    Candidate { measurement: usize, index: usize, volume: f64 },
    /// A mini-batch update.
    Batch {
        batch: usize,
        status: P2Status,
        tau: Option<f64>,
        epsilon: f64,
        /// P-radius before and after, under this batch's `P`.
        p_radius: Option<(f64, f64)>,
        contraction: Option<bool>,
    },
    /// The LMI solver failed; the prior was kept.
    SolverFailure { batch: usize, message: String },
    /// A measurement (or mini-batch) inconsistent with the prior was ignored.
    Skipped { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepStatus {
    Ok,
    /// Some mini-batch kept its prior because the LMI had no solution.
    Fallback,
    /// Some measurement was ignored under the skip policy.
    Skipped,
}

/// Mutable context handed to a strategy for one time step.
#[derive(Debug)]
pub struct StepContext<'a> {
    pub config: &'a EstimatorConfig,
    pub max_order: usize,
    pub k: usize,
    pub iterations: Vec<Iteration>,
    pub lmi: Vec<LmiDump>,
}

impl<'a> StepContext<'a> {
    pub fn new(config: &'a EstimatorConfig, max_order: usize, k: usize) -> Self {
        Self {
            config,
            max_order,
            k,
            iterations: Vec::new(),
            lmi: Vec::new(),
        }
    }

    /// Applies the empty-intersection policy to a strip-construction error.
    /// Returns `Ok(true)` when the caller should skip the item.
    pub fn on_strip_error(&mut self, err: StripError, index: usize) -> Result<bool, EstimatorError> {
        match (err, self.config.empty_policy) {
            (StripError::EmptyIntersection, EmptyPolicy::Skip) => {
                log::debug!("step {}: skipping inconsistent item {index}", self.k);
                self.iterations.push(Iteration::Skipped { index });
                Ok(true)
            }
            (StripError::EmptyIntersection, EmptyPolicy::Strict) => Err(EstimatorError::EmptyIntersection { k: self.k }),
            (other, _) => Err(other.into()),
        }
    }

    fn status(&self) -> StepStatus {
        let mut status = StepStatus::Ok;
        for it in &self.iterations {
            match it {
                Iteration::Skipped { .. } => return StepStatus::Skipped,
                Iteration::Batch {
                    status: P2Status::Infeasible,
                    ..
                }
                | Iteration::SolverFailure { .. } => status = StepStatus::Fallback,
                _ => {}
            }
        }
        status
    }
}

/// `z ⊕ diag(γ)𝐁ⁿ`, reduced to `max_order` when it grows beyond it.
pub fn predict(z: &Zonotope, gamma: &DVector<f64>, max_order: usize) -> Result<Zonotope, EstimatorError> {
    let grown = z.minkowski_sum_box(gamma.as_slice())?;
    Ok(grown.reduce_order(max_order))
}

/// Running estimate of one pass.
#[derive(Debug, Clone)]
pub struct EstimatorState {
    /// Current estimate in working (possibly shifted) coordinates.
    pub afss: Zonotope,
    pub step: usize,
    pub pass: usize,
    pub config: EstimatorConfig,
    pub log: Vec<StepRecord>,
}

impl EstimatorState {
    pub fn new(afss: Zonotope, config: EstimatorConfig) -> Self {
        Self {
            afss,
            step: 0,
            pass: 0,
            config,
            log: Vec::new(),
        }
    }

    pub fn predict(&mut self, gamma: &DVector<f64>) -> Result<(), EstimatorError> {
        let max_order = self.config.max_order_for(self.afss.dim());
        self.afss = predict(&self.afss, gamma, max_order)?;
        Ok(())
    }
}

/// Estimate after one time step, in original coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub k: usize,
    pub pass: usize,
    pub afss: Zonotope,
    pub volume: Option<f64>,
    pub status: StepStatus,
    pub iterations: Vec<Iteration>,
    #[serde(skip)]
    pub lmi: Vec<LmiDump>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub initial: Zonotope,
    pub steps: Vec<StepRecord>,
    pub wall_time: f64,
}

impl Trajectory {
    /// Final estimate (the initial set for an empty stream).
    pub fn final_set(&self) -> &Zonotope {
        self.steps.last().map(|s| &s.afss).unwrap_or(&self.initial)
    }

    pub fn final_volume(&self) -> Option<f64> {
        self.final_set().volume().ok()
    }

    /// Counts of mini-batch solve outcomes.
    pub fn p2_counts(&self) -> (usize, usize, usize) {
        let (mut optimal, mut infeasible, mut failed) = (0, 0, 0);
        for it in self.steps.iter().flat_map(|s| &s.iterations) {
            match it {
                Iteration::Batch {
                    status: P2Status::Optimal,
                    ..
                } => optimal += 1,
                Iteration::Batch {
                    status: P2Status::Infeasible,
                    ..
                } => infeasible += 1,
                Iteration::SolverFailure { .. } => failed += 1,
                _ => {}
            }
        }
        (optimal, infeasible, failed)
    }
}

/// A configured estimator: a strategy plus its settings.
pub struct Estimator {
    strategy: Box<dyn UpdateStrategy>,
    config: EstimatorConfig,
}

impl std::fmt::Debug for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Estimator")
            .field("strategy", &self.strategy.name())
            .field("config", &self.config)
            .finish()
    }
}

impl Estimator {
    pub fn new(config: EstimatorConfig, registry: &Registry) -> Result<Self, EstimatorError> {
        let strategy = registry.create(&config)?;
        Ok(Self { strategy, config })
    }

    pub fn strategy_name(&self) -> &'static str {
        self.strategy.name()
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.config
    }

    /// One pass over `stream` starting from `initial` (original coordinates).
    pub fn run_from(&self, stream: &[MeasurementRecord], initial: &Zonotope, pass: usize) -> Result<Trajectory, EstimatorError> {
        let started = Instant::now();
        let n = initial.dim();
        self.config.validate(n)?;
        let max_order = self.config.max_order_for(n);
        let offset = self
            .config
            .transform_offset
            .as_ref()
            .map(|d| DVector::from_column_slice(d))
            .filter(|d| d.iter().any(|v| *v != 0.0));

        let working = match &offset {
            Some(d) => initial.translate(d)?,
            None => initial.clone(),
        };
        let mut state = EstimatorState::new(working, self.config.clone());
        state.pass = pass;
        for raw in stream {
            if raw.n() != n {
                return Err(EstimatorError::Config(format!(
                    "record {} has {} parameters, initial set has {n}",
                    raw.k,
                    raw.n()
                )));
            }
            let shifted;
            let record = match &offset {
                Some(d) => {
                    shifted = transform_nonneg(raw, d)?;
                    &shifted
                }
                None => raw,
            };
            let mut ctx = StepContext::new(&self.config, max_order, record.k);
            let next = self.strategy.step(&state.afss, record, &mut ctx)?;
            state.afss = next.reduce_order(max_order);
            state.step += 1;
            let afss = match &offset {
                Some(d) => untransform(&state.afss, d)?,
                None => state.afss.clone(),
            };
            state.log.push(StepRecord {
                k: record.k,
                pass,
                volume: afss.volume().ok(),
                status: ctx.status(),
                afss,
                iterations: ctx.iterations,
                lmi: ctx.lmi,
            });
        }
        Ok(Trajectory {
            initial: initial.clone(),
            steps: state.log,
            wall_time: started.elapsed().as_secs_f64(),
        })
    }

    /// One pass from the configured initial set.
    pub fn run(&self, stream: &[MeasurementRecord]) -> Result<Trajectory, EstimatorError> {
        let initial = self.config.initial.zonotope()?;
        self.run_from(stream, &initial, 0)
    }

    /// `passes` passes, each seeded with the previous pass's final estimate.
    pub fn multipass(&self, stream: &[MeasurementRecord], passes: usize) -> Result<Vec<Trajectory>, EstimatorError> {
        if passes == 0 {
            return Err(EstimatorError::Config("passes must be at least 1".into()));
        }
        let mut seed = self.config.initial.zonotope()?;
        let mut out = Vec::with_capacity(passes);
        for pass in 0..passes {
            let t = self.run_from(stream, &seed, pass)?;
            seed = t.final_set().clone();
            out.push(t);
        }
        Ok(out)
    }
}

/// Runs the configured algorithm from the default registry.
pub fn run(stream: &[MeasurementRecord], config: &EstimatorConfig) -> Result<Trajectory, EstimatorError> {
    Estimator::new(config.clone(), &Registry::default())?.run(stream)
}

/// Multi-pass variant of [`run`].
pub fn multipass(stream: &[MeasurementRecord], config: &EstimatorConfig, passes: usize) -> Result<Vec<Trajectory>, EstimatorError> {
    Estimator::new(config.clone(), &Registry::default())?.multipass(stream, passes)
}

pub(crate) fn rate_matrix(gamma: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_diagonal(gamma)
}
