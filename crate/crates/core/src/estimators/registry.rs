use std::collections::BTreeMap;
use std::sync::Arc;

use super::{BoxBaseline, Cazi, EstimatorConfig, MeasurementRecord, Pazi, StepContext};
use crate::error::EstimatorError;
use crate::geometry::Zonotope;

/// One time step of a set-membership estimator: prediction with the
/// record's rate bound followed by a measurement update.
///
/// The runner caps the order of the returned set at `ctx.max_order`.
pub trait UpdateStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    fn step(&self, prev: &Zonotope, record: &MeasurementRecord, ctx: &mut StepContext<'_>) -> Result<Zonotope, EstimatorError>;
}

pub type StrategyFactory = Arc<dyn Fn(&EstimatorConfig) -> Box<dyn UpdateStrategy> + Send + Sync>;

/// Update strategies by name.
#[derive(Clone)]
pub struct Registry {
    factories: BTreeMap<String, StrategyFactory>,
}

impl std::fmt::Debug for Registry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.factories.keys()).finish()
    }
}

impl Default for Registry {
    /// `cazi`, `pazi` and the interval baseline `box`.
    fn default() -> Self {
        let mut r = Self::empty();
        r.register("cazi", |_| Box::new(Cazi));
        r.register("pazi", |_| Box::new(Pazi));
        r.register("box", |_| Box::new(BoxBaseline));
        r
    }
}

impl Registry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    /// Adds or replaces a strategy.
    pub fn register<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(&EstimatorConfig) -> Box<dyn UpdateStrategy> + Send + Sync + 'static,
    {
        self.factories.insert(name.to_string(), Arc::new(factory));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn create(&self, config: &EstimatorConfig) -> Result<Box<dyn UpdateStrategy>, EstimatorError> {
        self.factories
            .get(&config.algorithm)
            .map(|f| f(config))
            .ok_or_else(|| EstimatorError::UnknownAlgorithm(config.algorithm.clone()))
    }
}
