//! Weighted vehicle routing: pick and order tasks on every vehicle to maximize
//! a weighted sum of per-customer throughputs within the round budget.

mod exact;
mod greedy;
mod heuristic;
mod problem;
mod warm;

pub use exact::exact_vrp;
pub use greedy::{greedy_alpha_heuristic, greedy_first_pick};
pub use heuristic::heuristic_vrp;
pub use problem::{Prepared, Score, TaskKind};
pub use warm::{
    build_warm_start_suite, dedicated_partition, dedicated_schedule, select_warm_start,
    WarmStartCache,
};

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Instance, ModelError, Schedule, TaskId};

/// Ratio between the weight of a committed (or packed) task and the largest
/// customer weight. Committed tasks are compared first, so any ratio above the
/// task count gives the same schedules.
pub const BOOST_RATIO: f64 = 1e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("instance has {tasks} tasks and {vehicles} vehicles, above the exact-solver limit ({max_tasks} tasks, {max_vehicles} vehicles)")]
    TooLarge {
        tasks: usize,
        vehicles: usize,
        max_tasks: usize,
        max_vehicles: usize,
    },
    #[error("weights must be finite and include at least one positive entry")]
    BadWeights,
    #[error("weight vector has {got} entries for {want} customers")]
    WeightDimension { got: usize, want: usize },
    #[error("warm-start suite is empty")]
    EmptySuite,
    #[error("dedicated baseline needs at least as many vehicles as customers ({vehicles} < {customers})")]
    TooFewVehicles { vehicles: usize, customers: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Per-customer weights, clamped to be non-negative and normalized to sum 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(raw: Vec<f64>) -> Result<Self, SolverError> {
        if raw.iter().any(|w| !w.is_finite()) {
            return Err(SolverError::BadWeights);
        }
        if raw.iter().any(|&w| w < 0.0) {
            log::warn!("clamping negative customer weights to zero: {raw:?}");
        }
        let clamped: Vec<f64> = raw.into_iter().map(|w| w.max(0.0)).collect();
        let sum: f64 = clamped.iter().sum();
        if !(sum > 0.0) {
            return Err(SolverError::BadWeights);
        }
        Ok(Self(clamped.into_iter().map(|w| w / sum).collect()))
    }

    /// The k-th basis vector of dimension n.
    pub fn basis(k: usize, n: usize) -> Self {
        let mut w = vec![0.0; n];
        w[k] = 1.0;
        Self(w)
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Exact,
    Heuristic,
    #[default]
    Auto,
}

impl std::str::FromStr for Backend {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exact" => Ok(Backend::Exact),
            "heuristic" => Ok(Backend::Heuristic),
            "auto" => Ok(Backend::Auto),
            other => Err(format!("unknown solver backend {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub backend: Backend,
    /// Wall-clock guard for the heuristic; normal runs stop on iteration caps first.
    pub time_limit_s: f64,
    pub seed: u64,
    pub exact_max_tasks: usize,
    pub exact_max_vehicles: usize,
    /// Outer fill/improve cycles of the heuristic.
    pub max_rounds: usize,
    /// Ruin-and-recreate rounds after local search; 0 disables them.
    pub lns_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            backend: Backend::Auto,
            time_limit_s: 30.0,
            seed: 0,
            exact_max_tasks: 10,
            exact_max_vehicles: 3,
            max_rounds: 12,
            lns_iterations: 200,
        }
    }
}

impl SolverConfig {
    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    /// Backend actually used for a problem of this size.
    pub fn resolve(&self, tasks: usize, vehicles: usize) -> Backend {
        match self.backend {
            Backend::Auto if self.fits_exact(tasks, vehicles) => Backend::Exact,
            Backend::Auto => Backend::Heuristic,
            b => b,
        }
    }

    pub fn fits_exact(&self, tasks: usize, vehicles: usize) -> bool {
        tasks <= self.exact_max_tasks && vehicles <= self.exact_max_vehicles
    }
}

/// One weighted-VRP call.
#[derive(Debug, Clone)]
pub struct SolverRequest {
    pub problem: Arc<Prepared>,
    pub weights: WeightVector,
    /// Tasks given the commitment weight in addition to committed ones.
    pub boosted: HashSet<TaskId>,
    pub warm_starts: Vec<Schedule>,
    pub config: SolverConfig,
}

impl SolverRequest {
    pub fn new(problem: Arc<Prepared>, weights: WeightVector, config: SolverConfig) -> Self {
        Self {
            problem,
            weights,
            boosted: HashSet::new(),
            warm_starts: Vec::new(),
            config,
        }
    }

    pub fn with_warm_starts(mut self, warm: Vec<Schedule>) -> Self {
        self.warm_starts = warm;
        self
    }

    pub fn with_boosted(mut self, boosted: HashSet<TaskId>) -> Self {
        self.boosted = boosted;
        self
    }

    fn check(&self) -> Result<(), SolverError> {
        let want = self.problem.k;
        if self.weights.len() != want {
            return Err(SolverError::WeightDimension {
                got: self.weights.len(),
                want,
            });
        }
        Ok(())
    }
}

/// Solve with the configured backend; `auto` uses the exact solver when the
/// instance is within its limits.
pub fn solve_weighted_vrp(req: &SolverRequest) -> Result<Schedule, SolverError> {
    req.check()?;
    match req.config.resolve(req.problem.n, req.problem.nv) {
        Backend::Exact => exact_vrp(req),
        _ => heuristic_vrp(req),
    }
}

/// Convenience wrapper: prepare an instance and solve it once.
pub fn solve_instance(
    instance: &Instance,
    weights: &[f64],
    config: &SolverConfig,
) -> Result<Schedule, SolverError> {
    if instance.customers.is_empty() {
        return Ok(Schedule::idle(instance));
    }
    let problem = Arc::new(Prepared::new(Arc::new(instance.clone()))?);
    let req = SolverRequest::new(problem, WeightVector::new(weights.to_vec())?, config.clone());
    solve_weighted_vrp(&req)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_are_clamped_and_normalized() {
        let w = WeightVector::new(vec![-1.0, 1.0, 3.0]).unwrap();
        assert_eq!(w.as_slice(), &[0.0, 0.25, 0.75]);
        assert!(WeightVector::new(vec![0.0, -2.0]).is_err());
        assert!(WeightVector::new(vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn auto_backend_resolution() {
        let cfg = SolverConfig::default();
        assert_eq!(cfg.resolve(10, 3), Backend::Exact);
        assert_eq!(cfg.resolve(11, 1), Backend::Heuristic);
        assert_eq!(cfg.resolve(2, 4), Backend::Heuristic);
        let cfg = cfg.with_backend(Backend::Heuristic);
        assert_eq!(cfg.resolve(1, 1), Backend::Heuristic);
    }
}
