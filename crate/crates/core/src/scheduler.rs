//! The round loop: long-term throughput history, choice of support
//! allocation, and replanning from the fleet's current state.

use std::cmp::Ordering;
use std::sync::Arc;
use std::time::Instant;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boundary::{
    search_boundary, BoundaryError, Corner, CountingSolver, DirectionSolver, OutcomeKind, MAX_STAGES,
};
use crate::model::{allocation_of, Allocation, CustomerId, Instance, ModelError, Schedule};
use crate::utility::{cmp_tol, Fairness};
use crate::vrp::{
    build_warm_start_suite, solve_weighted_vrp, Backend, Prepared, SolverConfig, SolverError,
    SolverRequest, WarmStartCache, WeightVector,
};

pub const DEFAULT_PRUNE_AFTER: usize = 10;

#[derive(Debug, Error)]
pub enum SchedulerError {
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid round configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoundConfig {
    /// Planning horizon B in seconds.
    pub round_s: f64,
    /// Seconds between replans in trace-driven runs; defaults to `round_s`.
    pub replan_s: Option<f64>,
    /// Values above 32 select max-min (leximin) mode.
    pub alpha: f64,
    /// Fixed history discount; replaces the running average when set.
    pub discount: Option<f64>,
    /// Vehicles must be home at every multiple of this many seconds.
    pub return_home_every_s: Option<f64>,
    pub prune_after_rounds: usize,
    pub max_stages: usize,
}

impl Default for RoundConfig {
    fn default() -> Self {
        Self {
            round_s: 900.0,
            replan_s: None,
            alpha: 100.0,
            discount: None,
            return_home_every_s: None,
            prune_after_rounds: DEFAULT_PRUNE_AFTER,
            max_stages: MAX_STAGES,
        }
    }
}

impl RoundConfig {
    pub fn fairness(&self) -> Fairness {
        Fairness::from_alpha(self.alpha)
    }

    pub fn replan_interval(&self) -> f64 {
        self.replan_s.unwrap_or(self.round_s)
    }

    pub fn validate(&self) -> Result<(), SchedulerError> {
        let bad = |m: &str| Err(SchedulerError::Config(m.to_string()));
        if !(self.round_s > 0.0 && self.round_s.is_finite()) {
            return bad("round_s must be positive");
        }
        let r = self.replan_interval();
        if !(r > 0.0 && r <= self.round_s) {
            return bad("replan_s must be in (0, round_s]");
        }
        if !(self.alpha >= 0.0) || self.alpha.is_nan() {
            return bad("alpha must be non-negative");
        }
        if let Some(g) = self.discount {
            if !(g > 0.0 && g <= 1.0) {
                return bad("discount must be in (0, 1]");
            }
        }
        if let Some(h) = self.return_home_every_s {
            if !(h > 0.0) {
                return bad("return_home_every_s must be positive");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistoryMode {
    RunningAverage,
    Discounted(f64),
}

/// Long-term throughput per customer, tasks per minute.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct History {
    xbar: IndexMap<CustomerId, f64>,
    rounds: usize,
    /// Total recorded duration, seconds; weights the running average.
    elapsed_s: f64,
    mode: HistoryMode,
}

impl History {
    pub fn new(mode: HistoryMode) -> Self {
        Self {
            xbar: IndexMap::new(),
            rounds: 0,
            elapsed_s: 0.0,
            mode,
        }
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn mode(&self) -> HistoryMode {
        self.mode
    }

    pub fn get(&self, c: &CustomerId) -> f64 {
        self.xbar.get(c).copied().unwrap_or(0.0)
    }

    pub fn customers(&self) -> impl Iterator<Item = &CustomerId> {
        self.xbar.keys()
    }

    pub fn xbar_for(&self, customers: &[CustomerId]) -> Vec<f64> {
        customers.iter().map(|c| self.get(c)).collect()
    }

    /// Customers not seen before enter with zero throughput.
    pub fn ensure(&mut self, customers: &[CustomerId]) {
        for c in customers {
            self.xbar.entry(c.clone()).or_insert(0.0);
        }
    }

    /// Weight of a new round of `duration_s` in the update.
    pub fn gamma(&self, duration_s: f64) -> f64 {
        match self.mode {
            HistoryMode::Discounted(g) => g,
            HistoryMode::RunningAverage => duration_s / (self.elapsed_s + duration_s),
        }
    }

    /// Fold in one round's allocation. Known customers missing from
    /// `customers` count as zero for the round unless listed in `frozen`.
    pub fn update(&mut self, customers: &[CustomerId], x: &Allocation, duration_s: f64, frozen: &[CustomerId]) {
        self.ensure(customers);
        let g = self.gamma(duration_s);
        for (c, v) in self.xbar.iter_mut() {
            if frozen.contains(c) {
                continue;
            }
            let now = customers.iter().position(|d| d == c).map_or(0.0, |k| x.0[k]);
            *v = g * now + (1.0 - g) * *v;
        }
        self.rounds += 1;
        self.elapsed_s += duration_s;
    }
}

/// Index of the corner maximizing utility of `γx + (1−γ)x̄`; ties go to the
/// larger total and then to the lower index.
pub fn select_allocation(corners: &[Allocation], xbar: &[f64], fairness: Fairness, gamma: f64) -> usize {
    let blended: Vec<Vec<f64>> = corners
        .iter()
        .map(|c| c.0.iter().zip(xbar).map(|(x, h)| gamma * x + (1.0 - gamma) * h).collect())
        .collect();
    let mut best = 0;
    for i in 1..corners.len() {
        let ord = fairness
            .compare(&blended[i], &blended[best])
            .then_with(|| cmp_tol(corners[i].total(), corners[best].total()));
        if ord == Ordering::Greater {
            best = i;
        }
    }
    best
}

/// Weighted-VRP calls for one round, sharing warm starts between calls.
pub struct RoundSolver {
    problem: Arc<Prepared>,
    config: SolverConfig,
    cache: WarmStartCache,
}

impl RoundSolver {
    pub fn new(problem: Arc<Prepared>, config: SolverConfig, warm: Vec<Schedule>) -> Self {
        Self {
            problem,
            config,
            cache: WarmStartCache::new(warm),
        }
    }

    pub fn customers(&self) -> &[CustomerId] {
        &self.problem.instance.customers
    }

    pub fn warm_starts(&self) -> usize {
        self.cache.len()
    }
}

impl DirectionSolver for RoundSolver {
    fn solve(&self, weights: &WeightVector) -> Result<Corner, BoundaryError> {
        let req = SolverRequest::new(self.problem.clone(), weights.clone(), self.config.clone())
            .with_warm_starts(self.cache.snapshot());
        let schedule = solve_weighted_vrp(&req)?;
        let x = allocation_of(&schedule, self.customers());
        Ok(Corner::new(x, Some(schedule)))
    }

    fn remember(&self, corner: &Corner) {
        if let Some(s) = &corner.schedule {
            self.cache.insert((**s).clone());
        }
    }
}

/// Outcome of planning one round.
#[derive(Debug, Clone)]
pub struct RoundPlan {
    pub customers: Vec<CustomerId>,
    pub schedule: Schedule,
    pub allocation: Allocation,
    /// Support allocations of the final face.
    pub corners: Vec<Allocation>,
    pub chosen: usize,
    pub target: Vec<f64>,
    pub kind: OutcomeKind,
    pub calls: usize,
    pub stages: usize,
}

/// One line of the per-round event log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundEvent {
    pub round: usize,
    pub start_s: f64,
    pub customers: Vec<CustomerId>,
    pub allocation: Vec<f64>,
    pub xbar: Vec<f64>,
    pub corners: Vec<Vec<f64>>,
    pub chosen: usize,
    pub calls: usize,
    pub stages: usize,
    /// Kept out of serialized logs so that runs are byte-reproducible.
    #[serde(skip)]
    pub wall_s: f64,
}

pub struct Scheduler {
    pub config: RoundConfig,
    pub solver: SolverConfig,
    pub history: History,
    idle: IndexMap<CustomerId, usize>,
    events: Vec<RoundEvent>,
    pending: Option<RoundEvent>,
}

impl Scheduler {
    pub fn new(config: RoundConfig, solver: SolverConfig) -> Result<Self, SchedulerError> {
        config.validate()?;
        let mode = match config.discount {
            Some(g) => HistoryMode::Discounted(g),
            None => HistoryMode::RunningAverage,
        };
        Ok(Self {
            config,
            solver,
            history: History::new(mode),
            idle: IndexMap::new(),
            events: Vec::new(),
            pending: None,
        })
    }

    pub fn events(&self) -> &[RoundEvent] {
        &self.events
    }

    pub fn fairness(&self) -> Fairness {
        self.config.fairness()
    }

    /// Customers that take part in this round's geometry: those with tasks,
    /// plus idle ones not yet past the pruning horizon.
    fn round_customers(&self, instance: &Instance) -> Vec<CustomerId> {
        instance
            .customers
            .iter()
            .filter(|c| {
                instance.tasks.iter().any(|t| &t.customer == *c)
                    || self.idle.get(*c).copied().unwrap_or(0) < self.config.prune_after_rounds
            })
            .cloned()
            .collect()
    }

    /// Search the boundary for `instance` and choose a support allocation.
    /// `warm` seeds the heuristic solver (the previous plan on replans).
    pub fn plan(&mut self, instance: &Instance, warm: Vec<Schedule>) -> Result<RoundPlan, SchedulerError> {
        let started = Instant::now();
        let customers = self.round_customers(instance);
        let inst = if customers.len() == instance.customers.len() {
            instance.clone()
        } else {
            instance.restricted_to(&customers)
        };
        self.history.ensure(&customers);
        let k = customers.len();
        let fairness = self.fairness();

        let plan = if k == 0 || inst.tasks.is_empty() || inst.vehicles.is_empty() {
            let schedule = Schedule::idle(&inst);
            RoundPlan {
                allocation: Allocation::zeros(k),
                corners: vec![Allocation::zeros(k)],
                customers: customers.clone(),
                schedule,
                chosen: 0,
                target: vec![0.0; k],
                kind: OutcomeKind::Empty,
                calls: 0,
                stages: 0,
            }
        } else {
            let problem = Arc::new(Prepared::new(Arc::new(inst))?);
            let mut seeds = warm;
            if self.solver.resolve(problem.n, problem.nv) == Backend::Heuristic {
                seeds.extend(build_warm_start_suite(&problem, fairness, &self.solver)?);
            }
            let solver = CountingSolver::new(RoundSolver::new(problem.clone(), self.solver.clone(), seeds));
            let out = search_boundary(&solver, k, fairness, self.config.max_stages)?;
            debug_assert_eq!(out.calls, solver.calls());
            let corners: Vec<Allocation> = out.face.corners.iter().map(|c| c.allocation.clone()).collect();
            let xbar = self.history.xbar_for(&customers);
            let gamma = self.history.gamma(self.config.replan_interval());
            let chosen = select_allocation(&corners, &xbar, fairness, gamma);
            let schedule = out.face.corners[chosen]
                .schedule
                .as_deref()
                .cloned()
                .unwrap_or_else(|| Schedule::idle(&problem.instance));
            RoundPlan {
                allocation: corners[chosen].clone(),
                corners,
                customers: customers.clone(),
                schedule,
                chosen,
                target: out.target,
                kind: out.kind,
                calls: solver.calls(),
                stages: out.stages,
            }
        };

        self.pending = Some(RoundEvent {
            round: self.events.len(),
            start_s: instance.start_time,
            customers: plan.customers.clone(),
            allocation: plan.allocation.0.clone(),
            xbar: Vec::new(),
            corners: plan.corners.iter().map(|c| c.0.clone()).collect(),
            chosen: plan.chosen,
            calls: plan.calls,
            stages: plan.stages,
            wall_s: started.elapsed().as_secs_f64(),
        });
        Ok(plan)
    }

    /// Record a realized allocation over `duration_s` seconds for the
    /// customers of `instance`, closing the pending round event.
    pub fn record(&mut self, instance: &Instance, customers: &[CustomerId], x: &Allocation, duration_s: f64) {
        for c in &instance.customers {
            let has = instance.tasks.iter().any(|t| &t.customer == c);
            let n = self.idle.entry(c.clone()).or_insert(0);
            *n = if has { 0 } else { *n + 1 };
        }
        // Pruned or departed customers keep their history unchanged.
        let frozen: Vec<CustomerId> = self
            .history
            .customers()
            .filter(|c| !customers.contains(c))
            .cloned()
            .collect();
        self.history.update(customers, x, duration_s, &frozen);
        if let Some(mut ev) = self.pending.take() {
            ev.xbar = self.history.xbar_for(&ev.customers);
            self.events.push(ev);
        }
    }

    /// Plan and record one full round; the static-arrival loop.
    pub fn run_round(&mut self, instance: &Instance) -> Result<RoundPlan, SchedulerError> {
        let plan = self.plan(instance, Vec::new())?;
        let x = allocation_of(&plan.schedule, &plan.customers);
        self.record(instance, &plan.customers, &x, instance.budget);
        Ok(plan)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ids(n: usize) -> Vec<CustomerId> {
        (0..n).map(|i| CustomerId::new(format!("c{i}"))).collect()
    }

    #[test]
    fn running_average_examples() {
        let cs = ids(2);
        let mut h = History::new(HistoryMode::RunningAverage);
        h.update(&cs, &Allocation(vec![3.0, 1.0]), 60.0, &[]);
        assert_eq!(h.xbar_for(&cs), vec![3.0, 1.0]);

        let mut h = History::new(HistoryMode::RunningAverage);
        h.update(&cs, &Allocation(vec![4.0, 0.0]), 60.0, &[]);
        h.update(&cs, &Allocation(vec![0.0, 4.0]), 60.0, &[]);
        assert_eq!(h.xbar_for(&cs), vec![2.0, 2.0]);
        assert_eq!(h.rounds(), 2);
    }

    #[test]
    fn discounted_example() {
        let cs = ids(2);
        let mut h = History::new(HistoryMode::Discounted(0.1));
        h.update(&cs, &Allocation(vec![4.0, 0.0]), 60.0, &[]);
        let mut h2 = History::new(HistoryMode::Discounted(0.1));
        h2.xbar.insert(cs[0].clone(), 4.0);
        h2.xbar.insert(cs[1].clone(), 0.0);
        h2.update(&cs, &Allocation(vec![0.0, 4.0]), 60.0, &[]);
        let x = h2.xbar_for(&cs);
        assert!((x[0] - 3.6).abs() < 1e-12 && (x[1] - 0.4).abs() < 1e-12);
        assert!((h.xbar_for(&cs)[0] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn duration_weighting() {
        let cs = ids(1);
        let mut h = History::new(HistoryMode::RunningAverage);
        h.update(&cs, &Allocation(vec![6.0]), 60.0, &[]);
        h.update(&cs, &Allocation(vec![0.0]), 120.0, &[]);
        assert!((h.xbar_for(&cs)[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn selection_examples() {
        let b = Allocation(vec![4.0, 1.0]);
        let e = Allocation(vec![1.0, 4.0]);
        let corners = [b.clone(), e.clone()];
        assert_eq!(select_allocation(&corners, &[3.0, 1.0], Fairness::Leximin, 0.5), 1);
        assert_eq!(select_allocation(&corners, &[2.0, 2.0], Fairness::Leximin, 1.0 / 3.0), 0);
        let corners = [Allocation(vec![1.0, 1.0]), Allocation(vec![3.0, 0.0])];
        assert_eq!(select_allocation(&corners, &[0.0, 9.0], Fairness::Alpha(0.0), 0.5), 1);
    }

    #[test]
    fn config_validation() {
        assert!(RoundConfig::default().validate().is_ok());
        let c = RoundConfig {
            replan_s: Some(1000.0),
            ..RoundConfig::default()
        };
        assert!(c.validate().is_err());
        let c = RoundConfig {
            discount: Some(0.0),
            ..RoundConfig::default()
        };
        assert!(c.validate().is_err());
    }

    proptest! {
        #[test]
        fn running_average_is_the_mean(
            xs in prop::collection::vec(prop::collection::vec(0.0f64..20.0, 3), 1..60)
        ) {
            let cs = ids(3);
            let mut h = History::new(HistoryMode::RunningAverage);
            for x in &xs {
                h.update(&cs, &Allocation(x.clone()), 300.0, &[]);
            }
            let got = h.xbar_for(&cs);
            for k in 0..3 {
                let mean: f64 = xs.iter().map(|x| x[k]).sum::<f64>() / xs.len() as f64;
                prop_assert!((got[k] - mean).abs() <= 1e-10 * mean.max(1.0));
                prop_assert!(got[k] >= 0.0);
            }
        }
    }
}
