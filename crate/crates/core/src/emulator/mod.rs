//! Trace-driven emulation: tasks arrive over time, a policy replans at fixed
//! ticks, vehicles follow their plans, and unscheduled tasks expire.

mod baselines;
mod metrics;

pub use baselines::{max_throughput_schedule, round_robin_schedule};
pub use metrics::{
    jain_index, write_metrics_csv, write_wait_histogram, write_xbar_series, CustomerMetrics, Metrics,
    SeriesPoint, WAIT_BIN_S,
};

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boundary::OutcomeKind;
use crate::model::{
    allocation_of, schedule_from_sequences, travel_time, Allocation, CustomerId, Instance, Location,
    ModelError, PairRole, RideCounting, Schedule, Task, TaskId, TravelModel, Vehicle, VehicleState,
    TIME_EPS,
};
use crate::scheduler::{RoundConfig, RoundEvent, Scheduler, SchedulerError};
use crate::vrp::{dedicated_schedule, Prepared, SolverConfig, SolverError};

pub const DEFAULT_EXPIRY_S: f64 = 600.0;

#[derive(Debug, Error)]
pub enum EmulatorError {
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("trace: {0}")]
    Trace(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Mobius,
    MaxThroughput,
    Dedicated,
    RoundRobin,
}

impl Policy {
    pub const ALL: [Policy; 4] = [
        Policy::Mobius,
        Policy::MaxThroughput,
        Policy::Dedicated,
        Policy::RoundRobin,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Policy::Mobius => "mobius",
            Policy::MaxThroughput => "max_throughput",
            Policy::Dedicated => "dedicated",
            Policy::RoundRobin => "round_robin",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown policy {s:?}"))
    }
}

/// Timestamped task arrivals for a fixed customer roster.
#[derive(Debug, Clone)]
pub struct Trace {
    pub customers: Vec<CustomerId>,
    tasks: Vec<Task>,
    pub duration: f64,
}

impl Trace {
    pub fn new(customers: Vec<CustomerId>, mut tasks: Vec<Task>, duration: f64) -> Result<Self, EmulatorError> {
        if !(duration.is_finite() && duration >= 0.0) {
            return Err(EmulatorError::Trace("duration must be finite and non-negative".into()));
        }
        for t in &tasks {
            if !(t.arrival_time >= 0.0 && t.arrival_time <= duration) {
                return Err(EmulatorError::Trace(format!(
                    "task {} arrives at {}, outside [0, {duration}]",
                    t.id, t.arrival_time
                )));
            }
        }
        let by_id: HashMap<&TaskId, f64> = tasks.iter().map(|t| (&t.id, t.arrival_time)).collect();
        for t in &tasks {
            if let Some(PairRole::DropoffOf(p)) = &t.pair {
                if by_id.get(p).is_some_and(|&a| a != t.arrival_time) {
                    return Err(EmulatorError::Trace(format!(
                        "pickup {p} and dropoff {} arrive at different times",
                        t.id
                    )));
                }
            }
        }
        // Full task validation, including pairing and customer membership.
        Instance::new(customers.clone(), tasks.clone(), Vec::new(), duration.max(1.0), TravelModel::Euclidean)?;
        tasks.sort_by(|a, b| a.arrival_time.total_cmp(&b.arrival_time));
        Ok(Self {
            customers,
            tasks,
            duration,
        })
    }

    /// Roster in order of first appearance; duration defaults to the last arrival.
    pub fn from_tasks(tasks: Vec<Task>, duration: Option<f64>) -> Result<Self, EmulatorError> {
        let mut customers: Vec<CustomerId> = Vec::new();
        for t in &tasks {
            if !customers.contains(&t.customer) {
                customers.push(t.customer.clone());
            }
        }
        let last = tasks.iter().map(|t| t.arrival_time).fold(0.0, f64::max);
        Self::new(customers, tasks, duration.unwrap_or(last))
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub round: RoundConfig,
    pub solver: SolverConfig,
    pub expiry_s: f64,
    pub vehicles: Vec<Vehicle>,
    pub travel: TravelModel,
    pub rides: RideCounting,
}

impl SimConfig {
    pub fn new(vehicles: Vec<Vehicle>, round: RoundConfig, solver: SolverConfig) -> Self {
        Self {
            round,
            solver,
            expiry_s: DEFAULT_EXPIRY_S,
            vehicles,
            travel: TravelModel::Euclidean,
            rides: RideCounting::One,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Pending,
    Committed,
    Completed,
    Expired,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SimEventKind {
    /// Never placed on a path within the expiry window, or deadline passed.
    Expired,
    /// Dropped from a path because it could no longer be served.
    Cancelled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimEvent {
    pub t_s: f64,
    pub task: TaskId,
    pub customer: CustomerId,
    pub kind: SimEventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Completion {
    pub task: TaskId,
    pub customer: CustomerId,
    pub vehicle: usize,
    pub credit: u32,
    pub request_s: f64,
    pub service_start_s: f64,
    pub completion_s: f64,
    /// Pickups and single-stop tasks; dropoffs carry no wait.
    pub has_wait: bool,
}

/// One leg of a vehicle's plan in absolute time. `task` is `None` for the
/// trip home at the end of a plan.
#[derive(Debug, Clone, PartialEq)]
struct Leg {
    task: Option<TaskId>,
    from: Location,
    to: Location,
    departure: f64,
    arrival: f64,
    completion: f64,
}

#[derive(Debug, Clone)]
struct VehicleSim {
    vehicle: Vehicle,
    /// Last location reached.
    position: Location,
    plan: VecDeque<Leg>,
    onboard: Vec<TaskId>,
}

/// Mutable emulation state; every arrived task has exactly one status.
#[derive(Debug, Clone)]
pub struct SimState {
    pub clock: f64,
    trace: Arc<Trace>,
    next: usize,
    tasks: IndexMap<TaskId, Task>,
    status: IndexMap<TaskId, TaskStatus>,
    vehicles: Vec<VehicleSim>,
    completions: Vec<Completion>,
    events: Vec<SimEvent>,
    expiry_s: f64,
    rides: RideCounting,
    travel: TravelModel,
}

/// Per-status task counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct StatusCounts {
    pub pending: usize,
    pub committed: usize,
    pub completed: usize,
    pub expired: usize,
}

impl StatusCounts {
    pub fn total(&self) -> usize {
        self.pending + self.committed + self.completed + self.expired
    }
}

impl SimState {
    pub fn new(trace: Arc<Trace>, config: &SimConfig) -> Self {
        let vehicles = config
            .vehicles
            .iter()
            .map(|v| VehicleSim {
                vehicle: v.clone(),
                position: v.start_location.clone(),
                plan: VecDeque::new(),
                onboard: Vec::new(),
            })
            .collect();
        Self {
            clock: 0.0,
            trace,
            next: 0,
            tasks: IndexMap::new(),
            status: IndexMap::new(),
            vehicles,
            completions: Vec::new(),
            events: Vec::new(),
            expiry_s: config.expiry_s,
            rides: config.rides,
            travel: config.travel.clone(),
        }
    }

    pub fn arrived(&self) -> usize {
        self.status.len()
    }

    pub fn status_of(&self, id: &TaskId) -> Option<TaskStatus> {
        self.status.get(id).copied()
    }

    pub fn counts(&self) -> StatusCounts {
        let mut c = StatusCounts::default();
        for s in self.status.values() {
            match s {
                TaskStatus::Pending => c.pending += 1,
                TaskStatus::Committed => c.committed += 1,
                TaskStatus::Completed => c.completed += 1,
                TaskStatus::Expired => c.expired += 1,
            }
        }
        c
    }

    pub fn completions(&self) -> &[Completion] {
        &self.completions
    }

    pub fn events(&self) -> &[SimEvent] {
        &self.events
    }

    pub fn arrived_tasks(&self) -> impl Iterator<Item = &Task> {
        self.tasks.values()
    }

    /// Task ids on vehicle `v`'s plan, in order.
    pub fn plan_of(&self, v: usize) -> Vec<TaskId> {
        self.vehicles[v].plan.iter().filter_map(|l| l.task.clone()).collect()
    }

    /// Position of vehicle `v` at time `t ≥ clock`, interpolated along its plan.
    pub fn position_at(&self, v: usize, t: f64) -> Location {
        let sim = &self.vehicles[v];
        let mut at = sim.position.clone();
        for leg in &sim.plan {
            if t < leg.departure {
                break;
            }
            if t < leg.arrival {
                let frac = (t - leg.departure) / (leg.arrival - leg.departure);
                return Location {
                    point: leg.from.point.lerp(&leg.to.point, frac),
                    id: None,
                };
            }
            at = leg.to.clone();
        }
        at
    }

    /// Advance to `until`: finish legs completed by then, inject arrivals,
    /// and expire tasks left unscheduled for the expiry window or past their
    /// deadline.
    pub fn step(&mut self, until: f64) {
        assert!(until + TIME_EPS >= self.clock, "clock must not go backwards");
        let until = until.max(self.clock);
        for (vi, sim) in self.vehicles.iter_mut().enumerate() {
            while sim.plan.front().is_some_and(|l| l.completion <= until + TIME_EPS) {
                let leg = sim.plan.pop_front().unwrap();
                sim.position = leg.to.clone();
                let Some(id) = leg.task else { continue };
                let task = &self.tasks[&id];
                debug_assert!(task.deadline.is_none_or(|d| leg.completion <= d + 1e-6));
                match &task.pair {
                    Some(PairRole::PickupOf(d)) => sim.onboard.push(d.clone()),
                    Some(PairRole::DropoffOf(_)) => sim.onboard.retain(|t| t != &id),
                    None => {}
                }
                self.completions.push(Completion {
                    task: id.clone(),
                    customer: task.customer.clone(),
                    vehicle: vi,
                    credit: task.credit(self.rides),
                    request_s: task.arrival_time,
                    service_start_s: leg.arrival,
                    completion_s: leg.completion,
                    has_wait: !task.is_dropoff(),
                });
                self.status.insert(id, TaskStatus::Completed);
            }
        }
        let trace = self.trace.clone();
        while let Some(t) = trace.tasks.get(self.next) {
            if t.arrival_time > until + TIME_EPS {
                break;
            }
            self.tasks.insert(t.id.clone(), t.clone());
            self.status.insert(t.id.clone(), TaskStatus::Pending);
            self.next += 1;
        }
        let stale: Vec<TaskId> = self
            .status
            .iter()
            .filter(|(_, s)| **s == TaskStatus::Pending)
            .filter(|(id, _)| {
                let t = &self.tasks[*id];
                until - t.arrival_time + TIME_EPS >= self.expiry_s || t.deadline.is_some_and(|d| d <= until + TIME_EPS)
            })
            .map(|(id, _)| id.clone())
            .collect();
        for id in stale {
            self.expire(&id, until, SimEventKind::Expired);
        }
        self.clock = until;
    }

    fn expire(&mut self, id: &TaskId, t_s: f64, kind: SimEventKind) {
        self.status.insert(id.clone(), TaskStatus::Expired);
        self.events.push(SimEvent {
            t_s,
            task: id.clone(),
            customer: self.tasks[id].customer.clone(),
            kind,
        });
    }

    /// Planning instance at the current clock, plus the remaining plan as a
    /// warm start. A leg already under way is left to finish: its vehicle
    /// becomes available where and when the leg ends.
    pub fn snapshot(&self, budget: f64, return_home_every: Option<f64>) -> Result<(Instance, Option<Schedule>), EmulatorError> {
        let now = self.clock;
        let mut states = Vec::with_capacity(self.vehicles.len());
        let mut in_progress: HashSet<&TaskId> = HashSet::new();
        let mut sequences = Vec::with_capacity(self.vehicles.len());
        let mut committed = std::collections::BTreeMap::new();
        for sim in &self.vehicles {
            let mut position = sim.position.clone();
            let mut ready = 0.0;
            let mut onboard = sim.onboard.clone();
            let mut rest: Vec<&Leg> = sim.plan.iter().collect();
            if let Some(head) = sim.plan.front().filter(|l| l.departure < now - TIME_EPS) {
                position = head.to.clone();
                ready = head.completion - now;
                rest.remove(0);
                if let Some(id) = &head.task {
                    in_progress.insert(id);
                    match &self.tasks[id].pair {
                        Some(PairRole::PickupOf(d)) => onboard.push(d.clone()),
                        Some(PairRole::DropoffOf(_)) => onboard.retain(|t| t != id),
                        None => {}
                    }
                }
            }
            let seq: Vec<TaskId> = rest.iter().filter_map(|l| l.task.clone()).collect();
            for t in &seq {
                committed.insert(t.clone(), sim.vehicle.id.clone());
            }
            sequences.push(seq);

            let (mut ret, mut limit) = (sim.vehicle.return_home, budget);
            if let Some(h) = return_home_every {
                let next_home = ((now / h).floor() + 1.0) * h;
                ret = true;
                limit = limit.min(next_home - now);
            }
            if ret {
                let home = travel_time(&position, &sim.vehicle.start_location, &self.travel, &sim.vehicle)?;
                if ready + home > limit + TIME_EPS {
                    log::warn!(
                        "vehicle {} cannot be home by {:.1}s; planning it without a return leg",
                        sim.vehicle.id,
                        now + limit
                    );
                    ret = false;
                    limit = budget;
                }
            }
            states.push(VehicleState {
                vehicle: sim.vehicle.clone(),
                position,
                ready_at: ready,
                limit,
                return_home: ret,
                onboard,
            });
        }
        let tasks: Vec<Task> = self
            .status
            .iter()
            .filter(|(id, s)| match s {
                TaskStatus::Pending => true,
                TaskStatus::Committed => !in_progress.contains(id),
                _ => false,
            })
            .map(|(id, _)| self.tasks[id].clone())
            .collect();
        let inst = Instance {
            start_time: now,
            budget,
            customers: self.trace.customers.clone(),
            tasks,
            vehicles: states,
            travel: self.travel.clone(),
            committed,
            rides: self.rides,
        };
        inst.validate()?;
        let warm = schedule_from_sequences(&inst, &sequences).ok();
        if warm.is_none() && sequences.iter().any(|s| !s.is_empty()) {
            log::debug!("remaining plan at {now:.1}s no longer fits the horizon");
        }
        Ok((inst, warm))
    }

    /// Replace every vehicle's plan after its current leg with `schedule`,
    /// computed on `inst` (from [`SimState::snapshot`] at this clock).
    /// Committed tasks missing from the new plan are cancelled.
    pub fn apply(&mut self, inst: &Instance, schedule: &Schedule) {
        let now = self.clock;
        let planned: HashSet<&TaskId> = schedule.task_ids().collect();
        let mut keep: HashSet<TaskId> = HashSet::new();
        let by_id = inst.task_map();
        for (sim, state) in self.vehicles.iter_mut().zip(&inst.vehicles) {
            let head = sim.plan.front().filter(|l| l.departure < now - TIME_EPS).cloned();
            sim.plan.clear();
            let mut at = sim.position.clone();
            if let Some(h) = head {
                if let Some(t) = &h.task {
                    keep.insert(t.clone());
                }
                at = h.to.clone();
                sim.plan.push_back(h);
            }
            let Some(path) = schedule.path_of(&state.vehicle.id) else { continue };
            let mut clock = now + state.ready_at;
            for stop in &path.stops {
                let to = by_id[&stop.task].location.clone();
                sim.plan.push_back(Leg {
                    task: Some(stop.task.clone()),
                    from: at.clone(),
                    to: to.clone(),
                    departure: now + stop.departure,
                    arrival: now + stop.arrival,
                    completion: now + stop.completion,
                });
                clock = now + stop.completion;
                at = to;
            }
            let end = now + path.end;
            if state.return_home && end > clock + TIME_EPS {
                sim.plan.push_back(Leg {
                    task: None,
                    from: at,
                    to: state.vehicle.start_location.clone(),
                    departure: clock,
                    arrival: end,
                    completion: end,
                });
            }
        }
        let ids: Vec<TaskId> = self.status.keys().cloned().collect();
        for id in ids {
            match self.status[&id] {
                TaskStatus::Pending if planned.contains(&id) => {
                    self.status.insert(id, TaskStatus::Committed);
                }
                TaskStatus::Committed if !planned.contains(&id) && !keep.contains(&id) => {
                    if self.vehicles.iter().any(|v| v.onboard.contains(&id)) {
                        log::warn!("onboard dropoff {id} dropped from the plan");
                    }
                    self.expire(&id, now, SimEventKind::Cancelled);
                }
                _ => {}
            }
        }
    }

    /// Credited completions per customer (in roster order) up to time `t`.
    pub fn credit_until(&self, t: f64) -> Vec<u64> {
        let customers = &self.trace.customers;
        let mut n = vec![0u64; customers.len()];
        for c in &self.completions {
            if c.completion_s <= t + TIME_EPS {
                if let Some(k) = customers.iter().position(|x| x == &c.customer) {
                    n[k] += u64::from(c.credit);
                }
            }
        }
        n
    }
}

/// Replanning policy with whatever state it carries between ticks.
enum Driver {
    Mobius {
        scheduler: Box<Scheduler>,
        last: Option<(Instance, Vec<CustomerId>, f64)>,
    },
    Baseline(Policy),
}

impl Driver {
    fn new(policy: Policy, config: &SimConfig) -> Result<Self, EmulatorError> {
        Ok(match policy {
            Policy::Mobius => Driver::Mobius {
                scheduler: Box::new(Scheduler::new(config.round.clone(), config.solver.clone())?),
                last: None,
            },
            p => Driver::Baseline(p),
        })
    }

    /// Feed realized throughput since the last plan into the history.
    fn observe(&mut self, sim: &SimState) {
        let Driver::Mobius { scheduler, last } = self else { return };
        let Some((inst, customers, since)) = last.take() else { return };
        let duration = sim.clock - since;
        if duration <= 0.0 {
            return;
        }
        let minutes = duration / 60.0;
        let mut x = vec![0.0; customers.len()];
        for c in sim.completions() {
            if c.completion_s > since + TIME_EPS && c.completion_s <= sim.clock + TIME_EPS {
                if let Some(k) = customers.iter().position(|k| k == &c.customer) {
                    x[k] += f64::from(c.credit) / minutes;
                }
            }
        }
        scheduler.record(&inst, &customers, &Allocation(x), duration);
    }

    fn plan(&mut self, inst: &Instance, warm: Option<Schedule>, config: &SimConfig) -> Result<Schedule, EmulatorError> {
        match self {
            Driver::Mobius { scheduler, last } => {
                let plan = scheduler.plan(inst, warm.into_iter().collect())?;
                *last = Some((inst.clone(), plan.customers.clone(), inst.start_time));
                Ok(plan.schedule)
            }
            Driver::Baseline(p) => {
                let prep = Arc::new(Prepared::new(Arc::new(inst.clone()))?);
                plan_baseline(*p, &prep, warm, &config.solver)
            }
        }
    }

    fn rounds(&self) -> Vec<RoundEvent> {
        match self {
            Driver::Mobius { scheduler, .. } => scheduler.events().to_vec(),
            Driver::Baseline(_) => Vec::new(),
        }
    }
}

/// One baseline plan for a prepared instance.
pub fn plan_baseline(
    policy: Policy,
    problem: &Arc<Prepared>,
    warm: Option<Schedule>,
    solver: &SolverConfig,
) -> Result<Schedule, EmulatorError> {
    Ok(match policy {
        Policy::MaxThroughput => max_throughput_schedule(problem, solver, warm.into_iter().collect())?,
        Policy::Dedicated => dedicated_schedule(&problem.instance, solver)?,
        Policy::RoundRobin => round_robin_schedule(problem, warm.as_ref()),
        Policy::Mobius => unreachable!("mobius is not a baseline"),
    })
}

/// Everything a trace run produces.
#[derive(Debug, Clone)]
pub struct SimOutput {
    pub metrics: Metrics,
    pub final_state: SimState,
    pub rounds: Vec<RoundEvent>,
}

/// Replay `trace` under `policy`, replanning every `replan_s` seconds.
pub fn run_trace(trace: &Trace, policy: Policy, config: &SimConfig) -> Result<SimOutput, EmulatorError> {
    config.round.validate()?;
    let trace = Arc::new(trace.clone());
    let mut sim = SimState::new(trace.clone(), config);
    let mut driver = Driver::new(policy, config)?;
    let interval = config.round.replan_interval();
    let mut series = Vec::new();
    let mut tick = 0usize;
    while (tick as f64) * interval < trace.duration - TIME_EPS {
        sim.step(tick as f64 * interval);
        driver.observe(&sim);
        series.push(SeriesPoint::capture(&sim, tick));
        let (inst, warm) = sim.snapshot(config.round.round_s, config.round.return_home_every_s)?;
        let schedule = driver.plan(&inst, warm, config)?;
        sim.apply(&inst, &schedule);
        tick += 1;
    }
    sim.step(trace.duration);
    driver.observe(&sim);
    series.push(SeriesPoint::capture(&sim, tick));
    let metrics = Metrics::from_sim(policy, &sim, series);
    Ok(SimOutput {
        metrics,
        rounds: driver.rounds(),
        final_state: sim,
    })
}

/// Per-round statistics of a static-arrival run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StaticRound {
    pub allocation: Vec<f64>,
    pub xbar: Vec<f64>,
    pub calls: usize,
    pub stages: usize,
    pub kind: Option<OutcomeKind>,
}

/// Static arrivals: every round starts with the vehicles at home and the
/// same task set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StaticRun {
    pub policy: Policy,
    pub customers: Vec<CustomerId>,
    pub rounds: Vec<StaticRound>,
}

impl StaticRun {
    pub fn final_xbar(&self) -> Vec<f64> {
        self.rounds
            .last()
            .map_or_else(|| vec![0.0; self.customers.len()], |r| r.xbar.clone())
    }

    pub fn total(&self) -> f64 {
        self.final_xbar().iter().sum()
    }

    pub fn jain(&self) -> f64 {
        jain_index(&self.final_xbar())
    }
}

pub fn run_static(
    instance: &Instance,
    policy: Policy,
    rounds: usize,
    round: &RoundConfig,
    solver: &SolverConfig,
) -> Result<StaticRun, EmulatorError> {
    let k = instance.customers.len();
    let mut out = StaticRun {
        policy,
        customers: instance.customers.clone(),
        rounds: Vec::with_capacity(rounds),
    };
    let mut sum = vec![0.0; k];
    let mut push = |out: &mut StaticRun, x: Vec<f64>, calls, stages, kind| {
        for (s, v) in sum.iter_mut().zip(&x) {
            *s += v;
        }
        let n = (out.rounds.len() + 1) as f64;
        out.rounds.push(StaticRound {
            xbar: sum.iter().map(|s| s / n).collect(),
            allocation: x,
            calls,
            stages,
            kind,
        });
    };
    match policy {
        Policy::Mobius => {
            let mut sched = Scheduler::new(round.clone(), solver.clone())?;
            for _ in 0..rounds {
                let plan = sched.run_round(instance)?;
                let x = allocation_of(&plan.schedule, &instance.customers).0;
                push(&mut out, x, plan.calls, plan.stages, Some(plan.kind));
            }
        }
        p => {
            // Same instance every round, and the baselines are deterministic.
            let prep = Arc::new(Prepared::new(Arc::new(instance.clone()))?);
            let s = plan_baseline(p, &prep, None, solver)?;
            let x = allocation_of(&s, &instance.customers).0;
            for _ in 0..rounds {
                push(&mut out, x.clone(), 0, 0, None);
            }
        }
    }
    Ok(out)
}
