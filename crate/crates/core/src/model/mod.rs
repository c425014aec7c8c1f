//! Domain types shared by the solvers, the boundary search, the scheduler and
//! the emulator.
//!
//! Locations are planar coordinates in meters. Times are seconds; path and
//! schedule timestamps are offsets from the schedule's `start_time`, while task
//! arrival times and deadlines are absolute trace times.

mod io;
mod travel;

pub use io::{
    read_interest_maps, read_task_lines, read_travel_matrix, write_task_lines, ParseError,
    TaskRecord,
};
pub use travel::{travel_time, TravelMatrix, TravelModel};

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack used when comparing timestamps against budgets and deadlines.
pub const TIME_EPS: f64 = 1e-9;

macro_rules! string_id {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(s: impl Into<String>) -> Self {
                Self(s.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }
    };
}

string_id!(
    /// Identifier of a customer (restaurant, zone, sensing app).
    CustomerId
);
string_id!(TaskId);
string_id!(VehicleId);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("task {0}: service time must be finite and non-negative")]
    BadServiceTime(TaskId),
    #[error("task {0}: deadline must be later than the arrival time")]
    BadDeadline(TaskId),
    #[error("task {0}: pair partner {1} is missing, asymmetric, or owned by another customer")]
    BadPair(TaskId, TaskId),
    #[error("duplicate task id {0}")]
    DuplicateTask(TaskId),
    #[error("duplicate customer id {0}")]
    DuplicateCustomer(CustomerId),
    #[error("interest map for {map} contains task {task} owned by {owner}")]
    ForeignTask {
        map: CustomerId,
        task: TaskId,
        owner: CustomerId,
    },
    #[error("vehicle {0}: speed must be positive and capacity at least 1")]
    BadVehicle(VehicleId),
    #[error("duplicate vehicle id {0}")]
    DuplicateVehicle(VehicleId),
    #[error("location id {0:?} is not registered in the travel matrix")]
    UnknownLocation(Option<String>),
    #[error("travel matrix: {0}")]
    BadMatrix(String),
    #[error("round duration must be positive")]
    BadBudget,
    #[error("task {0} references unknown customer")]
    UnknownCustomer(TaskId),
    #[error("committed or onboard task {0} references an unknown task or vehicle")]
    BadCommitment(TaskId),
    #[error("vehicle {0} cannot get home within its limit even with an empty path")]
    StrandedVehicle(VehicleId),
}

/// Planar point in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn lerp(&self, other: &Point, frac: f64) -> Point {
        Point::new(
            self.x + (other.x - self.x) * frac,
            self.y + (other.y - self.y) * frac,
        )
    }
}

/// A point plus the optional id under which it is registered in a travel matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Location {
    pub point: Point,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
}

impl Location {
    pub fn at(x: f64, y: f64) -> Self {
        Self {
            point: Point::new(x, y),
            id: None,
        }
    }

    pub fn with_id(x: f64, y: f64, id: impl Into<String>) -> Self {
        Self {
            point: Point::new(x, y),
            id: Some(id.into()),
        }
    }
}

/// Which half of a pickup/dropoff pair a task is.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairRole {
    /// This task is the pickup of the ride whose dropoff is the referenced task.
    PickupOf(TaskId),
    /// This task is the dropoff of the ride whose pickup is the referenced task.
    DropoffOf(TaskId),
}

impl PairRole {
    pub fn partner(&self) -> &TaskId {
        match self {
            PairRole::PickupOf(t) | PairRole::DropoffOf(t) => t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: TaskId,
    pub customer: CustomerId,
    pub location: Location,
    pub service_time: f64,
    pub arrival_time: f64,
    pub deadline: Option<f64>,
    pub pair: Option<PairRole>,
}

impl Task {
    pub fn new(
        id: impl Into<String>,
        customer: impl Into<String>,
        x: f64,
        y: f64,
        service_time: f64,
    ) -> Self {
        Self {
            id: TaskId::new(id),
            customer: CustomerId::new(customer),
            location: Location::at(x, y),
            service_time,
            arrival_time: 0.0,
            deadline: None,
            pair: None,
        }
    }

    pub fn with_deadline(mut self, deadline: f64) -> Self {
        self.deadline = Some(deadline);
        self
    }

    pub fn with_arrival(mut self, arrival: f64) -> Self {
        self.arrival_time = arrival;
        self
    }

    pub fn with_pair(mut self, role: PairRole) -> Self {
        self.pair = Some(role);
        self
    }

    pub fn is_pickup(&self) -> bool {
        matches!(self.pair, Some(PairRole::PickupOf(_)))
    }

    pub fn is_dropoff(&self) -> bool {
        matches!(self.pair, Some(PairRole::DropoffOf(_)))
    }

    /// Throughput credit earned by completing this task.
    pub fn credit(&self, rides: RideCounting) -> u32 {
        match (&self.pair, rides) {
            (Some(PairRole::PickupOf(_)), RideCounting::One) => 0,
            _ => 1,
        }
    }

    fn validate(&self) -> Result<(), ModelError> {
        if !(self.service_time.is_finite() && self.service_time >= 0.0) {
            return Err(ModelError::BadServiceTime(self.id.clone()));
        }
        if let Some(d) = self.deadline {
            if !(d > self.arrival_time) {
                return Err(ModelError::BadDeadline(self.id.clone()));
            }
        }
        Ok(())
    }
}

/// How a completed pickup/dropoff pair counts toward its customer's throughput.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RideCounting {
    /// A ride counts once, credited at its dropoff.
    #[default]
    One,
    /// Pickup and dropoff each count as a task.
    Two,
}

/// A customer's current list of desired tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterestMap {
    pub customer: CustomerId,
    pub tasks: Vec<Task>,
}

impl InterestMap {
    pub fn new(customer: impl Into<String>, tasks: Vec<Task>) -> Result<Self, ModelError> {
        let map = Self {
            customer: CustomerId::new(customer),
            tasks,
        };
        map.validate()?;
        Ok(map)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let mut seen = HashSet::new();
        for t in &self.tasks {
            if t.customer != self.customer {
                return Err(ModelError::ForeignTask {
                    map: self.customer.clone(),
                    task: t.id.clone(),
                    owner: t.customer.clone(),
                });
            }
            if !seen.insert(&t.id) {
                return Err(ModelError::DuplicateTask(t.id.clone()));
            }
            t.validate()?;
        }
        Ok(())
    }
}

/// Tasks from all customers merged into one set, customer tags preserved.
#[derive(Debug, Clone, PartialEq)]
pub struct MergedTasks {
    pub customers: Vec<CustomerId>,
    pub tasks: Vec<Task>,
}

/// Merge interest maps into a single tagged task set.
pub fn merge_interest_maps(maps: &[InterestMap]) -> Result<MergedTasks, ModelError> {
    let mut customers = Vec::with_capacity(maps.len());
    let mut seen_customers = HashSet::new();
    let mut seen_tasks = HashSet::new();
    let mut tasks = Vec::new();
    for map in maps {
        map.validate()?;
        if !seen_customers.insert(map.customer.clone()) {
            return Err(ModelError::DuplicateCustomer(map.customer.clone()));
        }
        customers.push(map.customer.clone());
        for t in &map.tasks {
            if !seen_tasks.insert(t.id.clone()) {
                return Err(ModelError::DuplicateTask(t.id.clone()));
            }
            tasks.push(t.clone());
        }
    }
    check_pairs(&tasks, &HashSet::new())?;
    Ok(MergedTasks { customers, tasks })
}

/// Checks that every pair role is mirrored by its partner. Dropoffs listed in
/// `onboard` may legitimately have no pickup in the set.
fn check_pairs(tasks: &[Task], onboard: &HashSet<&TaskId>) -> Result<(), ModelError> {
    let by_id: HashMap<&TaskId, &Task> = tasks.iter().map(|t| (&t.id, t)).collect();
    for t in tasks {
        let Some(role) = &t.pair else { continue };
        let partner = role.partner();
        if matches!(role, PairRole::DropoffOf(_)) && onboard.contains(&t.id) {
            continue;
        }
        let bad = || ModelError::BadPair(t.id.clone(), partner.clone());
        let p = by_id.get(partner).ok_or_else(bad)?;
        let mirrored = match (role, &p.pair) {
            (PairRole::PickupOf(_), Some(PairRole::DropoffOf(back)))
            | (PairRole::DropoffOf(_), Some(PairRole::PickupOf(back))) => back == &t.id,
            _ => false,
        };
        if !mirrored || p.customer != t.customer {
            return Err(bad());
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub id: VehicleId,
    /// Home depot; paths start here unless a round overrides the position.
    pub start_location: Location,
    /// Meters per second.
    pub speed: f64,
    /// Maximum number of concurrently open pickup/dropoff pairs.
    pub capacity: u32,
    pub return_home: bool,
}

impl Vehicle {
    pub fn new(id: impl Into<String>, x: f64, y: f64, speed: f64) -> Self {
        Self {
            id: VehicleId::new(id),
            start_location: Location::at(x, y),
            speed,
            capacity: 1,
            return_home: false,
        }
    }

    pub fn returning(mut self) -> Self {
        self.return_home = true;
        self
    }

    pub fn with_capacity(mut self, capacity: u32) -> Self {
        self.capacity = capacity;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.speed.is_finite() && self.speed > 0.0) || self.capacity < 1 {
            return Err(ModelError::BadVehicle(self.id.clone()));
        }
        Ok(())
    }
}

/// A vehicle as it stands at the start of a planning round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub vehicle: Vehicle,
    pub position: Location,
    /// Offset from round start at which the vehicle becomes free.
    pub ready_at: f64,
    /// Offset by which the path (including a return leg) must end; at most the round budget.
    pub limit: f64,
    pub return_home: bool,
    /// Dropoffs whose pickups were already completed on this vehicle.
    pub onboard: Vec<TaskId>,
}

impl VehicleState {
    /// Fresh state at the vehicle's home, free for the whole round.
    pub fn at_home(vehicle: Vehicle, budget: f64) -> Self {
        Self {
            position: vehicle.start_location.clone(),
            return_home: vehicle.return_home,
            vehicle,
            ready_at: 0.0,
            limit: budget,
            onboard: Vec::new(),
        }
    }
}

/// Everything a solver needs for one round.
#[derive(Debug, Clone)]
pub struct Instance {
    /// Absolute trace time at which the round starts.
    pub start_time: f64,
    /// Round duration B in seconds.
    pub budget: f64,
    pub customers: Vec<CustomerId>,
    pub tasks: Vec<Task>,
    pub vehicles: Vec<VehicleState>,
    pub travel: TravelModel,
    /// Tasks already promised to a vehicle; they must stay on it.
    pub committed: BTreeMap<TaskId, VehicleId>,
    pub rides: RideCounting,
}

impl Instance {
    /// Instance with every vehicle at home at time 0.
    pub fn new(
        customers: Vec<CustomerId>,
        tasks: Vec<Task>,
        vehicles: Vec<Vehicle>,
        budget: f64,
        travel: TravelModel,
    ) -> Result<Self, ModelError> {
        let vehicles = vehicles
            .into_iter()
            .map(|v| VehicleState::at_home(v, budget))
            .collect();
        let inst = Self {
            start_time: 0.0,
            budget,
            customers,
            tasks,
            vehicles,
            travel,
            committed: BTreeMap::new(),
            rides: RideCounting::One,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn from_maps(
        maps: &[InterestMap],
        vehicles: Vec<Vehicle>,
        budget: f64,
        travel: TravelModel,
    ) -> Result<Self, ModelError> {
        let merged = merge_interest_maps(maps)?;
        Self::new(merged.customers, merged.tasks, vehicles, budget, travel)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.budget.is_finite() && self.budget > 0.0) {
            return Err(ModelError::BadBudget);
        }
        let customers: HashSet<&CustomerId> = self.customers.iter().collect();
        if customers.len() != self.customers.len() {
            let dup = self
                .customers
                .iter()
                .enumerate()
                .find(|(i, c)| self.customers[..*i].contains(c))
                .map(|(_, c)| c.clone())
                .unwrap();
            return Err(ModelError::DuplicateCustomer(dup));
        }
        let mut ids = HashSet::new();
        for t in &self.tasks {
            t.validate()?;
            if !customers.contains(&t.customer) {
                return Err(ModelError::UnknownCustomer(t.id.clone()));
            }
            if !ids.insert(&t.id) {
                return Err(ModelError::DuplicateTask(t.id.clone()));
            }
        }
        let mut vids = HashSet::new();
        let mut onboard = HashSet::new();
        for v in &self.vehicles {
            v.vehicle.validate()?;
            if !vids.insert(&v.vehicle.id) {
                return Err(ModelError::DuplicateVehicle(v.vehicle.id.clone()));
            }
            for d in &v.onboard {
                if !ids.contains(d) || !onboard.insert(d) {
                    return Err(ModelError::BadCommitment(d.clone()));
                }
            }
        }
        for (t, v) in &self.committed {
            if !ids.contains(t) || !vids.contains(v) {
                return Err(ModelError::BadCommitment(t.clone()));
            }
        }
        check_pairs(&self.tasks, &onboard)?;
        self.travel.validate()?;
        Ok(())
    }

    pub fn customer_index(&self, c: &CustomerId) -> Option<usize> {
        self.customers.iter().position(|k| k == c)
    }

    pub fn task(&self, id: &TaskId) -> Option<&Task> {
        self.tasks.iter().find(|t| &t.id == id)
    }

    pub fn task_map(&self) -> HashMap<&TaskId, &Task> {
        self.tasks.iter().map(|t| (&t.id, t)).collect()
    }

    /// Restrict to the given customers' tasks; vehicles and travel model are kept.
    pub fn restricted_to(&self, customers: &[CustomerId]) -> Instance {
        let keep: HashSet<&CustomerId> = customers.iter().collect();
        let tasks: Vec<Task> = self
            .tasks
            .iter()
            .filter(|t| keep.contains(&t.customer))
            .cloned()
            .collect();
        let kept_ids: HashSet<&TaskId> = tasks.iter().map(|t| &t.id).collect();
        let mut inst = self.clone();
        inst.customers = customers.to_vec();
        inst.committed.retain(|t, _| kept_ids.contains(t));
        for v in &mut inst.vehicles {
            v.onboard.retain(|t| kept_ids.contains(t));
        }
        inst.tasks = tasks;
        inst
    }

    /// Same instance with a different vehicle roster.
    pub fn with_vehicles(&self, vehicles: Vec<VehicleState>) -> Instance {
        let vids: HashSet<&VehicleId> = vehicles.iter().map(|v| &v.vehicle.id).collect();
        let mut inst = self.clone();
        inst.committed.retain(|_, v| vids.contains(v));
        inst.vehicles = vehicles;
        inst
    }
}

/// One serviced task on a path. Times are offsets from the schedule start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stop {
    pub task: TaskId,
    pub customer: CustomerId,
    pub credit: u32,
    pub departure: f64,
    pub arrival: f64,
    pub completion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub vehicle: VehicleId,
    pub stops: Vec<Stop>,
    /// Time at which the path ends, including the return leg when one is required.
    pub end: f64,
}

impl Path {
    pub fn empty(vehicle: VehicleId) -> Self {
        Self {
            vehicle,
            stops: Vec::new(),
            end: 0.0,
        }
    }

    pub fn task_ids(&self) -> impl Iterator<Item = &TaskId> {
        self.stops.iter().map(|s| &s.task)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub start_time: f64,
    pub round_duration: f64,
    pub paths: Vec<Path>,
}

impl Schedule {
    /// A schedule in which every vehicle stays idle.
    pub fn idle(instance: &Instance) -> Self {
        Self {
            start_time: instance.start_time,
            round_duration: instance.budget,
            paths: instance
                .vehicles
                .iter()
                .map(|v| Path::empty(v.vehicle.id.clone()))
                .collect(),
        }
    }

    pub fn task_count(&self) -> usize {
        self.paths.iter().map(|p| p.stops.len()).sum()
    }

    pub fn task_ids(&self) -> impl Iterator<Item = &TaskId> {
        self.paths.iter().flat_map(|p| p.task_ids())
    }

    pub fn contains(&self, task: &TaskId) -> bool {
        self.task_ids().any(|t| t == task)
    }

    pub fn path_of(&self, vehicle: &VehicleId) -> Option<&Path> {
        self.paths.iter().find(|p| &p.vehicle == vehicle)
    }
}

/// Per-customer throughput in tasks per minute, indexed like the round's customer list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct Allocation(pub Vec<f64>);

impl Allocation {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn dot(&self, w: &[f64]) -> f64 {
        self.0.iter().zip(w).map(|(x, w)| x * w).sum()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Allocation {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Throughput each customer receives from `schedule`: credited tasks completed
/// within the round, divided by the round length in minutes.
pub fn allocation_of(schedule: &Schedule, customers: &[CustomerId]) -> Allocation {
    let mut x = vec![0.0; customers.len()];
    if schedule.round_duration <= 0.0 {
        return Allocation(x);
    }
    let index: HashMap<&CustomerId, usize> =
        customers.iter().enumerate().map(|(i, c)| (c, i)).collect();
    let minutes = schedule.round_duration / 60.0;
    for stop in schedule.paths.iter().flat_map(|p| &p.stops) {
        if stop.completion <= schedule.round_duration + TIME_EPS {
            if let Some(&k) = index.get(&stop.customer) {
                x[k] += f64::from(stop.credit);
            }
        }
    }
    for v in &mut x {
        *v /= minutes;
    }
    Allocation(x)
}

/// Integer credited-task counts per customer; the exact form of [`allocation_of`].
pub fn credit_counts(schedule: &Schedule, customers: &[CustomerId]) -> Vec<u64> {
    let mut n = vec![0u64; customers.len()];
    for stop in schedule.paths.iter().flat_map(|p| &p.stops) {
        if stop.completion <= schedule.round_duration + TIME_EPS {
            if let Some(k) = customers.iter().position(|c| c == &stop.customer) {
                n[k] += u64::from(stop.credit);
            }
        }
    }
    n
}

/// Total time to execute `tasks` in order starting from the vehicle's home:
/// travel legs plus service times, plus the return leg iff the vehicle returns home.
pub fn path_cost(
    tasks: &[&Task],
    vehicle: &Vehicle,
    model: &TravelModel,
) -> Result<f64, ModelError> {
    let mut cost = 0.0;
    let mut at = &vehicle.start_location;
    for t in tasks {
        cost += travel_time(at, &t.location, model, vehicle)? + t.service_time;
        at = &t.location;
    }
    if vehicle.return_home {
        cost += travel_time(at, &vehicle.start_location, model, vehicle)?;
    }
    Ok(cost)
}

/// Why a path or schedule is not executable.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Violation {
    #[error("path ends at {end:.3}s, beyond its limit {limit:.3}s")]
    Budget { end: f64, limit: f64 },
    #[error("task {0} completes after its deadline")]
    Deadline(TaskId),
    #[error("task {0} appears more than once")]
    Repeated(TaskId),
    #[error("task {0} is not part of the instance")]
    UnknownTask(TaskId),
    #[error("pair {0} is split, reversed, or spread over vehicles")]
    Pair(TaskId),
    #[error("vehicle {0} exceeds its capacity")]
    Capacity(VehicleId),
    #[error("task {0} is committed to another vehicle")]
    Commitment(TaskId),
    #[error("vehicle {0} is not part of the instance")]
    UnknownVehicle(VehicleId),
    #[error("stop timing for {0} is inconsistent with the travel model")]
    Timing(TaskId),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Time a task sequence for one vehicle state, checking every path constraint.
pub fn time_path(
    instance: &Instance,
    state: &VehicleState,
    seq: &[&Task],
) -> Result<Path, Violation> {
    let vehicle = &state.vehicle;
    let onboard: HashSet<&TaskId> = state.onboard.iter().collect();
    let mut load = state.onboard.len() as i64;
    let mut open: HashSet<&TaskId> = HashSet::new();
    let mut seen: HashSet<&TaskId> = HashSet::new();
    let mut stops = Vec::with_capacity(seq.len());
    let mut at = &state.position;
    let mut clock = state.ready_at;
    for t in seq {
        if !seen.insert(&t.id) {
            return Err(Violation::Repeated(t.id.clone()));
        }
        if let Some(v) = instance.committed.get(&t.id) {
            if v != &vehicle.id {
                return Err(Violation::Commitment(t.id.clone()));
            }
        }
        match &t.pair {
            Some(PairRole::PickupOf(_)) => {
                open.insert(&t.id);
                load += 1;
                if load > i64::from(vehicle.capacity) {
                    return Err(Violation::Capacity(vehicle.id.clone()));
                }
            }
            Some(PairRole::DropoffOf(p)) => {
                if onboard.contains(&t.id) {
                    load -= 1;
                } else if open.remove(p) {
                    load -= 1;
                } else {
                    return Err(Violation::Pair(t.id.clone()));
                }
            }
            None => {}
        }
        if onboard.contains(&t.id) && !matches!(t.pair, Some(PairRole::DropoffOf(_))) {
            return Err(Violation::Pair(t.id.clone()));
        }
        let departure = clock;
        let arrival = departure + travel_time(at, &t.location, &instance.travel, vehicle)?;
        let completion = arrival + t.service_time;
        if let Some(d) = t.deadline {
            if instance.start_time + completion > d + TIME_EPS {
                return Err(Violation::Deadline(t.id.clone()));
            }
        }
        stops.push(Stop {
            task: t.id.clone(),
            customer: t.customer.clone(),
            credit: t.credit(instance.rides),
            departure,
            arrival,
            completion,
        });
        clock = completion;
        at = &t.location;
    }
    if let Some(p) = open.iter().next() {
        return Err(Violation::Pair((*p).clone()));
    }
    let mut end = clock;
    if state.return_home {
        end += travel_time(at, &vehicle.start_location, &instance.travel, vehicle)?;
    }
    let limit = state.limit.min(instance.budget);
    if end > limit + TIME_EPS {
        return Err(Violation::Budget { end, limit });
    }
    Ok(Path {
        vehicle: vehicle.id.clone(),
        stops,
        end,
    })
}

/// Check that a schedule is executable for the instance: every path respects
/// the budget, deadlines, pairing, capacity and commitments, and no task is
/// served twice. Stop timestamps must match a re-timing of the path.
pub fn validate_schedule(schedule: &Schedule, instance: &Instance) -> Result<(), Violation> {
    let tasks = instance.task_map();
    let mut served: HashSet<&TaskId> = HashSet::new();
    for path in &schedule.paths {
        let state = instance
            .vehicles
            .iter()
            .find(|v| v.vehicle.id == path.vehicle)
            .ok_or_else(|| Violation::UnknownVehicle(path.vehicle.clone()))?;
        let mut seq = Vec::with_capacity(path.stops.len());
        for s in &path.stops {
            let t = tasks
                .get(&s.task)
                .ok_or_else(|| Violation::UnknownTask(s.task.clone()))?;
            if !served.insert(&s.task) {
                return Err(Violation::Repeated(s.task.clone()));
            }
            seq.push(*t);
        }
        let timed = time_path(instance, state, &seq)?;
        for (a, b) in timed.stops.iter().zip(&path.stops) {
            let close = |x: f64, y: f64| (x - y).abs() <= 1e-6 * (1.0 + x.abs());
            if !(close(a.arrival, b.arrival) && close(a.completion, b.completion)) {
                return Err(Violation::Timing(b.task.clone()));
            }
        }
    }
    Ok(())
}

/// Build a timed schedule from per-vehicle task id sequences (one per vehicle
/// state, in instance order).
pub fn schedule_from_sequences(
    instance: &Instance,
    sequences: &[Vec<TaskId>],
) -> Result<Schedule, Violation> {
    let tasks = instance.task_map();
    let mut paths = Vec::with_capacity(instance.vehicles.len());
    for (state, seq) in instance.vehicles.iter().zip(sequences) {
        let seq: Vec<&Task> = seq
            .iter()
            .map(|id| {
                tasks
                    .get(id)
                    .copied()
                    .ok_or_else(|| Violation::UnknownTask(id.clone()))
            })
            .collect::<Result<_, _>>()?;
        paths.push(time_path(instance, state, &seq)?);
    }
    Ok(Schedule {
        start_time: instance.start_time,
        round_duration: instance.budget,
        paths,
    })
}

/// Shared, immutable instance handle used across concurrent solver calls.
pub type SharedInstance = Arc<Instance>;
