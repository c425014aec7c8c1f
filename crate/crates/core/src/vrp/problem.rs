use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::sync::{Arc, OnceLock};

use crate::model::{
    time_path, Instance, ModelError, PairRole, Schedule, Task, TaskId, TravelModel, TIME_EPS,
};
use crate::utility::cmp_tol;

const NEIGHBORS: usize = 12;

/// Role of a task inside the dense problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    Single,
    /// Pickup; the payload is the dropoff's task index.
    Pickup(usize),
    /// Dropoff; the payload is the pickup's task index.
    Dropoff(usize),
    /// Dropoff of a ride already on board the given vehicle.
    Onboard(usize),
}

#[derive(Debug, Clone)]
pub struct VehicleSpec {
    pub start: usize,
    pub home: usize,
    pub ready: f64,
    pub limit: f64,
    pub ret: bool,
    pub cap: u32,
    pub load0: u32,
    div: f64,
}

/// Unit of assignment: a single task, or a pickup with its dropoff.
#[derive(Debug, Clone)]
pub struct Job {
    pub tasks: Vec<usize>,
    pub customer: usize,
    pub pinned: Option<usize>,
}

/// An instance in dense index form. Nodes are tasks `0..n`, then vehicle start
/// positions, then vehicle homes.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub instance: Arc<Instance>,
    pub n: usize,
    pub k: usize,
    pub nv: usize,
    pub cust: Vec<usize>,
    pub service: Vec<f64>,
    /// Deadlines relative to the round start; infinity when absent.
    pub deadline: Vec<f64>,
    pub kind: Vec<TaskKind>,
    pub credit: Vec<u32>,
    pub pinned: Vec<Option<usize>>,
    pub vehicles: Vec<VehicleSpec>,
    pub jobs: Vec<Job>,
    pub job_of: Vec<usize>,
    nn: usize,
    base: Vec<f64>,
    near: OnceLock<Vec<Vec<usize>>>,
}

impl Prepared {
    pub fn new(instance: Arc<Instance>) -> Result<Self, ModelError> {
        let inst = &*instance;
        let n = inst.tasks.len();
        let nv = inst.vehicles.len();
        let k = inst.customers.len();
        let index: HashMap<&TaskId, usize> =
            inst.tasks.iter().enumerate().map(|(i, t)| (&t.id, i)).collect();
        let cust_index: HashMap<_, usize> =
            inst.customers.iter().enumerate().map(|(i, c)| (c, i)).collect();
        let vid_index: HashMap<_, usize> = inst
            .vehicles
            .iter()
            .enumerate()
            .map(|(i, v)| (&v.vehicle.id, i))
            .collect();

        let mut onboard_of = HashMap::new();
        for (vi, v) in inst.vehicles.iter().enumerate() {
            for d in &v.onboard {
                onboard_of.insert(index[d], vi);
            }
        }

        let mut cust = Vec::with_capacity(n);
        let mut service = Vec::with_capacity(n);
        let mut deadline = Vec::with_capacity(n);
        let mut kind = Vec::with_capacity(n);
        let mut credit = Vec::with_capacity(n);
        let mut pinned = Vec::with_capacity(n);
        for (i, t) in inst.tasks.iter().enumerate() {
            cust.push(
                *cust_index
                    .get(&t.customer)
                    .ok_or_else(|| ModelError::UnknownCustomer(t.id.clone()))?,
            );
            service.push(t.service_time);
            deadline.push(t.deadline.map_or(f64::INFINITY, |d| d - inst.start_time));
            credit.push(t.credit(inst.rides));
            let kd = if let Some(&v) = onboard_of.get(&i) {
                TaskKind::Onboard(v)
            } else {
                match &t.pair {
                    None => TaskKind::Single,
                    Some(PairRole::PickupOf(d)) => TaskKind::Pickup(index[d]),
                    Some(PairRole::DropoffOf(p)) => TaskKind::Dropoff(index[p]),
                }
            };
            kind.push(kd);
            let pin = match kd {
                TaskKind::Onboard(v) => Some(v),
                _ => inst.committed.get(&t.id).map(|v| vid_index[v]),
            };
            pinned.push(pin);
        }

        let mut jobs = Vec::new();
        let mut job_of = vec![usize::MAX; n];
        for i in 0..n {
            let tasks = match kind[i] {
                TaskKind::Single | TaskKind::Onboard(_) => vec![i],
                TaskKind::Pickup(d) => vec![i, d],
                TaskKind::Dropoff(_) => continue,
            };
            let pin = tasks.iter().find_map(|&t| pinned[t]);
            for &t in &tasks {
                job_of[t] = jobs.len();
            }
            jobs.push(Job {
                customer: cust[i],
                tasks,
                pinned: pin,
            });
        }

        // Locations of every node, in node order.
        let mut locs: Vec<&crate::model::Location> = inst.tasks.iter().map(|t| &t.location).collect();
        locs.extend(inst.vehicles.iter().map(|v| &v.position));
        locs.extend(inst.vehicles.iter().map(|v| &v.vehicle.start_location));
        let nn = locs.len();
        let mut base = vec![0.0; nn * nn];
        match &inst.travel {
            TravelModel::Euclidean => {
                for a in 0..nn {
                    for b in 0..nn {
                        base[a * nn + b] = locs[a].point.distance(&locs[b].point);
                    }
                }
            }
            model @ TravelModel::Matrix(m) => {
                let idx: Vec<usize> = locs
                    .iter()
                    .map(|l| model.index_of(l).map(|i| i.expect("matrix index")))
                    .collect::<Result<_, _>>()?;
                for a in 0..nn {
                    for b in 0..nn {
                        base[a * nn + b] = if locs[a] == locs[b] {
                            0.0
                        } else {
                            m.get(idx[a], idx[b])
                        };
                    }
                }
            }
        }
        let euclid = matches!(inst.travel, TravelModel::Euclidean);
        let vehicles = inst
            .vehicles
            .iter()
            .enumerate()
            .map(|(i, v)| VehicleSpec {
                start: n + i,
                home: n + nv + i,
                ready: v.ready_at,
                limit: v.limit.min(inst.budget),
                ret: v.return_home,
                cap: v.vehicle.capacity,
                load0: v.onboard.len() as u32,
                div: if euclid { v.vehicle.speed } else { 1.0 },
            })
            .collect();

        let prepared = Self {
            n,
            k,
            nv,
            cust,
            service,
            deadline,
            kind,
            credit,
            pinned,
            vehicles,
            jobs,
            job_of,
            nn,
            base,
            near: OnceLock::new(),
            instance,
        };
        for v in 0..nv {
            if prepared.eval_route(v, &[]).is_none() {
                return Err(ModelError::StrandedVehicle(
                    prepared.instance.vehicles[v].vehicle.id.clone(),
                ));
            }
        }
        Ok(prepared)
    }

    /// Travel seconds for vehicle `v` between nodes `a` and `b`.
    #[inline]
    pub fn tt(&self, v: usize, a: usize, b: usize) -> f64 {
        self.base[a * self.nn + b] / self.vehicles[v].div
    }

    /// Untimed distance-like quantity used for neighbor lists.
    #[inline]
    pub fn raw(&self, a: usize, b: usize) -> f64 {
        self.base[a * self.nn + b]
    }

    /// For every task, the closest other tasks (at most `NEIGHBORS`), nearest first.
    pub fn neighbors(&self) -> &[Vec<usize>] {
        self.near.get_or_init(|| {
            (0..self.n)
                .map(|i| {
                    let mut others: Vec<usize> = (0..self.n).filter(|&j| j != i).collect();
                    let key = |j: &usize| (self.raw(i, *j), *j);
                    if others.len() > NEIGHBORS {
                        others.select_nth_unstable_by(NEIGHBORS, |a, b| {
                            key(a).partial_cmp(&key(b)).unwrap()
                        });
                        others.truncate(NEIGHBORS);
                    }
                    others.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
                    others
                })
                .collect()
        })
    }

    /// Whether task `i` may be served by vehicle `v`.
    #[inline]
    pub fn allowed(&self, i: usize, v: usize) -> bool {
        self.pinned[i].is_none_or(|p| p == v)
    }

    /// Per-task objective contributions for a weight vector.
    pub fn values(&self, weights: &[f64], boosted: &HashSet<TaskId>) -> Values {
        let boost = (0..self.n)
            .map(|i| {
                self.pinned[i].is_some()
                    || (!boosted.is_empty() && boosted.contains(&self.instance.tasks[i].id))
            })
            .collect();
        let weight = (0..self.n)
            .map(|i| weights[self.cust[i]] * f64::from(self.credit[i]))
            .collect();
        Values { boost, weight }
    }

    /// Ending time of a route, or `None` if it violates any constraint.
    pub fn eval_route(&self, v: usize, seq: &[usize]) -> Option<f64> {
        let spec = &self.vehicles[v];
        let mut load = spec.load0 as i64;
        let mut open = 0usize;
        let mut at = spec.start;
        let mut clock = spec.ready;
        let mut seen_pickups: smallset::Small = Default::default();
        for &i in seq {
            if !self.allowed(i, v) {
                return None;
            }
            match self.kind[i] {
                TaskKind::Single => {}
                TaskKind::Pickup(_) => {
                    load += 1;
                    open += 1;
                    if load > i64::from(spec.cap) {
                        return None;
                    }
                    seen_pickups.insert(i);
                }
                TaskKind::Dropoff(p) => {
                    if !seen_pickups.remove(p) {
                        return None;
                    }
                    load -= 1;
                    open -= 1;
                }
                TaskKind::Onboard(ov) => {
                    if ov != v {
                        return None;
                    }
                    load -= 1;
                }
            }
            let arrival = clock + self.tt(v, at, i);
            let completion = arrival + self.service[i];
            if completion > self.deadline[i] + TIME_EPS {
                return None;
            }
            clock = completion;
            at = i;
        }
        if open != 0 {
            return None;
        }
        let end = if spec.ret {
            clock + self.tt(v, at, spec.home)
        } else {
            clock
        };
        (end <= spec.limit + TIME_EPS).then_some(end)
    }

    /// Score of a set of routes.
    pub fn score(&self, routes: &[Vec<usize>], values: &Values) -> Score {
        let mut s = Score::zero(self.k);
        for r in routes {
            for &i in r {
                s.add(i, self, values);
            }
        }
        s
    }

    /// Timed schedule for per-vehicle routes. Panics if a route is invalid,
    /// which would mean the solver produced an infeasible plan.
    pub fn to_schedule(&self, routes: &[Vec<usize>]) -> Schedule {
        let inst = &*self.instance;
        let paths = routes
            .iter()
            .enumerate()
            .map(|(v, r)| {
                let seq: Vec<&Task> = r.iter().map(|&i| &inst.tasks[i]).collect();
                time_path(inst, &inst.vehicles[v], &seq)
                    .unwrap_or_else(|e| panic!("solver produced an infeasible path: {e}"))
            })
            .collect();
        Schedule {
            start_time: inst.start_time,
            round_duration: inst.budget,
            paths,
        }
    }

    /// Dense routes for a schedule over the same instance. Unknown tasks are
    /// dropped, then stops are removed from the back of any infeasible route
    /// until it validates. Tasks reused across paths keep their first occurrence.
    pub fn routes_from_schedule(&self, schedule: &Schedule) -> Vec<Vec<usize>> {
        let index: HashMap<&TaskId, usize> = self
            .instance
            .tasks
            .iter()
            .enumerate()
            .map(|(i, t)| (&t.id, i))
            .collect();
        let vindex: HashMap<_, usize> = self
            .instance
            .vehicles
            .iter()
            .enumerate()
            .map(|(i, v)| (&v.vehicle.id, i))
            .collect();
        let mut routes = vec![Vec::new(); self.nv];
        let mut used = vec![false; self.n];
        for path in &schedule.paths {
            let Some(&v) = vindex.get(&path.vehicle) else {
                continue;
            };
            let mut r: Vec<usize> = path
                .stops
                .iter()
                .filter_map(|s| index.get(&s.task).copied())
                .filter(|&i| !used[i])
                .collect();
            while !r.is_empty() && self.eval_route(v, &r).is_none() {
                repair_once(self, v, &mut r);
            }
            for &i in &r {
                used[i] = true;
            }
            routes[v] = r;
        }
        routes
    }
}

/// Drop the last stop; a dropped pickup or dropoff takes its partner with it.
fn repair_once(p: &Prepared, _v: usize, r: &mut Vec<usize>) {
    if let Some(last) = r.pop() {
        let partner = match p.kind[last] {
            TaskKind::Pickup(d) => Some(d),
            TaskKind::Dropoff(q) => Some(q),
            _ => None,
        };
        if let Some(q) = partner {
            r.retain(|&i| i != q);
        }
    }
}

pub struct Values {
    pub boost: Vec<bool>,
    pub weight: Vec<f64>,
}

/// Lexicographic objective: committed tasks, then weighted throughput, then
/// total throughput, then per-customer counts in customer order.
#[derive(Debug, Clone, PartialEq)]
pub struct Score {
    pub boost: u32,
    pub primary: f64,
    pub total: u32,
    pub counts: Vec<u32>,
}

impl Score {
    pub fn zero(k: usize) -> Self {
        Self {
            boost: 0,
            primary: 0.0,
            total: 0,
            counts: vec![0; k],
        }
    }

    #[inline]
    pub fn add(&mut self, i: usize, p: &Prepared, values: &Values) {
        self.boost += u32::from(values.boost[i]);
        self.primary += values.weight[i];
        self.total += p.credit[i];
        self.counts[p.cust[i]] += p.credit[i];
    }

    #[inline]
    pub fn sub(&mut self, i: usize, p: &Prepared, values: &Values) {
        self.boost -= u32::from(values.boost[i]);
        self.primary -= values.weight[i];
        self.total -= p.credit[i];
        self.counts[p.cust[i]] -= p.credit[i];
    }

    /// Compare on (boost, primary, total), optionally then on counts.
    pub fn cmp_with(&self, other: &Score, with_counts: bool) -> Ordering {
        self.boost
            .cmp(&other.boost)
            .then_with(|| cmp_tol(self.primary, other.primary))
            .then_with(|| self.total.cmp(&other.total))
            .then_with(|| {
                if with_counts {
                    self.counts.cmp(&other.counts)
                } else {
                    Ordering::Equal
                }
            })
    }
}

mod smallset {
    /// Tiny set of task indices; routes hold few open pickups at a time.
    #[derive(Default)]
    pub struct Small(Vec<usize>);

    impl Small {
        pub fn insert(&mut self, i: usize) {
            self.0.push(i);
        }

        pub fn remove(&mut self, i: usize) -> bool {
            match self.0.iter().position(|&x| x == i) {
                Some(p) => {
                    self.0.swap_remove(p);
                    true
                }
                None => false,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Task, Vehicle};

    #[test]
    fn eval_matches_model_timing() {
        let inst = Instance::new(
            vec!["c1".into(), "c2".into()],
            vec![
                Task::new("a", "c1", 100.0, 0.0, 10.0),
                Task::new("b", "c2", 200.0, 0.0, 10.0),
                Task::new("c", "c2", -300.0, 0.0, 10.0),
            ],
            vec![Vehicle::new("v", 0.0, 0.0, 10.0)],
            60.0,
            TravelModel::Euclidean,
        )
        .unwrap();
        let p = Prepared::new(Arc::new(inst)).unwrap();
        assert_eq!(p.eval_route(0, &[0, 1]), Some(40.0));
        assert_eq!(p.eval_route(0, &[0, 2]), None);
        assert_eq!(p.eval_route(0, &[2]), Some(40.0));
        let s = p.to_schedule(&[vec![0, 1]]);
        assert_eq!(s.paths[0].end, 40.0);
    }
}
