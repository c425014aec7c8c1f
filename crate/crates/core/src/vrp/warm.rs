//! Warm-start schedules for the heuristic solver.

use std::sync::{Arc, RwLock};

use super::{greedy_alpha_heuristic, heuristic_vrp, Prepared, SolverConfig, SolverError, SolverRequest, WeightVector};
use crate::model::{allocation_of, CustomerId, Instance, Path, Schedule, VehicleState};
use crate::utility::Fairness;

/// Customer index served by each vehicle under the dedicated policy: vehicle
/// `i` goes to customer `i mod |K|`, so spare vehicles go to the lowest indices.
pub fn dedicated_partition(vehicles: usize, customers: usize) -> Vec<usize> {
    (0..vehicles).map(|v| v % customers.max(1)).collect()
}

/// Each customer's tasks solved for throughput on its own share of the fleet.
pub fn dedicated_schedule(instance: &Instance, config: &SolverConfig) -> Result<Schedule, SolverError> {
    let k = instance.customers.len();
    let nv = instance.vehicles.len();
    if nv < k {
        return Err(SolverError::TooFewVehicles {
            vehicles: nv,
            customers: k,
        });
    }
    let part = dedicated_partition(nv, k);
    let mut paths: Vec<Option<Path>> = vec![None; nv];
    for (ci, c) in instance.customers.iter().enumerate() {
        let mine: Vec<usize> = (0..nv).filter(|&v| part[v] == ci).collect();
        let states: Vec<VehicleState> = mine.iter().map(|&v| instance.vehicles[v].clone()).collect();
        let sub = instance
            .restricted_to(std::slice::from_ref::<CustomerId>(c))
            .with_vehicles(states);
        let sched = super::solve_instance(&sub, &[1.0], config)?;
        for (path, &v) in sched.paths.into_iter().zip(&mine) {
            paths[v] = Some(path);
        }
    }
    Ok(Schedule {
        start_time: instance.start_time,
        round_duration: instance.budget,
        paths: paths.into_iter().map(|p| p.expect("every vehicle assigned")).collect(),
    })
}

/// Max-throughput, dedicated (only when there are at least as many vehicles as
/// customers) and greedy α-fair schedules, in that order.
pub fn build_warm_start_suite(
    problem: &Arc<Prepared>,
    fairness: Fairness,
    config: &SolverConfig,
) -> Result<Vec<Schedule>, SolverError> {
    let p = &**problem;
    if p.k == 0 {
        return Ok(vec![p.to_schedule(&vec![Vec::new(); p.nv])]);
    }
    let cfg = config.clone().with_backend(super::Backend::Heuristic);
    let mut suite = Vec::with_capacity(3);
    let req = SolverRequest::new(problem.clone(), WeightVector::uniform(p.k), cfg.clone());
    suite.push(heuristic_vrp(&req)?);
    if p.nv >= p.k {
        suite.push(dedicated_schedule(&p.instance, &cfg)?);
    }
    suite.push(greedy_alpha_heuristic(p, fairness, &cfg));
    Ok(suite)
}

/// Index of the schedule with the highest weighted throughput; earliest wins ties.
pub fn select_warm_start(
    suite: &[Schedule],
    weights: &[f64],
    customers: &[CustomerId],
) -> Result<usize, SolverError> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in suite.iter().enumerate() {
        let v = allocation_of(s, customers).dot(weights);
        if best.is_none_or(|(_, b)| crate::utility::cmp_tol(v, b) == std::cmp::Ordering::Greater) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i).ok_or(SolverError::EmptySuite)
}

/// Warm-start schedules shared by concurrent solver calls within a round.
/// Inserts append; snapshots copy the current list.
#[derive(Debug, Default)]
pub struct WarmStartCache {
    inner: RwLock<Vec<Schedule>>,
}

impl WarmStartCache {
    pub fn new(initial: Vec<Schedule>) -> Self {
        Self {
            inner: RwLock::new(initial),
        }
    }

    pub fn insert(&self, schedule: Schedule) {
        self.inner.write().expect("warm-start cache poisoned").push(schedule);
    }

    pub fn snapshot(&self) -> Vec<Schedule> {
        self.inner.read().expect("warm-start cache poisoned").clone()
    }

    pub fn len(&self) -> usize {
        self.inner.read().expect("warm-start cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Stop, TaskId};

    fn sched(counts: &[usize]) -> Schedule {
        let mut stops = Vec::new();
        for (k, &n) in counts.iter().enumerate() {
            for i in 0..n {
                stops.push(Stop {
                    task: TaskId::new(format!("c{k}-{i}")),
                    customer: CustomerId::new(format!("c{k}")),
                    credit: 1,
                    departure: 0.0,
                    arrival: 0.0,
                    completion: 1.0,
                });
            }
        }
        Schedule {
            start_time: 0.0,
            round_duration: 60.0,
            paths: vec![Path {
                vehicle: "v".into(),
                stops,
                end: 1.0,
            }],
        }
    }

    #[test]
    fn selection_and_tie_break() {
        let customers = vec![CustomerId::from("c0"), CustomerId::from("c1")];
        let suite = vec![sched(&[4, 0]), sched(&[0, 4]), sched(&[2, 2])];
        assert_eq!(select_warm_start(&suite, &[1.0, 0.0], &customers).unwrap(), 0);
        assert_eq!(select_warm_start(&suite, &[0.0, 1.0], &customers).unwrap(), 1);
        assert_eq!(select_warm_start(&suite, &[1.0, 1.0], &customers).unwrap(), 0);
        assert_eq!(select_warm_start(&suite[2..], &[1.0, 1.0], &customers).unwrap(), 0);
        assert!(select_warm_start(&[], &[1.0, 1.0], &customers).is_err());
    }

    #[test]
    fn partition_gives_spares_to_low_indices() {
        assert_eq!(dedicated_partition(4, 2), vec![0, 1, 0, 1]);
        assert_eq!(dedicated_partition(5, 2), vec![0, 1, 0, 1, 0]);
    }

    #[test]
    fn cache_grows() {
        let c = WarmStartCache::new(vec![sched(&[1, 0])]);
        std::thread::scope(|s| {
            for _ in 0..4 {
                s.spawn(|| c.insert(sched(&[0, 1])));
            }
        });
        assert_eq!(c.len(), 5);
        assert_eq!(c.snapshot().len(), 5);
    }
}
