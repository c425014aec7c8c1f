//! Branch and bound over task sequences, one vehicle at a time.

use std::cmp::Ordering;
use std::collections::HashMap;

use super::problem::{Prepared, Score, TaskKind, Values};
use super::{SolverError, SolverRequest};
use crate::model::{Schedule, TIME_EPS};

/// Hard ceiling from the bitmask representation.
const MASK_BITS: usize = 63;

/// Exact optimum of the lexicographic objective (weighted throughput, then
/// total throughput, then per-customer counts in customer order).
pub fn exact_vrp(req: &SolverRequest) -> Result<Schedule, SolverError> {
    req.check()?;
    let p = &*req.problem;
    let cfg = &req.config;
    if !cfg.fits_exact(p.n, p.nv) || p.n > MASK_BITS {
        return Err(SolverError::TooLarge {
            tasks: p.n,
            vehicles: p.nv,
            max_tasks: cfg.exact_max_tasks.min(MASK_BITS),
            max_vehicles: cfg.exact_max_vehicles,
        });
    }
    let values = p.values(req.weights.as_slice(), &req.boosted);
    let routes = Search::new(p, &values).run();
    Ok(p.to_schedule(&routes))
}

struct Search<'a> {
    p: &'a Prepared,
    values: &'a Values,
    /// Tasks some vehicle after `v` could serve on its own: `later[v]`.
    later: Vec<u64>,
    pickups: u64,
    memo: HashMap<(usize, u64, usize), f64>,
    routes: Vec<Vec<usize>>,
    best: Option<(Score, Vec<Vec<usize>>)>,
}

impl<'a> Search<'a> {
    fn new(p: &'a Prepared, values: &'a Values) -> Self {
        let reach: Vec<u64> = (0..p.nv)
            .map(|v| {
                let spec = &p.vehicles[v];
                (0..p.n)
                    .filter(|&i| p.allowed(i, v) && reachable(p, v, spec.start, spec.ready, i))
                    .fold(0u64, |m, i| m | (1 << i))
            })
            .collect();
        let mut later = vec![0u64; p.nv];
        for v in (0..p.nv.saturating_sub(1)).rev() {
            later[v] = later[v + 1] | reach[v + 1];
        }
        let pickups = (0..p.n)
            .filter(|&i| matches!(p.kind[i], TaskKind::Pickup(_)))
            .fold(0u64, |m, i| m | (1 << i));
        Self {
            p,
            values,
            later,
            pickups,
            memo: HashMap::new(),
            routes: vec![Vec::new(); p.nv],
            best: None,
        }
    }

    fn run(mut self) -> Vec<Vec<usize>> {
        if self.p.nv == 0 {
            return Vec::new();
        }
        let spec = &self.p.vehicles[0];
        let score = Score::zero(self.p.k);
        self.dfs(0, 0, spec.start, spec.ready, spec.load0, score);
        self.best.map(|(_, r)| r).unwrap_or_else(|| vec![Vec::new(); self.p.nv])
    }

    fn open(&self, mask: u64) -> u64 {
        let p = self.p;
        let mut open = 0u64;
        let mut m = mask & self.pickups;
        while m != 0 {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            if let TaskKind::Pickup(d) = p.kind[i] {
                if mask & (1 << d) == 0 {
                    open |= 1 << i;
                }
            }
        }
        open
    }

    fn bound(&self, v: usize, mask: u64, at: usize, clock: f64, score: &Score) -> Score {
        let p = self.p;
        let mut ub = score.clone();
        for i in 0..p.n {
            if mask & (1 << i) != 0 {
                continue;
            }
            let now = p.allowed(i, v) && reachable(p, v, at, clock, i);
            if now || self.later[v] & (1 << i) != 0 {
                ub.add(i, p, self.values);
            }
        }
        ub
    }

    fn dfs(&mut self, v: usize, mask: u64, at: usize, clock: f64, load: u32, score: Score) {
        let p = self.p;
        if let Some((best, _)) = &self.best {
            let ub = self.bound(v, mask, at, clock, &score);
            if ub.cmp_with(best, true) != Ordering::Greater {
                return;
            }
        }
        match self.memo.get(&(v, mask, at)) {
            Some(&t) if t <= clock => return,
            _ => {
                self.memo.insert((v, mask, at), clock);
            }
        }
        let spec = &p.vehicles[v];
        let open = self.open(mask);

        for i in 0..p.n {
            if mask & (1 << i) != 0 || !p.allowed(i, v) {
                continue;
            }
            let next_load = match p.kind[i] {
                TaskKind::Single => load,
                TaskKind::Pickup(_) => {
                    if load + 1 > spec.cap {
                        continue;
                    }
                    load + 1
                }
                TaskKind::Dropoff(q) => {
                    if open & (1 << q) == 0 {
                        continue;
                    }
                    load - 1
                }
                TaskKind::Onboard(ov) => {
                    if ov != v {
                        continue;
                    }
                    load - 1
                }
            };
            let arrival = clock + p.tt(v, at, i);
            let completion = arrival + p.service[i];
            if completion > p.deadline[i] + TIME_EPS {
                continue;
            }
            let end = if spec.ret {
                completion + p.tt(v, i, spec.home)
            } else {
                completion
            };
            if end > spec.limit + TIME_EPS {
                continue;
            }
            let mut s = score.clone();
            s.add(i, p, self.values);
            self.routes[v].push(i);
            self.dfs(v, mask | (1 << i), i, completion, next_load, s);
            self.routes[v].pop();
        }

        if open == 0 {
            let end = if spec.ret {
                clock + p.tt(v, at, spec.home)
            } else {
                clock
            };
            if end <= spec.limit + TIME_EPS {
                if v + 1 < p.nv {
                    let next = &p.vehicles[v + 1];
                    self.dfs(v + 1, mask, next.start, next.ready, next.load0, score);
                } else {
                    let better = self
                        .best
                        .as_ref()
                        .is_none_or(|(b, _)| score.cmp_with(b, true) == Ordering::Greater);
                    if better {
                        debug_assert!(self
                            .routes
                            .iter()
                            .enumerate()
                            .all(|(v, r)| p.eval_route(v, r).is_some()));
                        self.best = Some((score, self.routes.clone()));
                    }
                }
            }
        }
    }
}

/// Whether task `i` alone could still be completed (and the vehicle get home
/// if required) when leaving node `at` at `clock`.
fn reachable(p: &Prepared, v: usize, at: usize, clock: f64, i: usize) -> bool {
    let spec = &p.vehicles[v];
    let completion = clock + p.tt(v, at, i) + p.service[i];
    if completion > p.deadline[i] + TIME_EPS {
        return false;
    }
    let end = if spec.ret {
        completion + p.tt(v, i, spec.home)
    } else {
        completion
    };
    end <= spec.limit + TIME_EPS
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::model::{allocation_of, Instance, Task, TaskId, TravelModel, Vehicle};
    use crate::vrp::{SolverConfig, WeightVector};

    fn line() -> Arc<Prepared> {
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
        Arc::new(Prepared::new(Arc::new(inst)).unwrap())
    }

    fn ids(s: &Schedule) -> Vec<TaskId> {
        s.task_ids().cloned().collect()
    }

    #[test]
    fn line_instance_uniform_weights() {
        let p = line();
        let req = SolverRequest::new(p.clone(), WeightVector::new(vec![1.0, 1.0]).unwrap(), SolverConfig::default());
        let s = exact_vrp(&req).unwrap();
        assert_eq!(ids(&s), vec![TaskId::from("a"), TaskId::from("b")]);
        let x = allocation_of(&s, &p.instance.customers);
        assert_eq!(x.0, vec![1.0, 1.0]);
    }

    #[test]
    fn zero_weight_customer_rides_along() {
        let p = line();
        let req = SolverRequest::new(p, WeightVector::new(vec![0.0, 1.0]).unwrap(), SolverConfig::default());
        let s = exact_vrp(&req).unwrap();
        assert_eq!(ids(&s), vec![TaskId::from("a"), TaskId::from("b")]);
    }

    #[test]
    fn tight_budget_gives_empty_schedule() {
        let inst = Instance::new(
            vec!["c1".into()],
            vec![Task::new("a", "c1", 100.0, 0.0, 10.0)],
            vec![Vehicle::new("v", 0.0, 0.0, 10.0)],
            19.0,
            TravelModel::Euclidean,
        )
        .unwrap();
        let p = Arc::new(Prepared::new(Arc::new(inst)).unwrap());
        let req = SolverRequest::new(p, WeightVector::uniform(1), SolverConfig::default());
        assert_eq!(exact_vrp(&req).unwrap().task_count(), 0);
    }

    #[test]
    fn refuses_large_instances() {
        let tasks = (0..11)
            .map(|i| Task::new(format!("t{i}"), "c1", i as f64, 0.0, 1.0))
            .collect();
        let inst = Instance::new(
            vec!["c1".into()],
            tasks,
            vec![Vehicle::new("v", 0.0, 0.0, 10.0)],
            60.0,
            TravelModel::Euclidean,
        )
        .unwrap();
        let p = Arc::new(Prepared::new(Arc::new(inst)).unwrap());
        let req = SolverRequest::new(p, WeightVector::uniform(1), SolverConfig::default());
        assert!(matches!(exact_vrp(&req), Err(SolverError::TooLarge { .. })));
    }
}
