//! Greedy α-fair schedule construction by return on investment, used as a
//! warm start.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::heuristic::improve;
use super::problem::{Prepared, TaskKind};
use super::{SolverConfig, WeightVector};
use crate::model::{Schedule, TaskId, TIME_EPS};
use crate::utility::{alpha_utility, cmp_tol, leximin_cmp, Fairness};

/// Repack/squeeze cycles before the final packing step.
const MAX_CYCLES: usize = 8;
/// Travel cost floor so co-located tasks rank first instead of dividing by zero.
const COST_FLOOR: f64 = 1e-9;

/// End state of a route that only grows at its tail.
#[derive(Debug, Clone)]
struct Tail {
    at: usize,
    clock: f64,
    load: u32,
}

/// Greedy α-fair schedule: append, per vehicle in turn, the feasible job with
/// the best utility gain per second of travel; re-pack the selection with the
/// throughput solver and squeeze in more jobs until none fit; then pack the
/// final schedule with the selected tasks boosted.
pub fn greedy_alpha_heuristic(
    p: &Prepared,
    fairness: Fairness,
    config: &SolverConfig,
) -> Schedule {
    if p.k == 0 || p.nv == 0 {
        return p.to_schedule(&vec![Vec::new(); p.nv]);
    }
    let stop_at = Instant::now() + Duration::from_secs_f64(config.time_limit_s.max(0.0));
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9);
    let uniform = WeightVector::uniform(p.k);
    let plain = p.values(uniform.as_slice(), &HashSet::new());

    let mut routes = vec![Vec::new(); p.nv];
    let mut selected = vec![false; p.jobs.len()];
    grow(p, fairness, &mut routes, &mut selected);
    for _ in 0..MAX_CYCLES {
        routes = improve(p, &plain, Some(&selected), routes, config.max_rounds, &mut rng, stop_at);
        if !grow(p, fairness, &mut routes, &mut selected) {
            break;
        }
    }

    let boosted: HashSet<TaskId> = routes
        .iter()
        .flatten()
        .map(|&i| p.instance.tasks[i].id.clone())
        .collect();
    let packing = p.values(uniform.as_slice(), &boosted);
    let routes = improve(p, &packing, None, routes, config.max_rounds, &mut rng, stop_at);
    p.to_schedule(&routes)
}

/// The job vehicle `v` would take first from an empty schedule.
pub fn greedy_first_pick(p: &Prepared, fairness: Fairness, v: usize) -> Option<TaskId> {
    let spec = &p.vehicles[v];
    let tail = Tail {
        at: spec.start,
        clock: spec.ready,
        load: spec.load0,
    };
    let h = vec![0u32; p.k];
    let used = vec![false; p.jobs.len()];
    best_append(p, fairness, v, &tail, &h, &used)
        .map(|(j, _)| p.instance.tasks[p.jobs[j].tasks[0]].id.clone())
}

/// Append jobs at route tails until no vehicle can take another. Returns
/// whether anything was added.
fn grow(p: &Prepared, fairness: Fairness, routes: &mut [Vec<usize>], selected: &mut [bool]) -> bool {
    let mut h = vec![0u32; p.k];
    for &i in routes.iter().flatten() {
        h[p.cust[i]] += p.credit[i];
    }
    let mut tails: Vec<Option<Tail>> = (0..p.nv).map(|v| tail_of(p, v, &routes[v])).collect();
    let mut added = false;
    loop {
        let mut progress = false;
        for v in 0..p.nv {
            let Some(tail) = &tails[v] else { continue };
            match best_append(p, fairness, v, tail, &h, selected) {
                Some((j, next)) => {
                    for &t in &p.jobs[j].tasks {
                        routes[v].push(t);
                        h[p.cust[t]] += p.credit[t];
                    }
                    debug_assert!(p.eval_route(v, &routes[v]).is_some());
                    selected[j] = true;
                    tails[v] = Some(next);
                    progress = true;
                    added = true;
                }
                None => tails[v] = None,
            }
        }
        if !progress {
            break;
        }
    }
    // Everything already routed counts as selected for the next repack.
    for &i in routes.iter().flatten() {
        selected[p.job_of[i]] = true;
    }
    added
}

fn tail_of(p: &Prepared, v: usize, route: &[usize]) -> Option<Tail> {
    let spec = &p.vehicles[v];
    let mut t = Tail {
        at: spec.start,
        clock: spec.ready,
        load: spec.load0,
    };
    for &i in route {
        t.clock += p.tt(v, t.at, i) + p.service[i];
        t.at = i;
        match p.kind[i] {
            TaskKind::Pickup(_) => t.load += 1,
            TaskKind::Dropoff(_) | TaskKind::Onboard(_) => t.load = t.load.saturating_sub(1),
            TaskKind::Single => {}
        }
    }
    Some(t)
}

/// Job with the greatest return on investment for vehicle `v`, with the tail
/// after appending it. Pairs are appended as pickup then dropoff.
fn best_append(
    p: &Prepared,
    fairness: Fairness,
    v: usize,
    tail: &Tail,
    h: &[u32],
    used: &[bool],
) -> Option<(usize, Tail)> {
    let spec = &p.vehicles[v];
    let minutes = p.instance.budget / 60.0;
    let base: Vec<f64> = h.iter().map(|&c| f64::from(c) / minutes).collect();
    let base_u = match fairness {
        Fairness::Alpha(a) => alpha_utility(a, &base),
        Fairness::Leximin => 0.0,
    };

    let mut best: Option<(usize, Tail, f64, Vec<f64>, f64)> = None;
    for (j, job) in p.jobs.iter().enumerate() {
        if used[j] || job.pinned.is_some_and(|pv| pv != v) {
            continue;
        }
        let first = job.tasks[0];
        if let TaskKind::Onboard(ov) = p.kind[first] {
            if ov != v {
                continue;
            }
        }
        if job.tasks.len() == 2 && tail.load + 1 > spec.cap {
            continue;
        }
        let mut clock = tail.clock;
        let mut at = tail.at;
        let mut cost = 0.0;
        let mut ok = true;
        let mut credit = 0;
        for &t in &job.tasks {
            let leg = p.tt(v, at, t);
            cost += leg;
            clock += leg + p.service[t];
            if clock > p.deadline[t] + TIME_EPS {
                ok = false;
                break;
            }
            credit += p.credit[t];
            at = t;
        }
        if !ok {
            continue;
        }
        let end = if spec.ret { clock + p.tt(v, at, spec.home) } else { clock };
        if end > spec.limit + TIME_EPS || credit == 0 {
            continue;
        }
        let mut x = base.clone();
        x[job.customer] += f64::from(credit) / minutes;
        let roi = match fairness {
            Fairness::Alpha(a) => (alpha_utility(a, &x) - base_u) / cost.max(COST_FLOOR),
            Fairness::Leximin => 0.0,
        };
        let better = match &best {
            None => true,
            Some((_, _, bcost, bx, broi)) => {
                let primary = match fairness {
                    Fairness::Alpha(_) => cmp_tol(roi, *broi),
                    Fairness::Leximin => leximin_cmp(&x, bx),
                };
                match primary {
                    Ordering::Greater => true,
                    Ordering::Less => false,
                    Ordering::Equal => cost < bcost - 1e-12,
                }
            }
        };
        if better {
            let load = match p.kind[first] {
                TaskKind::Onboard(_) => tail.load.saturating_sub(1),
                _ => tail.load,
            };
            best = Some((j, Tail { at, clock, load }, cost, x, roi));
        }
    }
    best.map(|(j, t, ..)| (j, t))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::model::{validate_schedule, Instance, Task, TravelModel, Vehicle};

    fn prepared(tasks: Vec<Task>, budget: f64) -> Prepared {
        let inst = Instance::new(
            vec!["c1".into(), "c2".into()],
            tasks,
            vec![Vehicle::new("v", 0.0, 0.0, 10.0)],
            budget,
            TravelModel::Euclidean,
        )
        .unwrap();
        Prepared::new(Arc::new(inst)).unwrap()
    }

    #[test]
    fn alpha_zero_takes_nearest() {
        let p = prepared(
            vec![
                Task::new("far", "c1", 300.0, 0.0, 10.0),
                Task::new("near", "c2", 0.0, -50.0, 10.0),
                Task::new("mid", "c1", 100.0, 0.0, 10.0),
            ],
            600.0,
        );
        let pick = greedy_first_pick(&p, Fairness::Alpha(0.0), 0);
        assert_eq!(pick, Some(TaskId::from("near")));
    }

    #[test]
    fn leximin_prefers_the_starved_customer() {
        let mut tasks: Vec<Task> = (0..5)
            .map(|i| Task::new(format!("a{i}"), "c1", 10.0 * i as f64, 0.0, 1.0))
            .collect();
        tasks.push(Task::new("b_near", "c2", 0.0, 200.0, 1.0));
        tasks.push(Task::new("b_far", "c2", 0.0, 400.0, 1.0));
        tasks.push(Task::new("a_more", "c1", 5.0, 0.0, 1.0));
        let p = prepared(tasks, 600.0);
        let routes = vec![(0..5).collect::<Vec<_>>()];
        let tail = tail_of(&p, 0, &routes[0]).unwrap();
        let mut used = vec![false; p.jobs.len()];
        for u in used.iter_mut().take(5) {
            *u = true;
        }
        let (j, _) = best_append(&p, Fairness::Leximin, 0, &tail, &[5, 0], &used).unwrap();
        assert_eq!(p.instance.tasks[p.jobs[j].tasks[0]].id, TaskId::from("b_near"));
        let (j, _) = best_append(&p, Fairness::from_alpha(100.0), 0, &tail, &[5, 0], &used).unwrap();
        assert_eq!(p.instance.tasks[p.jobs[j].tasks[0]].id, TaskId::from("b_near"));
    }

    #[test]
    fn empty_instance_is_idle() {
        let p = prepared(vec![], 600.0);
        let s = greedy_alpha_heuristic(&p, Fairness::Alpha(1.0), &SolverConfig::default());
        assert_eq!(s.task_count(), 0);
    }

    #[test]
    fn result_is_feasible() {
        let tasks = (0..12)
            .map(|i| {
                let c = if i % 3 == 0 { "c2" } else { "c1" };
                Task::new(format!("t{i}"), c, 37.0 * i as f64 - 200.0, 23.0 * (i % 5) as f64, 10.0)
            })
            .collect();
        let p = prepared(tasks, 120.0);
        let s = greedy_alpha_heuristic(&p, Fairness::Leximin, &SolverConfig::default());
        validate_schedule(&s, &p.instance).unwrap();
        assert!(s.task_count() > 0);
    }
}
