//! Comparison policies. Each honors tasks already committed to a vehicle.

use std::sync::Arc;

use crate::model::Schedule;
use crate::vrp::{solve_weighted_vrp, Prepared, SolverConfig, SolverError, SolverRequest, TaskKind, WeightVector};

/// Equal customer weights: plain throughput maximization.
pub fn max_throughput_schedule(
    problem: &Arc<Prepared>,
    config: &SolverConfig,
    warm: Vec<Schedule>,
) -> Result<Schedule, SolverError> {
    if problem.k == 0 {
        return Ok(problem.to_schedule(&vec![Vec::new(); problem.nv]));
    }
    let req = SolverRequest::new(problem.clone(), WeightVector::uniform(problem.k), config.clone())
        .with_warm_starts(warm);
    solve_weighted_vrp(&req)
}

/// Vehicles cycle through customers, each taking the nearest feasible job of
/// the customer whose turn it is; customers with nothing feasible are skipped.
/// Vehicle `v` starts with customer `v mod |K|`, and the vehicle that frees up
/// first picks next. Committed work from `previous` stays at the front.
pub fn round_robin_schedule(p: &Prepared, previous: Option<&Schedule>) -> Schedule {
    let mut routes: Vec<Vec<usize>> = match previous {
        Some(s) => p
            .routes_from_schedule(s)
            .into_iter()
            .enumerate()
            .map(|(v, r)| r.into_iter().filter(|&i| p.pinned[i] == Some(v)).collect())
            .collect(),
        None => vec![Vec::new(); p.nv],
    };
    let mut used = vec![false; p.jobs.len()];
    for r in &routes {
        for &i in r {
            used[p.job_of[i]] = true;
        }
    }
    // Pinned jobs the previous plan did not place go first, in job order.
    for (j, job) in p.jobs.iter().enumerate() {
        if used[j] {
            continue;
        }
        if let Some(v) = job.pinned {
            let mut r = routes[v].clone();
            r.extend(&job.tasks);
            if p.eval_route(v, &r).is_some() {
                routes[v] = r;
                used[j] = true;
            }
        }
    }
    if p.k == 0 {
        return p.to_schedule(&routes);
    }
    let mut turn: Vec<usize> = (0..p.nv).map(|v| v % p.k).collect();
    let mut done = vec![false; p.nv];
    let mut ends: Vec<f64> = (0..p.nv)
        .map(|v| p.eval_route(v, &routes[v]).unwrap_or(f64::INFINITY))
        .collect();
    loop {
        let Some(v) = (0..p.nv)
            .filter(|&v| !done[v])
            .min_by(|&a, &b| ends[a].total_cmp(&ends[b]).then(a.cmp(&b)))
        else {
            break;
        };
        let at = routes[v].last().copied().unwrap_or(p.vehicles[v].start);
        let mut picked = None;
        for step in 0..p.k {
            let c = (turn[v] + step) % p.k;
            let mut best: Option<(f64, usize, f64)> = None;
            for (j, job) in p.jobs.iter().enumerate() {
                if used[j] || job.customer != c || !p.allowed(job.tasks[0], v) {
                    continue;
                }
                if matches!(p.kind[job.tasks[0]], TaskKind::Onboard(o) if o != v) {
                    continue;
                }
                let d = p.tt(v, at, job.tasks[0]);
                if best.is_some_and(|(bd, _, _)| bd <= d) {
                    continue;
                }
                let mut r = routes[v].clone();
                r.extend(&job.tasks);
                if let Some(end) = p.eval_route(v, &r) {
                    best = Some((d, j, end));
                }
            }
            if let Some((_, j, end)) = best {
                picked = Some((c, j, end));
                break;
            }
        }
        match picked {
            Some((c, j, end)) => {
                routes[v].extend(&p.jobs[j].tasks);
                used[j] = true;
                ends[v] = end;
                turn[v] = (c + 1) % p.k;
            }
            None => done[v] = true,
        }
    }
    p.to_schedule(&routes)
}
