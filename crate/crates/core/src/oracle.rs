//! Brute-force ground truth for small instances: every feasible allocation,
//! its Pareto frontier, and the corners of its upper convex hull.
//!
//! Nothing here uses the routing solvers; paths are built by exhaustive
//! enumeration and checked with [`time_path`].

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::model::{
    time_path, travel_time, Allocation, CustomerId, Instance, Path, Schedule, Task, TIME_EPS,
};
use crate::utility::alpha_utility;

pub const MAX_TASKS: usize = 8;
pub const MAX_VEHICLES: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("oracle is limited to {MAX_TASKS} tasks and {MAX_VEHICLES} vehicles, got {tasks} and {vehicles}")]
    TooLarge { tasks: usize, vehicles: usize },
}

#[derive(Debug, Clone, Serialize)]
pub struct FeasiblePoint {
    /// Credited tasks per customer.
    pub counts: Vec<u64>,
    pub allocation: Allocation,
    #[serde(skip)]
    pub witness: Schedule,
}

#[derive(Debug, Clone, Serialize)]
pub struct FeasibleSet {
    pub customers: Vec<CustomerId>,
    pub points: Vec<FeasiblePoint>,
}

impl FeasibleSet {
    pub fn allocations(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| p.allocation.0.clone()).collect()
    }
}

/// All distinct allocations reachable by some feasible schedule, ordered by
/// total count and then by count vector.
pub fn enumerate_feasible_allocations(instance: &Instance) -> Result<FeasibleSet, OracleError> {
    let n = instance.tasks.len();
    let nv = instance.vehicles.len();
    if n > MAX_TASKS || nv > MAX_VEHICLES {
        return Err(OracleError::TooLarge { tasks: n, vehicles: nv });
    }
    // For each vehicle: task mask -> first feasible path (lexicographic order).
    let per_vehicle: Vec<BTreeMap<u32, Path>> = (0..nv).map(|v| vehicle_paths(instance, v)).collect();

    let k = instance.customers.len();
    let mut found: BTreeMap<Vec<u64>, Schedule> = BTreeMap::new();
    let mut chosen: Vec<(u32, Path)> = Vec::with_capacity(nv);
    combine_vehicles(instance, &per_vehicle, 0, 0, &mut chosen, &mut found);
    if nv == 0 {
        found.insert(vec![0; k], Schedule::idle(instance));
    }

    let minutes = instance.budget / 60.0;
    let mut points: Vec<FeasiblePoint> = found
        .into_iter()
        .map(|(counts, witness)| FeasiblePoint {
            allocation: Allocation(counts.iter().map(|&c| c as f64 / minutes).collect()),
            counts,
            witness,
        })
        .collect();
    points.sort_by(|a, b| {
        let ta: u64 = a.counts.iter().sum();
        let tb: u64 = b.counts.iter().sum();
        ta.cmp(&tb).then_with(|| a.counts.cmp(&b.counts))
    });
    Ok(FeasibleSet {
        customers: instance.customers.clone(),
        points,
    })
}

fn combine_vehicles(
    instance: &Instance,
    per_vehicle: &[BTreeMap<u32, Path>],
    v: usize,
    used: u32,
    chosen: &mut Vec<(u32, Path)>,
    found: &mut BTreeMap<Vec<u64>, Schedule>,
) {
    if v == per_vehicle.len() {
        if v == 0 {
            return;
        }
        let mut counts = vec![0u64; instance.customers.len()];
        for (_, path) in chosen.iter() {
            for s in &path.stops {
                if let Some(k) = instance.customer_index(&s.customer) {
                    counts[k] += u64::from(s.credit);
                }
            }
        }
        found.entry(counts).or_insert_with(|| Schedule {
            start_time: instance.start_time,
            round_duration: instance.budget,
            paths: chosen.iter().map(|(_, p)| p.clone()).collect(),
        });
        return;
    }
    for (&mask, path) in &per_vehicle[v] {
        if mask & used != 0 {
            continue;
        }
        chosen.push((mask, path.clone()));
        combine_vehicles(instance, per_vehicle, v + 1, used | mask, chosen, found);
        chosen.pop();
    }
}

/// Every task set one vehicle can serve, each with the first feasible order.
fn vehicle_paths(instance: &Instance, v: usize) -> BTreeMap<u32, Path> {
    let state = &instance.vehicles[v];
    let mut out = BTreeMap::new();
    let mut seq: Vec<usize> = Vec::new();
    let limit = state.limit.min(instance.budget);

    fn walk(
        instance: &Instance,
        v: usize,
        limit: f64,
        seq: &mut Vec<usize>,
        mask: u32,
        at: &crate::model::Location,
        clock: f64,
        out: &mut BTreeMap<u32, Path>,
    ) {
        let state = &instance.vehicles[v];
        let tasks: Vec<&Task> = seq.iter().map(|&i| &instance.tasks[i]).collect();
        if !out.contains_key(&mask) {
            if let Ok(path) = time_path(instance, state, &tasks) {
                out.insert(mask, path);
            }
        }
        for i in 0..instance.tasks.len() {
            if mask & (1 << i) != 0 {
                continue;
            }
            let t = &instance.tasks[i];
            let Ok(leg) = travel_time(at, &t.location, &instance.travel, &state.vehicle) else {
                continue;
            };
            let done = clock + leg + t.service_time;
            // Completion times only grow along a path, so these prunes are safe.
            if done > limit + TIME_EPS {
                continue;
            }
            if t.deadline.is_some_and(|d| instance.start_time + done > d + TIME_EPS) {
                continue;
            }
            seq.push(i);
            walk(instance, v, limit, seq, mask | (1 << i), &t.location, done, out);
            seq.pop();
        }
    }

    walk(instance, v, limit, &mut seq, 0, &state.position, state.ready_at, &mut out);
    out
}

/// Drop allocations weakly dominated by another (no worse everywhere, better
/// somewhere).
pub fn pareto_frontier(fs: &FeasibleSet) -> FeasibleSet {
    let pts = &fs.points;
    let keep: Vec<FeasiblePoint> = pts
        .iter()
        .filter(|p| !pts.iter().any(|q| dominates(q.allocation.as_slice(), p.allocation.as_slice())))
        .cloned()
        .collect();
    FeasibleSet {
        customers: fs.customers.clone(),
        points: keep,
    }
}

fn dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x >= y) && a.iter().zip(b).any(|(x, y)| x > y)
}

/// Vertices of the upper convex hull: Pareto-optimal allocations that are
/// extreme points of the hull of the set with free disposal. Coordinates that
/// are zero everywhere are ignored. Supports up to three customers.
pub fn convex_boundary(fs: &FeasibleSet) -> Vec<FeasiblePoint> {
    let front = pareto_frontier(fs);
    if front.points.is_empty() {
        return Vec::new();
    }
    let dim = fs.customers.len();
    let active: Vec<usize> = (0..dim)
        .filter(|&k| front.points.iter().any(|p| p.allocation.0[k] > 0.0))
        .collect();
    let reduce = |p: &FeasiblePoint| -> Vec<f64> { active.iter().map(|&k| p.allocation.0[k]).collect() };
    let pareto: Vec<Vec<f64>> = front.points.iter().map(reduce).collect();
    let flags = match active.len() {
        0 | 1 => vec![true; pareto.len()],
        2 | 3 => {
            let aug = disposal_hull_points(&pareto);
            pareto.iter().map(|p| is_hull_vertex(p, &aug)).collect()
        }
        d => panic!("convex_boundary supports at most 3 active customers, got {d}"),
    };
    front
        .points
        .into_iter()
        .zip(flags)
        .filter_map(|(p, f)| f.then_some(p))
        .collect::<Vec<FeasiblePoint>>()
}

/// Every point with any subset of its coordinates zeroed, plus the points
/// themselves; the hull of these is the downward closure within the orthant.
fn disposal_hull_points(pts: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = pts[0].len();
    let mut out: Vec<Vec<f64>> = Vec::new();
    for p in pts {
        for m in 0..(1u32 << d) {
            let q: Vec<f64> = (0..d).map(|i| if m & (1 << i) != 0 { 0.0 } else { p[i] }).collect();
            if !out.contains(&q) {
                out.push(q);
            }
        }
    }
    out
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cross(a: &[f64], b: &[f64]) -> Vec<f64> {
    vec![
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// `p` is a vertex of conv(`pts`) (a full-dimensional set in 2 or 3
/// dimensions) iff some supporting hyperplane through `p` meets `pts` in a set
/// of which `p` is an extreme point.
fn is_hull_vertex(p: &[f64], pts: &[Vec<f64>]) -> bool {
    let d = p.len();
    let scale = pts.iter().flatten().fold(1.0f64, |s, v| s.max(v.abs()));
    let eps = 1e-9 * scale;
    let others: Vec<&Vec<f64>> = pts.iter().filter(|q| q.as_slice() != p).collect();

    let supporting = |n: &[f64]| -> Option<Vec<Vec<f64>>> {
        let norm = dot(n, n).sqrt();
        if norm <= eps * eps {
            return None;
        }
        let n: Vec<f64> = n.iter().map(|v| v / norm).collect();
        let h = dot(&n, p);
        let side: Vec<f64> = pts.iter().map(|q| dot(&n, q) - h).collect();
        let above = side.iter().any(|&s| s > eps);
        let below = side.iter().any(|&s| s < -eps);
        if above && below {
            return None;
        }
        Some(
            pts.iter()
                .zip(&side)
                .filter(|(_, s)| s.abs() <= eps)
                .map(|(q, _)| q.clone())
                .collect(),
        )
    };

    match d {
        2 => {
            for q in &others {
                let e = sub(q, p);
                let n = [-e[1], e[0]];
                if let Some(on) = supporting(&n) {
                    // Extreme on the supporting line: no point beyond p along -e.
                    if on.iter().all(|r| dot(&sub(r, p), &e) >= -eps) {
                        return true;
                    }
                }
            }
            false
        }
        3 => {
            for (i, q) in others.iter().enumerate() {
                for r in &others[i + 1..] {
                    let n = cross(&sub(q, p), &sub(r, p));
                    let Some(on) = supporting(&n) else { continue };
                    if extreme_in_plane(p, &on, &n, eps) {
                        return true;
                    }
                }
            }
            false
        }
        _ => unreachable!("dimension checked by caller"),
    }
}

/// Whether `p` is a vertex of the 2-D hull of the coplanar points `on`.
fn extreme_in_plane(p: &[f64], on: &[Vec<f64>], n: &[f64], eps: f64) -> bool {
    // In-plane basis.
    let helper = if n[0].abs() < 0.9 * dot(n, n).sqrt() { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let u = cross(n, &helper);
    let v = cross(n, &u);
    let nu = dot(&u, &u).sqrt();
    let nv = dot(&v, &v).sqrt();
    let proj = |q: &[f64]| -> (f64, f64) {
        let r = sub(q, p);
        (dot(&r, &u) / nu, dot(&r, &v) / nv)
    };
    let flat: Vec<(f64, f64)> = on.iter().map(|q| proj(q)).filter(|&(a, b)| a.abs() > eps || b.abs() > eps).collect();
    if flat.is_empty() {
        return true;
    }
    // p (the origin here) is a vertex iff every other point lies in an open
    // half-plane through it, i.e. their angles span less than π.
    let mut ang: Vec<f64> = flat.iter().map(|&(a, b)| b.atan2(a)).collect();
    ang.sort_by(f64::total_cmp);
    let mut max_gap = ang[0] + 2.0 * std::f64::consts::PI - ang[ang.len() - 1];
    for w in ang.windows(2) {
        max_gap = max_gap.max(w[1] - w[0]);
    }
    max_gap > std::f64::consts::PI + 1e-9
}

const GOLDEN_ITERS: usize = 90;

/// Largest α-fair utility over the convex hull of `corners` (α ≥ 0, finite),
/// with the maximizing point. Every hull point that matters lies in a simplex
/// of at most three corners, so all such simplices are searched.
pub fn boundary_optimum(corners: &[Vec<f64>], alpha: f64) -> (Vec<f64>, f64) {
    assert!(alpha.is_finite() && alpha >= 0.0, "oracle optimum needs a finite alpha");
    assert!(!corners.is_empty(), "no corners");
    let d = corners[0].len();
    let u = |x: &[f64]| alpha_utility(alpha, x);
    let mut best = (corners[0].clone(), u(&corners[0]));
    let mut consider = |x: Vec<f64>| {
        let val = u(&x);
        if val > best.1 {
            best = (x, val);
        }
    };
    let m = corners.len();
    for a in 0..m {
        consider(corners[a].clone());
        for b in (a + 1)..m {
            let seg = |t: f64| lerp(&corners[a], &corners[b], t);
            let t = golden(|t| u(&seg(t)));
            consider(seg(t));
            if d < 3 {
                continue;
            }
            for c in (b + 1)..m {
                // x(s, t) = (1−s)·a + s·((1−t)·b + t·c); the inner maximum is
                // concave in s.
                let point = |s: f64, t: f64| lerp(&corners[a], &lerp(&corners[b], &corners[c], t), s);
                let inner = |s: f64| {
                    let t = golden(|t| u(&point(s, t)));
                    (t, u(&point(s, t)))
                };
                let s = golden(|s| inner(s).1);
                let (t, _) = inner(s);
                consider(point(s, t));
            }
        }
    }
    best
}

fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

fn golden(f: impl Fn(f64) -> f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    for _ in 0..GOLDEN_ITERS {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        }
    }
    let mid = 0.5 * (lo + hi);
    let mut pick = (f(mid), mid);
    for x in [0.0, 1.0] {
        let v = f(x);
        if v > pick.0 {
            pick = (v, x);
        }
    }
    pick.1
}
