//! Convex-boundary search over per-customer throughput allocations.
//!
//! Each round starts with one solver call per customer using basis weights.
//! The face through those corners is then pushed outward one solver call at a
//! time, always following the face that holds the utility optimum, until the
//! solver finds nothing above the current face.

mod geometry;

pub use geometry::{
    barycentric, combine, face_weights, lagrange_point, opt_in_face, simplex_max, Hyperplane,
    PlaneOptimum, ALPHA_ZERO_SURROGATE, TOL_BARY, TOL_EXT, TOL_FACE,
};

use std::cmp::Ordering;
use std::collections::{HashSet, VecDeque};
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{Allocation, Schedule};
use crate::utility::Fairness;
use crate::vrp::{SolverError, WeightVector};

pub const MAX_STAGES: usize = 64;
/// Face budget for the all-directions construction.
pub const MAX_FACES: usize = 256;

#[derive(Debug, Error)]
pub enum BoundaryError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("solver returned an allocation of dimension {got}, expected {want}")]
    Dimension { got: usize, want: usize },
}

/// One solver result: an allocation and the schedule that achieves it.
#[derive(Debug, Clone, PartialEq)]
pub struct Corner {
    pub allocation: Allocation,
    pub schedule: Option<Arc<Schedule>>,
}

impl Corner {
    pub fn new(allocation: Allocation, schedule: Option<Schedule>) -> Self {
        Self {
            allocation,
            schedule: schedule.map(Arc::new),
        }
    }

    pub fn point(&self) -> Vec<f64> {
        self.allocation.0.clone()
    }
}

/// Something that maximizes `wᵀx` over feasible schedules.
pub trait DirectionSolver: Sync {
    fn solve(&self, weights: &WeightVector) -> Result<Corner, BoundaryError>;

    /// Called once per new corner, in a fixed order, after parallel calls finish.
    fn remember(&self, _corner: &Corner) {}
}

/// Wraps a solver and counts its calls.
#[derive(Debug)]
pub struct CountingSolver<S> {
    inner: S,
    calls: AtomicUsize,
}

impl<S> CountingSolver<S> {
    pub fn new(inner: S) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(AtomicOrdering::SeqCst)
    }

    pub fn inner(&self) -> &S {
        &self.inner
    }
}

impl<S: DirectionSolver> DirectionSolver for CountingSolver<S> {
    fn solve(&self, weights: &WeightVector) -> Result<Corner, BoundaryError> {
        self.calls.fetch_add(1, AtomicOrdering::SeqCst);
        self.inner.solve(weights)
    }

    fn remember(&self, corner: &Corner) {
        self.inner.remember(corner)
    }
}

/// Corners in general position on one supporting hyperplane. Geometry uses
/// only the active customers; `plane.w` is over those, `weights()` expands it.
#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub corners: Vec<Corner>,
    pub active: Vec<usize>,
    pub plane: Hyperplane,
    dim: usize,
}

impl Face {
    pub fn new(corners: Vec<Corner>, active: Vec<usize>, dim: usize) -> Self {
        let pts: Vec<Vec<f64>> = corners.iter().map(|c| reduce(&c.allocation, &active)).collect();
        let plane = face_weights(&pts);
        Self {
            corners,
            active,
            plane,
            dim,
        }
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        self.corners
            .iter()
            .map(|c| reduce(&c.allocation, &self.active))
            .collect()
    }

    pub fn is_degenerate(&self) -> bool {
        self.plane.degenerate
    }

    /// Normal over all customers (zero on inactive ones).
    pub fn full_normal(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.dim];
        for (&k, &v) in self.active.iter().zip(&self.plane.w) {
            w[k] = v;
        }
        w
    }

    /// Solver weights for extending this face; `None` when the normal has no
    /// positive entry.
    pub fn weights(&self) -> Option<WeightVector> {
        let w: Vec<f64> = self.full_normal().into_iter().map(|v| v.max(0.0)).collect();
        WeightVector::new(w).ok()
    }

    fn replaced(&self, i: usize, corner: &Corner) -> Face {
        let mut corners = self.corners.clone();
        corners[i] = corner.clone();
        Face::new(corners, self.active.clone(), self.dim)
    }

    /// Utility-best point of the face: the closed-form plane optimum when it
    /// falls inside, else the best point of the corner simplex.
    pub fn optimum(&self, fairness: Fairness) -> FaceOptimum {
        let pts = self.points();
        let o = opt_in_face(&pts, &self.plane, fairness);
        let (x, beta, inside) = if o.inside {
            (o.x, o.beta, true)
        } else {
            let (x, beta) = simplex_max(&pts, fairness);
            (x, beta, false)
        };
        FaceOptimum {
            point: expand(&x, &self.active, self.dim),
            beta,
            inside,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceOptimum {
    /// Over all customers.
    pub point: Vec<f64>,
    pub beta: Vec<f64>,
    /// Whether the closed-form optimum of the plane lies on the face.
    pub inside: bool,
}

fn reduce(x: &Allocation, active: &[usize]) -> Vec<f64> {
    active.iter().map(|&k| x.0[k]).collect()
}

fn expand(x: &[f64], active: &[usize], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for (&k, &v) in active.iter().zip(x) {
        out[k] = v;
    }
    out
}

/// `x̂` extends the face iff it lies above it and on or below every other
/// known face. The second condition failing means the solver was not exact.
pub fn is_valid_extension(face: &Face, x: &Allocation, others: &[Hyperplane]) -> bool {
    let p = reduce(x, &face.active);
    if !face.plane.is_above(&p) {
        return false;
    }
    if let Some(h) = others.iter().find(|h| !h.degenerate && h.is_above(&p)) {
        log::warn!(
            "candidate corner {:?} lies above face w={:?} c={}; rejecting the extension",
            x.0,
            h.w,
            h.c
        );
        return false;
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    /// No customer can be served at all.
    Empty,
    /// Exactly one customer can be served; its basis corner is the answer.
    Single,
    Face,
}

/// Result of one round's boundary search.
#[derive(Debug, Clone)]
pub struct BoundaryOutcome {
    pub kind: OutcomeKind,
    pub face: Face,
    /// Every corner the solver returned, in call order, duplicates removed.
    pub discovered: Vec<Corner>,
    /// Utility-best point of the face, over all customers.
    pub target: Vec<f64>,
    pub stages: usize,
    pub calls: usize,
}

impl BoundaryOutcome {
    pub fn active(&self) -> &[usize] {
        &self.face.active
    }
}

/// Basis corners and active customers, one parallel call per customer.
fn init_corners<S: DirectionSolver>(solver: &S, k: usize) -> Result<Vec<Corner>, BoundaryError> {
    let corners: Vec<Corner> = (0..k)
        .into_par_iter()
        .map(|i| solver.solve(&WeightVector::basis(i, k)))
        .collect::<Result<_, _>>()?;
    for c in &corners {
        if c.allocation.dim() != k {
            return Err(BoundaryError::Dimension {
                got: c.allocation.dim(),
                want: k,
            });
        }
    }
    Ok(corners)
}

/// Run the search for one round over `k` customers.
pub fn search_boundary<S: DirectionSolver>(
    solver: &S,
    k: usize,
    fairness: Fairness,
    max_stages: usize,
) -> Result<BoundaryOutcome, BoundaryError> {
    let basis = init_corners(solver, k)?;
    let mut discovered: Vec<Corner> = Vec::new();
    for c in &basis {
        note(solver, &mut discovered, c);
    }
    let active: Vec<usize> = (0..k).filter(|&i| basis[i].allocation.0[i] > 0.0).collect();

    let single = |kind, corner: Corner, discovered| {
        let target = corner.allocation.0.clone();
        let face = Face::new(vec![corner], active.clone(), k);
        BoundaryOutcome {
            kind,
            face,
            discovered,
            target,
            stages: 0,
            calls: k,
        }
    };
    match active.len() {
        0 => {
            let zero = basis.into_iter().next().unwrap_or_else(|| Corner::new(Allocation::zeros(k), None));
            return Ok(single(OutcomeKind::Empty, zero, discovered));
        }
        1 => {
            let corner = basis[active[0]].clone();
            return Ok(single(OutcomeKind::Single, corner, discovered));
        }
        _ => {}
    }

    let init = Face::new(active.iter().map(|&i| basis[i].clone()).collect(), active.clone(), k);
    let mut s = Search {
        solver,
        fairness,
        max_stages,
        stages: 0,
        discovered,
    };
    let face = s.run(init, Vec::new())?;
    let target = face.optimum(fairness).point;
    Ok(BoundaryOutcome {
        kind: OutcomeKind::Face,
        face,
        discovered: s.discovered,
        target,
        stages: s.stages,
        calls: k + s.stages,
    })
}

fn note<S: DirectionSolver>(solver: &S, discovered: &mut Vec<Corner>, c: &Corner) {
    if !discovered.iter().any(|d| d.allocation == c.allocation) {
        solver.remember(c);
        discovered.push(c.clone());
    }
}

struct Search<'a, S> {
    solver: &'a S,
    fairness: Fairness,
    max_stages: usize,
    stages: usize,
    discovered: Vec<Corner>,
}

impl<S: DirectionSolver> Search<'_, S> {
    fn run(&mut self, mut face: Face, mut others: Vec<Hyperplane>) -> Result<Face, BoundaryError> {
        loop {
            if self.stages >= self.max_stages {
                log::warn!("boundary search hit the stage cap ({})", self.max_stages);
                return Ok(face);
            }
            let Some(w) = face.weights() else {
                return Ok(face);
            };
            self.stages += 1;
            let p = self.solver.solve(&w)?;
            note(self.solver, &mut self.discovered, &p);
            if !is_valid_extension(&face, &p.allocation, &others) {
                return Ok(face);
            }

            let cands: Vec<Face> = (0..face.corners.len()).map(|i| face.replaced(i, &p)).collect();
            let inside = cands.iter().position(|f| {
                opt_in_face(&f.points(), &f.plane, self.fairness).inside
            });
            if let Some(i) = inside {
                others.extend(siblings(&cands, i));
                face = cands.into_iter().nth(i).expect("index in range");
                continue;
            }

            // No candidate holds the plane optimum: the optimum of the known
            // hull sits on a shared lower-dimensional piece. Follow every
            // candidate that reaches the best value and keep the best result.
            log::debug!("no candidate face contains its plane optimum; comparing corner simplices");
            let values: Vec<Vec<f64>> = cands.iter().map(|f| f.optimum(self.fairness).point).collect();
            let best = (0..cands.len())
                .reduce(|a, b| if self.fairness.compare(&values[b], &values[a]) == Ordering::Greater { b } else { a })
                .expect("at least one candidate");
            let tied: Vec<usize> = (0..cands.len())
                .filter(|&i| self.fairness.compare(&values[i], &values[best]) == Ordering::Equal)
                .collect();
            let mut results: Vec<(Face, Vec<f64>)> = Vec::new();
            for i in tied {
                let mut o = others.clone();
                o.extend(siblings(&cands, i));
                let f = self.run(cands[i].clone(), o)?;
                let v = f.optimum(self.fairness).point;
                results.push((f, v));
            }
            let pick = (0..results.len())
                .reduce(|a, b| {
                    if self.fairness.compare(&results[b].1, &results[a].1) == Ordering::Greater {
                        b
                    } else {
                        a
                    }
                })
                .expect("at least one branch");
            return Ok(results.swap_remove(pick).0);
        }
    }
}

fn siblings(cands: &[Face], skip: usize) -> impl Iterator<Item = Hyperplane> + '_ {
    cands
        .iter()
        .enumerate()
        .filter(move |&(j, _)| j != skip)
        .map(|(_, f)| f.plane.clone())
}

/// The boundary extended in every direction, for plotting and inspection.
#[derive(Debug, Clone)]
pub struct BoundaryMap {
    pub active: Vec<usize>,
    /// Distinct corners that bound at least one final face.
    pub corners: Vec<Corner>,
    pub faces: Vec<Face>,
    pub calls: usize,
}

/// Extend every face with a nonnegative normal until none can be extended or
/// the face budget runs out.
pub fn full_boundary<S: DirectionSolver>(
    solver: &S,
    k: usize,
    max_faces: usize,
) -> Result<BoundaryMap, BoundaryError> {
    let basis = init_corners(solver, k)?;
    let mut discovered: Vec<Corner> = Vec::new();
    for c in &basis {
        note(solver, &mut discovered, c);
    }
    let active: Vec<usize> = (0..k).filter(|&i| basis[i].allocation.0[i] > 0.0).collect();
    let mut calls = k;
    if active.len() <= 1 {
        let corner = active
            .first()
            .map(|&i| basis[i].clone())
            .unwrap_or_else(|| basis.first().cloned().unwrap_or_else(|| Corner::new(Allocation::zeros(k), None)));
        let face = Face::new(vec![corner.clone()], active.clone(), k);
        return Ok(BoundaryMap {
            active,
            corners: vec![corner],
            faces: vec![face],
            calls,
        });
    }

    let key = |f: &Face| -> Vec<Vec<u64>> {
        let mut ks: Vec<Vec<u64>> = f
            .corners
            .iter()
            .map(|c| c.allocation.0.iter().map(|v| v.to_bits()).collect())
            .collect();
        ks.sort();
        ks
    };
    let init = Face::new(active.iter().map(|&i| basis[i].clone()).collect(), active.clone(), k);
    let mut seen: HashSet<Vec<Vec<u64>>> = HashSet::new();
    seen.insert(key(&init));
    let mut queue = VecDeque::from([init]);
    let mut done: Vec<Face> = Vec::new();
    while let Some(face) = queue.pop_front() {
        if done.len() + queue.len() >= max_faces {
            done.push(face);
            continue;
        }
        let Some(w) = face.weights() else {
            done.push(face);
            continue;
        };
        calls += 1;
        let p = solver.solve(&w)?;
        note(solver, &mut discovered, &p);
        if !is_valid_extension(&face, &p.allocation, &[]) {
            done.push(face);
            continue;
        }
        for i in 0..face.corners.len() {
            let cand = face.replaced(i, &p);
            if cand.is_degenerate() || !cand.plane.has_nonnegative_normal() {
                continue;
            }
            if seen.insert(key(&cand)) {
                queue.push_back(cand);
            }
        }
    }

    let mut corners: Vec<Corner> = Vec::new();
    for f in &done {
        for c in &f.corners {
            if !corners.iter().any(|d| d.allocation == c.allocation) {
                corners.push(c.clone());
            }
        }
    }
    Ok(BoundaryMap {
        active,
        corners,
        faces: done,
        calls,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Solver over a fixed point set: the max of `wᵀx`, preferring larger
    /// totals and then earlier points.
    struct PointSolver(Vec<Vec<f64>>);

    impl DirectionSolver for PointSolver {
        fn solve(&self, w: &WeightVector) -> Result<Corner, BoundaryError> {
            let mut best = 0;
            for i in 1..self.0.len() {
                let a: f64 = self.0[i].iter().zip(w.as_slice()).map(|(x, w)| x * w).sum();
                let b: f64 = self.0[best].iter().zip(w.as_slice()).map(|(x, w)| x * w).sum();
                let ta: f64 = self.0[i].iter().sum();
                let tb: f64 = self.0[best].iter().sum();
                if a > b + 1e-12 || ((a - b).abs() <= 1e-12 && ta > tb + 1e-12) {
                    best = i;
                }
            }
            Ok(Corner::new(Allocation(self.0[best].clone()), None))
        }
    }

    fn pts(v: &[(f64, f64)]) -> PointSolver {
        PointSolver(v.iter().map(|&(a, b)| vec![a, b]).collect())
    }

    #[test]
    fn init_face_weights_for_two_axes() {
        let s = CountingSolver::new(pts(&[(10.0, 0.0), (0.0, 5.0)]));
        let out = search_boundary(&s, 2, Fairness::Alpha(1.0), MAX_STAGES).unwrap();
        assert_eq!(out.kind, OutcomeKind::Face);
        let h = &out.face.plane;
        assert!((h.w[0] - 1.0 / 3.0).abs() < 1e-12 && (h.c - 10.0 / 3.0).abs() < 1e-12);
        assert_eq!(out.calls, s.calls());
        assert_eq!(out.calls, 2 + out.stages);
    }

    #[test]
    fn follows_the_face_holding_the_optimum() {
        // A=(10,0), B=(0,10), C=(7,7) above AB, D=(9,4.6) above AC only.
        let s = CountingSolver::new(pts(&[(10.0, 0.0), (0.0, 10.0), (7.0, 7.0), (9.0, 4.6), (1.0, 1.0)]));
        let out = search_boundary(&s, 2, Fairness::Leximin, MAX_STAGES).unwrap();
        let mut got: Vec<Vec<f64>> = out.face.corners.iter().map(Corner::point).collect();
        got.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert_eq!(got, vec![vec![0.0, 10.0], vec![7.0, 7.0]]);
        assert_eq!(s.calls(), 2 + out.stages);
    }

    #[test]
    fn customer_without_service_is_dropped() {
        let s = CountingSolver::new(pts(&[(3.0, 0.0), (1.0, 0.0)]));
        let out = search_boundary(&s, 2, Fairness::Alpha(1.0), MAX_STAGES).unwrap();
        assert_eq!(out.kind, OutcomeKind::Single);
        assert_eq!(out.target, vec![3.0, 0.0]);
        assert_eq!(out.calls, 2);
    }

    #[test]
    fn nothing_feasible_is_empty() {
        let s = CountingSolver::new(pts(&[(0.0, 0.0)]));
        let out = search_boundary(&s, 2, Fairness::Alpha(1.0), MAX_STAGES).unwrap();
        assert_eq!(out.kind, OutcomeKind::Empty);
        assert_eq!(out.calls, 2);
    }

    #[test]
    fn single_point_needs_no_new_corners() {
        let s = CountingSolver::new(pts(&[(2.0, 3.0)]));
        let out = search_boundary(&s, 2, Fairness::Alpha(1.0), MAX_STAGES).unwrap();
        assert_eq!(out.discovered.len(), 1);
        assert_eq!(out.target, vec![2.0, 3.0]);
        assert_eq!(s.calls(), 2 + out.stages);
    }

    #[test]
    fn vertex_optimum() {
        // Optimum of ln x + ln y over the hull sits exactly at C.
        let s = pts(&[(10.0, 0.0), (0.0, 10.0), (5.0, 5.0 + 3.0)]);
        let out = search_boundary(&s, 2, Fairness::Alpha(1.0), MAX_STAGES).unwrap();
        let u = crate::utility::alpha_utility(1.0, &out.target);
        let direct = crate::utility::alpha_utility(1.0, &[5.0, 8.0]);
        assert!(u >= direct - 1e-9);
    }

    #[test]
    fn extension_validity() {
        let face = Face::new(
            vec![
                Corner::new(Allocation(vec![10.0, 0.0]), None),
                Corner::new(Allocation(vec![0.0, 5.0]), None),
            ],
            vec![0, 1],
            2,
        );
        assert!(is_valid_extension(&face, &Allocation(vec![6.0, 4.0]), &[]));
        assert!(!is_valid_extension(&face, &Allocation(vec![10.0, 0.0]), &[]));
        let other = face_weights(&[vec![6.0, 0.0], vec![0.0, 6.0]]);
        assert!(!is_valid_extension(&face, &Allocation(vec![6.0, 4.0]), &[other]));
    }

    #[test]
    fn full_boundary_of_a_polygon() {
        let s = pts(&[(10.0, 0.0), (0.0, 10.0), (8.0, 6.0), (6.0, 8.0), (4.0, 4.0)]);
        let m = full_boundary(&s, 2, MAX_FACES).unwrap();
        let mut got: Vec<Vec<f64>> = m.corners.iter().map(Corner::point).collect();
        got.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert_eq!(got, vec![vec![0.0, 10.0], vec![6.0, 8.0], vec![8.0, 6.0], vec![10.0, 0.0]]);
    }
}
