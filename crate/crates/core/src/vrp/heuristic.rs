//! Cheapest insertion followed by 2-opt, relocate, swap and exchange moves,
//! then ruin-and-recreate rounds that only keep non-worsening results.

use std::cmp::Ordering;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::problem::{Prepared, Score, TaskKind, Values};
use super::{SolverError, SolverRequest};
use crate::model::{Schedule, TIME_EPS};
use crate::utility::cmp_tol;

const MIN_DELTA: f64 = 1e-6;
const IMPROVE_EPS: f64 = 1e-7;
/// Most jobs removed by one random or spatial ruin.
const RUIN_MAX: usize = 12;
/// Candidate seed jobs tried when rebuilding an emptied route.
const SEED_TRIES: usize = 8;

/// Best-effort optimum of the weighted objective, never worse than the best
/// warm start under the request's weights.
pub fn heuristic_vrp(req: &SolverRequest) -> Result<Schedule, SolverError> {
    req.check()?;
    let p = &*req.problem;
    let values = p.values(req.weights.as_slice(), &req.boosted);
    let cfg = &req.config;
    let stop_at = Instant::now() + Duration::from_secs_f64(cfg.time_limit_s.max(0.0));

    let mut warm: Option<(Score, Vec<Vec<usize>>)> = None;
    for s in &req.warm_starts {
        let routes = p.routes_from_schedule(s);
        let score = p.score(&routes, &values);
        if warm
            .as_ref()
            .is_none_or(|(b, _)| score.cmp_with(b, false) == Ordering::Greater)
        {
            warm = Some((score, routes));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best = Ls::new(p, &values, vec![Vec::new(); p.nv]).optimize(&mut rng, cfg.max_rounds, cfg.lns_iterations, stop_at);
    if let Some((_, routes)) = warm {
        let seeded = Ls::new(p, &values, routes).optimize(&mut rng, cfg.max_rounds, cfg.lns_iterations, stop_at);
        let a = p.score(&seeded, &values);
        let b = p.score(&best, &values);
        if a.cmp_with(&b, false) != Ordering::Less {
            best = seeded;
        }
    }
    Ok(p.to_schedule(&best))
}

/// Improve `routes` in place of a fresh start, only ever adding jobs marked in
/// `active`.
pub(super) fn improve(
    p: &Prepared,
    values: &Values,
    active: Option<&[bool]>,
    routes: Vec<Vec<usize>>,
    rounds: usize,
    rng: &mut ChaCha8Rng,
    stop_at: Instant,
) -> Vec<Vec<usize>> {
    let mut ls = Ls::new(p, values, routes);
    ls.active = active;
    ls.optimize(rng, rounds, 0, stop_at)
}

/// Objective contribution of one job.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Gain {
    boost: u32,
    weight: f64,
    credit: u32,
}

impl Gain {
    fn cmp(&self, o: &Gain) -> Ordering {
        self.boost
            .cmp(&o.boost)
            .then_with(|| cmp_tol(self.weight, o.weight))
            .then_with(|| self.credit.cmp(&o.credit))
    }
}

/// Forward timing of a route, used for O(1) insertion checks.
#[derive(Debug, Clone, Default)]
struct Timing {
    arr: Vec<f64>,
    compl: Vec<f64>,
    /// `slack[g]`: how far everything from position `g` on may be delayed.
    slack: Vec<f64>,
    /// `load[g]`: open rides in the gap before position `g`.
    load: Vec<u32>,
    end: f64,
}

#[derive(Debug, Clone, Copy)]
struct Insertion {
    delta: f64,
    first: usize,
    /// Gap for the dropoff of a pair, counted in the original route.
    second: Option<usize>,
}

struct State {
    routes: Vec<Vec<usize>>,
    timing: Vec<Timing>,
    at: Vec<Option<usize>>,
    pairs_in: Vec<usize>,
}

struct Ls<'a> {
    p: &'a Prepared,
    gains: Vec<Gain>,
    routes: Vec<Vec<usize>>,
    timing: Vec<Timing>,
    /// Route holding each job.
    at: Vec<Option<usize>>,
    pairs_in: Vec<usize>,
    /// Jobs the search may add; `None` means all.
    active: Option<&'a [bool]>,
}

impl<'a> Ls<'a> {
    fn new(p: &'a Prepared, values: &'a Values, routes: Vec<Vec<usize>>) -> Self {
        let gains = p
            .jobs
            .iter()
            .map(|j| {
                let mut g = Gain {
                    boost: 0,
                    weight: 0.0,
                    credit: 0,
                };
                for &t in &j.tasks {
                    g.boost += u32::from(values.boost[t]);
                    g.weight += values.weight[t];
                    g.credit += p.credit[t];
                }
                g
            })
            .collect();
        let mut at = vec![None; p.jobs.len()];
        for (v, r) in routes.iter().enumerate() {
            for &t in r {
                at[p.job_of[t]] = Some(v);
            }
        }
        let mut ls = Self {
            p,
            gains,
            timing: vec![Timing::default(); p.nv],
            routes,
            at,
            pairs_in: vec![0; p.nv],
            active: None,
        };
        for v in 0..p.nv {
            ls.retime(v);
        }
        ls
    }

    fn may_add(&self, job: usize) -> bool {
        self.active.is_none_or(|a| a[job])
    }

    fn retime(&mut self, v: usize) {
        let p = self.p;
        let spec = &p.vehicles[v];
        let seq = &self.routes[v];
        let len = seq.len();
        let mut t = Timing {
            arr: Vec::with_capacity(len),
            compl: Vec::with_capacity(len),
            slack: vec![0.0; len + 1],
            load: Vec::with_capacity(len + 1),
            end: 0.0,
        };
        let mut clock = spec.ready;
        let mut at = spec.start;
        let mut load = spec.load0;
        let mut pairs = 0;
        t.load.push(load);
        for &i in seq {
            let arrival = clock + p.tt(v, at, i);
            let completion = arrival + p.service[i];
            t.arr.push(arrival);
            t.compl.push(completion);
            match p.kind[i] {
                TaskKind::Pickup(_) => {
                    load += 1;
                    pairs += 1;
                }
                TaskKind::Dropoff(_) | TaskKind::Onboard(_) => load = load.saturating_sub(1),
                TaskKind::Single => {}
            }
            t.load.push(load);
            clock = completion;
            at = i;
        }
        t.end = if spec.ret {
            clock + p.tt(v, at, spec.home)
        } else {
            clock
        };
        t.slack[len] = spec.limit - t.end;
        for g in (0..len).rev() {
            t.slack[g] = t.slack[g + 1].min(p.deadline[seq[g]] - t.compl[g]);
        }
        self.timing[v] = t;
        self.pairs_in[v] = pairs;
    }

    fn duration(&self) -> f64 {
        self.timing.iter().map(|t| t.end).sum()
    }

    fn optimize(mut self, rng: &mut ChaCha8Rng, rounds: usize, lns: usize, stop_at: Instant) -> Vec<Vec<usize>> {
        self.descend(rng, rounds, stop_at);
        if lns > 0 {
            self.ruin_recreate(rng, lns, rounds, stop_at);
        }
        self.routes
    }

    fn descend(&mut self, rng: &mut ChaCha8Rng, rounds: usize, stop_at: Instant) {
        self.fill();
        for _ in 0..rounds.max(1) {
            if Instant::now() >= stop_at {
                log::debug!("heuristic stopped on its wall-clock guard");
                break;
            }
            let mut changed = false;
            changed |= self.two_opt();
            changed |= self.relocate(rng);
            changed |= self.swap(rng);
            changed |= self.exchange(rng);
            changed |= self.fill();
            if !changed {
                break;
            }
        }
    }

    fn state(&self) -> State {
        State {
            routes: self.routes.clone(),
            timing: self.timing.clone(),
            at: self.at.clone(),
            pairs_in: self.pairs_in.clone(),
        }
    }

    fn restore(&mut self, s: State) {
        self.routes = s.routes;
        self.timing = s.timing;
        self.at = s.at;
        self.pairs_in = s.pairs_in;
    }

    fn total_gain(&self) -> (u32, f64, u32) {
        let mut g = (0, 0.0, 0);
        for (j, at) in self.at.iter().enumerate() {
            if at.is_some() {
                g.0 += self.gains[j].boost;
                g.1 += self.gains[j].weight;
                g.2 += self.gains[j].credit;
            }
        }
        g
    }

    /// Whether the current solution is at least as good as one with objective
    /// `gain` and total route time `dur`: strictly better objective, or equal
    /// objective and no longer.
    fn accepts(&self, gain: (u32, f64, u32), dur: f64) -> bool {
        let now = self.total_gain();
        let ord = now
            .0
            .cmp(&gain.0)
            .then_with(|| cmp_tol(now.1, gain.1))
            .then_with(|| now.2.cmp(&gain.2));
        match ord {
            Ordering::Greater => true,
            Ordering::Equal => self.duration() <= dur + IMPROVE_EPS,
            Ordering::Less => false,
        }
    }

    /// Remove a handful of jobs (at random, around a random task, or a whole
    /// route that is then reseeded with a random job), rebuild greedily, and
    /// keep the result unless the objective got worse.
    fn ruin_recreate(&mut self, rng: &mut ChaCha8Rng, iters: usize, rounds: usize, stop_at: Instant) {
        let p = self.p;
        let nj = p.jobs.len();
        if nj == 0 || p.nv == 0 {
            return;
        }
        for it in 0..iters {
            if Instant::now() >= stop_at {
                log::debug!("ruin-and-recreate stopped on its wall-clock guard after {it} rounds");
                break;
            }
            let served: Vec<usize> = (0..nj).filter(|&j| self.at[j].is_some()).collect();
            let before = self.state();
            let (gain, dur) = (self.total_gain(), self.duration());
            match rng.gen_range(0..3) {
                0 if !served.is_empty() => {
                    let q = rng.gen_range(1..=served.len().min(RUIN_MAX).max(1));
                    for &j in served.choose_multiple(rng, q) {
                        self.remove_job(j);
                    }
                }
                1 if !served.is_empty() => {
                    let j0 = *served.choose(rng).unwrap();
                    let t0 = p.jobs[j0].tasks[0];
                    let q = rng.gen_range(1..=RUIN_MAX);
                    self.remove_job(j0);
                    let mut removed = 1;
                    for &t in p.neighbors()[t0].iter() {
                        if removed >= q {
                            break;
                        }
                        let j = p.job_of[t];
                        if self.at[j].is_some() {
                            self.remove_job(j);
                            removed += 1;
                        }
                    }
                }
                _ => {
                    let v = rng.gen_range(0..p.nv);
                    let mine: Vec<usize> = (0..nj).filter(|&j| self.at[j] == Some(v)).collect();
                    for j in mine {
                        self.remove_job(j);
                    }
                    let mut open: Vec<usize> = (0..nj)
                        .filter(|&j| self.at[j].is_none() && self.may_add(j))
                        .collect();
                    open.shuffle(rng);
                    for j in open.into_iter().take(SEED_TRIES) {
                        if let Some(ins) = self.best_insertion(j, v) {
                            if self.apply_insertion(j, v, ins) {
                                break;
                            }
                        }
                    }
                }
            }
            self.fill();
            if it % 8 == 7 {
                self.descend(rng, rounds.min(2), stop_at);
            }
            if !self.accepts(gain, dur) {
                self.restore(before);
            }
        }
        self.descend(rng, rounds, stop_at);
    }

    // ----- insertion -----

    fn prev(&self, v: usize, g: usize) -> (usize, f64) {
        if g == 0 {
            let s = &self.p.vehicles[v];
            (s.start, s.ready)
        } else {
            (self.routes[v][g - 1], self.timing[v].compl[g - 1])
        }
    }

    /// Continue the route from `node` completed at `done`, placed before gap `g`;
    /// returns the change in end time, or `None` if the tail cannot absorb it.
    fn close(&self, v: usize, g: usize, node: usize, done: f64, shift_room: f64) -> Option<f64> {
        let p = self.p;
        let t = &self.timing[v];
        let spec = &p.vehicles[v];
        if g == self.routes[v].len() {
            let end = if spec.ret {
                done + p.tt(v, node, spec.home)
            } else {
                done
            };
            (end <= spec.limit + TIME_EPS).then(|| end - t.end)
        } else {
            let shift = done + p.tt(v, node, self.routes[v][g]) - t.arr[g];
            (shift <= shift_room.min(t.slack[g]) + TIME_EPS).then_some(shift)
        }
    }

    fn best_insertion(&self, job: usize, v: usize) -> Option<Insertion> {
        let p = self.p;
        let jb = &p.jobs[job];
        if jb.pinned.is_some_and(|pv| pv != v) {
            return None;
        }
        if let TaskKind::Onboard(ov) = p.kind[jb.tasks[0]] {
            if ov != v {
                return None;
            }
        }
        let len = self.routes[v].len();
        let t = &self.timing[v];
        let cap = p.vehicles[v].cap;
        let mut best: Option<Insertion> = None;
        let mut offer = |ins: Insertion| {
            if best.is_none_or(|b| ins.delta < b.delta - 1e-12) {
                best = Some(ins);
            }
        };
        match jb.tasks[..] {
            [u] => {
                for g in 0..=len {
                    let (prev, pt) = self.prev(v, g);
                    let done = pt + p.tt(v, prev, u) + p.service[u];
                    if done > p.deadline[u] + TIME_EPS {
                        continue;
                    }
                    if let Some(delta) = self.close(v, g, u, done, f64::INFINITY) {
                        offer(Insertion {
                            delta,
                            first: g,
                            second: None,
                        });
                    }
                }
            }
            [pk, dr] => {
                for g in 0..=len {
                    if t.load[g] + 1 > cap {
                        continue;
                    }
                    let (prev, pt) = self.prev(v, g);
                    let c_pk = pt + p.tt(v, prev, pk) + p.service[pk];
                    if c_pk > p.deadline[pk] + TIME_EPS {
                        continue;
                    }
                    let c_dr = c_pk + p.tt(v, pk, dr) + p.service[dr];
                    if c_dr <= p.deadline[dr] + TIME_EPS {
                        if let Some(delta) = self.close(v, g, dr, c_dr, f64::INFINITY) {
                            offer(Insertion {
                                delta,
                                first: g,
                                second: Some(g),
                            });
                        }
                    }
                    if g == len {
                        continue;
                    }
                    let shift1 = c_pk + p.tt(v, pk, self.routes[v][g]) - t.arr[g];
                    let mut room = f64::INFINITY;
                    let mut peak = t.load[g];
                    for q in g + 1..=len {
                        let i = self.routes[v][q - 1];
                        room = room.min(p.deadline[i] - t.compl[q - 1]);
                        if shift1 > room + TIME_EPS {
                            break;
                        }
                        peak = peak.max(t.load[q]);
                        if peak + 1 > cap {
                            break;
                        }
                        let done = t.compl[q - 1] + shift1 + p.tt(v, i, dr) + p.service[dr];
                        if done > p.deadline[dr] + TIME_EPS {
                            continue;
                        }
                        if let Some(delta) = self.close(v, q, dr, done, f64::INFINITY) {
                            offer(Insertion {
                                delta,
                                first: g,
                                second: Some(q),
                            });
                        }
                    }
                }
            }
            _ => unreachable!("jobs hold one or two tasks"),
        }
        best
    }

    fn apply_insertion(&mut self, job: usize, v: usize, ins: Insertion) -> bool {
        let tasks = self.p.jobs[job].tasks.clone();
        let before = self.routes[v].clone();
        let r = &mut self.routes[v];
        match (&tasks[..], ins.second) {
            (&[u], None) => r.insert(ins.first, u),
            (&[pk, dr], Some(q)) => {
                r.insert(q, dr);
                r.insert(ins.first, pk);
            }
            _ => unreachable!(),
        }
        if self.p.eval_route(v, &self.routes[v]).is_none() {
            self.routes[v] = before;
            return false;
        }
        self.at[job] = Some(v);
        self.retime(v);
        true
    }

    fn remove_job(&mut self, job: usize) {
        if let Some(v) = self.at[job].take() {
            let tasks = &self.p.jobs[job].tasks;
            self.routes[v].retain(|t| !tasks.contains(t));
            self.retime(v);
        }
    }

    /// Insert unassigned jobs until nothing fits, best ratio of gain to added
    /// time first. Returns whether anything was inserted.
    fn fill(&mut self) -> bool {
        let nj = self.p.jobs.len();
        let nv = self.p.nv;
        if nv == 0 || nj == 0 {
            return false;
        }
        let mut cache: Vec<Option<Insertion>> = vec![None; nj * nv];
        let mut dirty = vec![true; nv];
        let mut inserted = false;
        loop {
            for v in 0..nv {
                if dirty[v] {
                    for j in 0..nj {
                        cache[j * nv + v] = if self.at[j].is_none() && self.may_add(j) {
                            self.best_insertion(j, v)
                        } else {
                            None
                        };
                    }
                    dirty[v] = false;
                }
            }
            let mut pick: Option<(usize, usize, Insertion)> = None;
            let mut pick_key = (0u32, 0.0f64, 0.0f64, 0.0f64);
            for j in 0..nj {
                if self.at[j].is_some() {
                    continue;
                }
                let g = self.gains[j];
                for v in 0..nv {
                    let Some(ins) = cache[j * nv + v] else { continue };
                    let d = ins.delta.max(MIN_DELTA);
                    let key = (g.boost, g.weight / d, f64::from(g.credit) / d, -ins.delta);
                    let better = match &pick {
                        None => true,
                        Some(_) => key
                            .0
                            .cmp(&pick_key.0)
                            .then_with(|| cmp_tol(key.1, pick_key.1))
                            .then_with(|| cmp_tol(key.2, pick_key.2))
                            .then_with(|| cmp_tol(key.3, pick_key.3))
                            == Ordering::Greater,
                    };
                    if better {
                        pick = Some((j, v, ins));
                        pick_key = key;
                    }
                }
            }
            let Some((j, v, ins)) = pick else { break };
            if self.apply_insertion(j, v, ins) {
                inserted = true;
                dirty[v] = true;
            } else {
                cache[j * nv + v] = None;
            }
        }
        inserted
    }

    // ----- improvement moves -----

    /// Segment reversal inside routes without paired rides.
    fn two_opt(&mut self) -> bool {
        let p = self.p;
        let mut changed = false;
        for v in 0..p.nv {
            if self.pairs_in[v] > 0 || self.routes[v].iter().any(|&i| p.kind[i] != TaskKind::Single) {
                continue;
            }
            let mut improved = true;
            let mut passes = 0;
            while improved && passes < 8 {
                improved = false;
                passes += 1;
                let len = self.routes[v].len();
                'outer: for i in 0..len.saturating_sub(1) {
                    for j in i + 1..len {
                        let mut cand = self.routes[v].clone();
                        cand[i..=j].reverse();
                        if let Some(end) = p.eval_route(v, &cand) {
                            if end < self.timing[v].end - IMPROVE_EPS {
                                self.routes[v] = cand;
                                self.retime(v);
                                improved = true;
                                changed = true;
                                break 'outer;
                            }
                        }
                    }
                }
            }
        }
        changed
    }

    /// Move a job to the position that most shortens the total route time.
    fn relocate(&mut self, rng: &mut ChaCha8Rng) -> bool {
        let mut order: Vec<usize> = (0..self.p.jobs.len()).filter(|&j| self.at[j].is_some()).collect();
        order.shuffle(rng);
        let mut changed = false;
        for j in order {
            let Some(from) = self.at[j] else { continue };
            let before_total = self.duration();
            let saved_route = self.routes[from].clone();
            let saved_timing = self.timing[from].clone();
            let saved_pairs = self.pairs_in[from];
            self.remove_job(j);
            let mut best: Option<(usize, Insertion, f64)> = None;
            for v in 0..self.p.nv {
                if let Some(ins) = self.best_insertion(j, v) {
                    let total = self.duration() + ins.delta;
                    if best.is_none_or(|b| total < b.2 - 1e-12) {
                        best = Some((v, ins, total));
                    }
                }
            }
            let accepted = match best {
                Some((v, ins, total)) if total < before_total - IMPROVE_EPS => {
                    self.apply_insertion(j, v, ins)
                }
                _ => false,
            };
            if accepted {
                changed = true;
            } else {
                self.routes[from] = saved_route;
                self.timing[from] = saved_timing;
                self.pairs_in[from] = saved_pairs;
                self.at[j] = Some(from);
            }
        }
        changed
    }

    /// Exchange two single tasks between different routes.
    fn swap(&mut self, rng: &mut ChaCha8Rng) -> bool {
        let p = self.p;
        let near = p.neighbors();
        let mut singles: Vec<usize> = (0..p.n)
            .filter(|&i| p.kind[i] == TaskKind::Single && self.at[p.job_of[i]].is_some())
            .collect();
        singles.shuffle(rng);
        let mut changed = false;
        for a in singles {
            let Some(ra) = self.at[p.job_of[a]] else { continue };
            for &b in &near[a] {
                if p.kind[b] != TaskKind::Single {
                    continue;
                }
                let Some(rb) = self.at[p.job_of[b]] else { continue };
                if ra == rb || !p.allowed(a, rb) || !p.allowed(b, ra) {
                    continue;
                }
                let ia = self.routes[ra].iter().position(|&x| x == a).unwrap();
                let ib = self.routes[rb].iter().position(|&x| x == b).unwrap();
                let mut na = self.routes[ra].clone();
                let mut nb = self.routes[rb].clone();
                na[ia] = b;
                nb[ib] = a;
                let (Some(ea), Some(eb)) = (p.eval_route(ra, &na), p.eval_route(rb, &nb)) else {
                    continue;
                };
                if ea + eb < self.timing[ra].end + self.timing[rb].end - IMPROVE_EPS {
                    self.routes[ra] = na;
                    self.routes[rb] = nb;
                    self.at[p.job_of[a]] = Some(rb);
                    self.at[p.job_of[b]] = Some(ra);
                    self.retime(ra);
                    self.retime(rb);
                    changed = true;
                    break;
                }
            }
        }
        changed
    }

    /// Replace a served single with a nearby unserved one when that raises the
    /// objective, or keeps it while freeing time.
    fn exchange(&mut self, rng: &mut ChaCha8Rng) -> bool {
        let p = self.p;
        let near = p.neighbors();
        let mut waiting: Vec<usize> = (0..p.jobs.len())
            .filter(|&j| self.at[j].is_none() && self.may_add(j) && p.jobs[j].tasks.len() == 1)
            .collect();
        waiting.shuffle(rng);
        let mut changed = false;
        for u in waiting {
            if self.at[u].is_some() {
                continue;
            }
            let ut = p.jobs[u].tasks[0];
            for &a in &near[ut] {
                let aj = p.job_of[a];
                if p.jobs[aj].tasks.len() != 1 {
                    continue;
                }
                let Some(v) = self.at[aj] else { continue };
                let ord = self.gains[u].cmp(&self.gains[aj]);
                if ord == Ordering::Less {
                    continue;
                }
                let saved_route = self.routes[v].clone();
                let saved_timing = self.timing[v].clone();
                let old_end = saved_timing.end;
                self.remove_job(aj);
                let ok = match self.best_insertion(u, v) {
                    Some(ins) => {
                        let end = self.timing[v].end + ins.delta;
                        (ord == Ordering::Greater || end < old_end - IMPROVE_EPS)
                            && self.apply_insertion(u, v, ins)
                    }
                    None => false,
                };
                if ok {
                    changed = true;
                    break;
                }
                self.routes[v] = saved_route;
                self.timing[v] = saved_timing;
                self.at[aj] = Some(v);
            }
        }
        changed
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;
    use std::sync::Arc;

    use super::*;
    use crate::model::{allocation_of, validate_schedule, Instance, PairRole, Task, TaskId, TravelModel, Vehicle};
    use crate::vrp::{Prepared, SolverConfig, WeightVector};

    fn prepared(tasks: Vec<Task>, customers: &[&str], budget: f64) -> Arc<Prepared> {
        let inst = Instance::new(
            customers.iter().map(|c| (*c).into()).collect(),
            tasks,
            vec![Vehicle::new("v", 0.0, 0.0, 10.0)],
            budget,
            TravelModel::Euclidean,
        )
        .unwrap();
        Arc::new(Prepared::new(Arc::new(inst)).unwrap())
    }

    #[test]
    fn line_instance() {
        let p = prepared(
            vec![
                Task::new("a", "c1", 100.0, 0.0, 10.0),
                Task::new("b", "c2", 200.0, 0.0, 10.0),
                Task::new("c", "c2", -300.0, 0.0, 10.0),
            ],
            &["c1", "c2"],
            60.0,
        );
        for w in [vec![1.0, 1.0], vec![0.0, 1.0]] {
            let req = SolverRequest::new(p.clone(), WeightVector::new(w).unwrap(), SolverConfig::default());
            let s = heuristic_vrp(&req).unwrap();
            let ids: Vec<TaskId> = s.task_ids().cloned().collect();
            assert_eq!(ids, vec![TaskId::from("a"), TaskId::from("b")]);
            assert_eq!(allocation_of(&s, &p.instance.customers).0, vec![1.0, 1.0]);
        }
    }

    #[test]
    fn pickup_precedes_dropoff() {
        let p = prepared(
            vec![
                Task::new("p", "c1", 100.0, 0.0, 0.0).with_pair(PairRole::PickupOf("d".into())),
                Task::new("d", "c1", 200.0, 0.0, 0.0).with_pair(PairRole::DropoffOf("p".into())),
            ],
            &["c1"],
            600.0,
        );
        let req = SolverRequest::new(p.clone(), WeightVector::uniform(1), SolverConfig::default());
        let s = heuristic_vrp(&req).unwrap();
        let ids: Vec<TaskId> = s.task_ids().cloned().collect();
        assert_eq!(ids, vec![TaskId::from("p"), TaskId::from("d")]);
        validate_schedule(&s, &p.instance).unwrap();
    }

    #[test]
    fn boosted_tasks_win() {
        let p = prepared(
            vec![
                Task::new("far", "c1", 250.0, 0.0, 0.0),
                Task::new("n1", "c2", -100.0, 0.0, 0.0),
                Task::new("n2", "c2", -110.0, 0.0, 0.0),
            ],
            &["c1", "c2"],
            50.0,
        );
        let boosted: HashSet<TaskId> = [TaskId::from("far")].into_iter().collect();
        let req = SolverRequest::new(p, WeightVector::uniform(2), SolverConfig::default()).with_boosted(boosted);
        let s = heuristic_vrp(&req).unwrap();
        assert!(s.contains(&TaskId::from("far")));
    }
}
