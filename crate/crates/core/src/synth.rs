//! Synthetic scenarios: small two- and three-customer maps with renewing
//! demand, plus a large instance for timing.
//!
//! Map geometry is expressed as fractions of the distance a vehicle covers in
//! one round, so shrinking `round_s` shrinks the map with it.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::emulator::Trace;
use crate::model::{CustomerId, Instance, ModelError, Task, TravelModel, Vehicle};
use crate::scheduler::RoundConfig;

pub const SPEED: f64 = 10.0;
pub const SERVICE_S: f64 = 10.0;
pub const MAX_TASKS_PER_CUSTOMER: usize = 40;
/// Radius of a dense task cluster, meters.
const DENSE_R: f64 = 25.0;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("tasks_per_customer must be in 1..={MAX_TASKS_PER_CUSTOMER}, got {0}")]
    TaskCount(usize),
    #[error("round_s must be positive")]
    Round,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    /// Customer 1 spread around the depot and along two roads; customer 2
    /// has a small dense cluster at the far end of each road.
    A,
    /// Two remote sites, each holding half of both customers' tasks.
    B,
    /// Customer 1 spread around the depot; a remote site mixes a few tasks of
    /// both customers.
    C,
    /// Both customers spread over the same area, mirror images about y = x.
    D,
    /// Three customers and three vehicles; customer 1 lies on the way to
    /// customer 3.
    Three,
}

impl MapKind {
    pub const ALL: [MapKind; 5] = [MapKind::A, MapKind::B, MapKind::C, MapKind::D, MapKind::Three];

    pub fn name(&self) -> &'static str {
        match self {
            MapKind::A => "a",
            MapKind::B => "b",
            MapKind::C => "c",
            MapKind::D => "d",
            MapKind::Three => "three",
        }
    }
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MapKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        MapKind::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown map {s:?} (expected a, b, c, d or three)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapSpec {
    pub map: MapKind,
    pub tasks_per_customer: usize,
    /// Round length; `None` uses the map's default (900 s, or 300 s for the
    /// three-customer map).
    pub round_s: Option<f64>,
    pub seed: u64,
}

impl Default for MapSpec {
    fn default() -> Self {
        Self {
            map: MapKind::A,
            tasks_per_customer: MAX_TASKS_PER_CUSTOMER,
            round_s: None,
            seed: 0,
        }
    }
}

impl MapSpec {
    pub fn new(map: MapKind) -> Self {
        Self {
            map,
            ..Self::default()
        }
    }

    pub fn with_tasks(mut self, n: usize) -> Self {
        self.tasks_per_customer = n;
        self
    }

    pub fn with_round(mut self, round_s: f64) -> Self {
        self.round_s = Some(round_s);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// A generated map: the per-round instance (vehicles at the depot, returning
/// home) and a matching round configuration.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub instance: Instance,
    pub round: RoundConfig,
}

impl Scenario {
    pub fn vehicles(&self) -> Vec<Vehicle> {
        self.instance.vehicles.iter().map(|v| v.vehicle.clone()).collect()
    }

    /// The map's tasks re-issued at the start of every round, each copy
    /// expiring at the end of its round.
    pub fn renewing_trace(&self, rounds: usize) -> Trace {
        let b = self.round.round_s;
        let mut tasks = Vec::with_capacity(self.instance.tasks.len() * rounds);
        for r in 0..rounds {
            let start = r as f64 * b;
            for t in &self.instance.tasks {
                let mut c = t.clone();
                c.id = crate::model::TaskId::new(format!("{}@{r}", t.id));
                c.arrival_time = start;
                c.deadline = Some(start + b);
                tasks.push(c);
            }
        }
        Trace::new(self.instance.customers.clone(), tasks, rounds as f64 * b)
            .expect("generated trace is valid")
    }
}

struct Builder {
    rng: ChaCha8Rng,
    tasks: Vec<Task>,
    counts: Vec<usize>,
    customers: Vec<CustomerId>,
}

impl Builder {
    fn new(seed: u64, k: usize) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            tasks: Vec::new(),
            counts: vec![0; k],
            customers: (1..=k).map(|i| CustomerId::new(format!("c{i}"))).collect(),
        }
    }

    fn add(&mut self, c: usize, x: f64, y: f64) {
        let id = format!("{}-{}", self.customers[c], self.counts[c]);
        self.counts[c] += 1;
        self.tasks.push(Task::new(id, self.customers[c].as_str(), x, y, SERVICE_S));
    }

    fn disc(&mut self, c: usize, n: usize, cx: f64, cy: f64, r: f64) {
        for _ in 0..n {
            let a = self.rng.gen_range(0.0..std::f64::consts::TAU);
            let d = r * self.rng.gen::<f64>().sqrt();
            self.add(c, cx + d * a.cos(), cy + d * a.sin());
        }
    }

    fn square(&mut self, c: usize, n: usize, x0: f64, x1: f64, y0: f64, y1: f64) {
        for _ in 0..n {
            let x = self.rng.gen_range(x0..x1);
            let y = self.rng.gen_range(y0..y1);
            self.add(c, x, y);
        }
    }

    /// `n` tasks evenly spaced on the segment from the depot toward (x, y),
    /// skipping both ends, with a little lateral jitter.
    fn road(&mut self, c: usize, n: usize, x: f64, y: f64) {
        let len = x.hypot(y);
        let (nx, ny) = (-y / len, x / len);
        for i in 0..n {
            let f = (i + 1) as f64 / (n + 1) as f64;
            let j = self.rng.gen_range(-DENSE_R..DENSE_R);
            self.add(c, f * x + j * nx, f * y + j * ny);
        }
    }

    /// `n` tasks evenly spaced between fractions `f0` and `f1` of the segment
    /// from the depot to (x, y).
    fn road_span(&mut self, c: usize, n: usize, x: f64, y: f64, f0: f64, f1: f64) {
        let len = x.hypot(y);
        let (nx, ny) = (-y / len, x / len);
        for i in 0..n {
            let f = if n == 1 { (f0 + f1) / 2.0 } else { f0 + (f1 - f0) * i as f64 / (n - 1) as f64 };
            let j = self.rng.gen_range(-DENSE_R..DENSE_R);
            self.add(c, f * x + j * nx, f * y + j * ny);
        }
    }

    fn finish(self, vehicles: usize, budget: f64) -> Result<Instance, ModelError> {
        let vs = (0..vehicles)
            .map(|i| Vehicle::new(format!("v{i}"), 0.0, 0.0, SPEED).returning())
            .collect();
        Instance::new(self.customers, self.tasks, vs, budget, TravelModel::Euclidean)
    }
}

/// Map A layout for `n` tasks per customer and round length `b`. Customer 2
/// has two small clusters in opposite directions, each about one vehicle's
/// worth of work for a full round trip; customer 1 is spread around the
/// depot with a few tasks on each road out.
#[derive(Debug, Clone, Copy)]
struct MapAShape {
    sparse: usize,
    per_road: usize,
    c2: usize,
    cluster: usize,
    far: f64,
    spread: f64,
    band: f64,
    road: (f64, f64),
}

impl MapAShape {
    fn new(n: usize, b: f64) -> Self {
        let per_road = ((n as f64 * 0.225).round() as usize).max(1).min(n / 2);
        let sparse = n - 2 * per_road;
        let cluster = ((n as f64 * 0.225).round() as usize).max(1);
        let c2 = (2 * cluster).min(n);
        let cluster = cluster.min(c2);
        // One trip: out and back, the road tasks, and the cluster.
        let slack = 0.97;
        let travel = slack * b - SERVICE_S * per_road as f64 - (SERVICE_S + 1.0) * cluster as f64;
        let far = (travel.max(0.1 * b) * SPEED / 2.0).max(1.0);
        let spread = 0.12 * SPEED * b;
        let band = 0.15 * spread;
        let road = (0.5, 0.95);
        Self {
            sparse,
            per_road,
            c2,
            cluster,
            far,
            spread,
            band,
            road,
        }
    }
}

/// Build one of the small maps.
pub fn generate(spec: &MapSpec) -> Result<Scenario, SynthError> {
    let n = spec.tasks_per_customer;
    if n == 0 || n > MAX_TASKS_PER_CUSTOMER {
        return Err(SynthError::TaskCount(n));
    }
    let default_round = if spec.map == MapKind::Three { 300.0 } else { 900.0 };
    let b = spec.round_s.unwrap_or(default_round);
    if !(b > 0.0 && b.is_finite()) {
        return Err(SynthError::Round);
    }
    // Meters a vehicle covers in one round.
    let l = SPEED * b;
    let mut round = RoundConfig {
        round_s: b,
        ..RoundConfig::default()
    };
    let (instance, vehicles) = match spec.map {
        MapKind::A => {
            let mut g = Builder::new(spec.seed, 2);
            let shape = MapAShape::new(n, b);
            g.square(0, shape.sparse, -shape.spread, shape.spread, -shape.band, shape.band);
            for dir in [1.0, -1.0] {
                g.road_span(0, shape.per_road, 0.0, dir * shape.far, shape.road.0, shape.road.1);
            }
            for (i, dir) in [1.0, -1.0].into_iter().enumerate() {
                let m = if i == 0 { shape.cluster } else { shape.c2 - shape.cluster };
                g.disc(1, m, 0.0, dir * shape.far, DENSE_R);
            }
            (g, 2)
        }
        MapKind::B => {
            let mut g = Builder::new(spec.seed, 2);
            let site = 0.17 * l;
            let half = n / 2;
            g.disc(0, half, -site, 0.0, 2.0 * DENSE_R);
            g.disc(1, half, -site, 0.0, 2.0 * DENSE_R);
            g.disc(0, n - half, site, 0.0, 2.0 * DENSE_R);
            g.disc(1, n - half, site, 0.0, 2.0 * DENSE_R);
            (g, 2)
        }
        MapKind::C => {
            let mut g = Builder::new(spec.seed, 2);
            let remote = n * 3 / 10;
            let spread = 0.12 * l;
            g.square(0, n - remote, -spread, spread, -spread, spread);
            g.disc(0, remote, 0.3 * l, 0.1 * l, 2.0 * DENSE_R);
            g.disc(1, remote.max(1), 0.3 * l, 0.1 * l, 2.0 * DENSE_R);
            (g, 2)
        }
        MapKind::D => {
            let mut g = Builder::new(spec.seed, 2);
            let spread = 0.15 * l;
            let mut pts = Vec::with_capacity(n);
            for _ in 0..n {
                pts.push((g.rng.gen_range(-spread..spread), g.rng.gen_range(-spread..spread)));
            }
            for &(x, y) in &pts {
                g.add(0, x, y);
            }
            for &(x, y) in &pts {
                g.add(1, y, x);
            }
            (g, 2)
        }
        MapKind::Three => {
            round.return_home_every_s = Some(3.0 * b);
            let mut g = Builder::new(spec.seed, 3);
            let far = (0.6 * l, 0.6 * l);
            g.road(0, n / 2, far.0, far.1);
            g.square(0, n - n / 2, -0.1 * l, 0.1 * l, -0.1 * l, 0.1 * l);
            g.disc(1, n, -0.3 * l, 0.2 * l, 2.0 * DENSE_R);
            g.disc(2, n, far.0, far.1, DENSE_R);
            (g, 3)
        }
    };
    let instance = instance.finish(vehicles, b)?;
    Ok(Scenario {
        name: format!("map-{}", spec.map),
        instance,
        round,
    })
}

/// A large one-round instance: `customers` customers with clustered demand
/// over a city-sized square, `tasks` tasks in total, `vehicles` vehicles.
pub fn scale_instance(customers: usize, tasks: usize, vehicles: usize, round_s: f64, seed: u64) -> Result<Instance, ModelError> {
    let k = customers.max(1);
    let mut g = Builder::new(seed, k);
    let side = 12_000.0;
    let centers: Vec<Vec<(f64, f64)>> = (0..k)
        .map(|_| {
            (0..3)
                .map(|_| (g.rng.gen_range(-side / 2.0..side / 2.0), g.rng.gen_range(-side / 2.0..side / 2.0)))
                .collect()
        })
        .collect();
    for i in 0..tasks {
        let c = i % k;
        if g.rng.gen_bool(0.3) {
            g.square(c, 1, -side / 2.0, side / 2.0, -side / 2.0, side / 2.0);
        } else {
            let (cx, cy) = centers[c][g.rng.gen_range(0..3)];
            g.disc(c, 1, cx, cy, 800.0);
        }
    }
    let vs = (0..vehicles)
        .map(|i| {
            let a = i as f64 / vehicles.max(1) as f64 * std::f64::consts::TAU;
            Vehicle::new(format!("v{i}"), 2000.0 * a.cos(), 2000.0 * a.sin(), SPEED)
        })
        .collect();
    Instance::new(g.customers, g.tasks, vs, round_s, TravelModel::Euclidean)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maps_respect_task_caps() {
        for m in MapKind::ALL {
            let s = generate(&MapSpec::new(m).with_seed(3)).unwrap();
            for c in &s.instance.customers {
                let n = s.instance.tasks.iter().filter(|t| &t.customer == c).count();
                assert!(n <= MAX_TASKS_PER_CUSTOMER && n > 0, "{m} {c} {n}");
            }
            assert!(s.instance.tasks.iter().all(|t| t.service_time == SERVICE_S));
            assert!(s.instance.vehicles.iter().all(|v| v.vehicle.return_home && v.vehicle.speed == SPEED));
        }
        assert!(generate(&MapSpec::new(MapKind::A).with_tasks(41)).is_err());
    }

    #[test]
    fn map_d_is_mirror_symmetric() {
        let s = generate(&MapSpec::new(MapKind::D).with_seed(9)).unwrap();
        let pts = |c: &str| -> Vec<(f64, f64)> {
            s.instance
                .tasks
                .iter()
                .filter(|t| t.customer.as_str() == c)
                .map(|t| (t.location.point.x, t.location.point.y))
                .collect()
        };
        let (a, b) = (pts("c1"), pts("c2"));
        assert_eq!(a.len(), b.len());
        for ((x, y), (u, v)) in a.iter().zip(&b) {
            assert_eq!((x, y), (v, u));
        }
    }

    #[test]
    fn generation_is_seeded() {
        let a = generate(&MapSpec::new(MapKind::A).with_seed(1)).unwrap();
        let b = generate(&MapSpec::new(MapKind::A).with_seed(1)).unwrap();
        let c = generate(&MapSpec::new(MapKind::A).with_seed(2)).unwrap();
        assert_eq!(a.instance.tasks, b.instance.tasks);
        assert_ne!(a.instance.tasks, c.instance.tasks);
    }

    #[test]
    fn renewing_trace_repeats_tasks() {
        let s = generate(&MapSpec::new(MapKind::B).with_tasks(4)).unwrap();
        let t = s.renewing_trace(3);
        assert_eq!(t.tasks().len(), 3 * s.instance.tasks.len());
        assert_eq!(t.duration, 2700.0);
        assert!(t.tasks().iter().all(|x| x.deadline == Some(x.arrival_time + 900.0)));
    }

    #[test]
    fn scale_instance_has_requested_size() {
        let inst = scale_instance(6, 999, 24, 5400.0, 0).unwrap();
        assert_eq!(inst.tasks.len(), 999);
        assert_eq!(inst.vehicles.len(), 24);
        assert_eq!(inst.customers.len(), 6);
    }
}
