//! Scenario files: TOML with flat dotted keys, plus `key=value` overrides.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use mobius_core::emulator::{Policy, SimConfig, Trace, DEFAULT_EXPIRY_S};
use mobius_core::model::{
    read_interest_maps, read_task_lines, read_travel_matrix, CustomerId, Location, Point, RideCounting, TravelModel,
    Vehicle, VehicleId,
};
use mobius_core::scheduler::RoundConfig;
use mobius_core::vrp::SolverConfig;

/// `policy = "all"` or a single policy name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicySel {
    All,
    One(Policy),
}

impl PolicySel {
    pub fn policies(&self) -> Vec<Policy> {
        match self {
            PolicySel::All => Policy::ALL.to_vec(),
            PolicySel::One(p) => vec![*p],
        }
    }
}

impl Serialize for PolicySel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            PolicySel::All => s.serialize_str("all"),
            PolicySel::One(p) => s.serialize_str(p.name()),
        }
    }
}

impl<'de> Deserialize<'de> for PolicySel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s == "all" {
            return Ok(PolicySel::All);
        }
        s.parse().map(PolicySel::One).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleConfig {
    pub id: String,
    pub x: f64,
    pub y: f64,
    #[serde(default = "default_speed")]
    pub speed: f64,
    #[serde(default = "default_capacity")]
    pub capacity: u32,
    #[serde(default)]
    pub return_home: bool,
    /// Matrix location id of the depot, for matrix travel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location_id: Option<String>,
}

fn default_speed() -> f64 {
    10.0
}

fn default_capacity() -> u32 {
    1
}

impl VehicleConfig {
    pub fn to_vehicle(&self) -> Vehicle {
        Vehicle {
            id: VehicleId::new(self.id.clone()),
            start_location: Location {
                point: Point::new(self.x, self.y),
                id: self.location_id.clone(),
            },
            speed: self.speed,
            capacity: self.capacity,
            return_home: self.return_home,
        }
    }

    pub fn from_vehicle(v: &Vehicle) -> Self {
        Self {
            id: v.id.as_str().to_owned(),
            x: v.start_location.point.x,
            y: v.start_location.point.y,
            speed: v.speed,
            capacity: v.capacity,
            return_home: v.return_home,
            location_id: v.start_location.id.clone(),
        }
    }
}

/// Everything one command needs. Relative paths are resolved against the
/// directory of the config file when it is loaded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// JSON-lines task file with arrival times.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
    /// Further task files, merged into the trace.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub interest_maps: Vec<PathBuf>,
    /// Customer roster; defaults to order of first appearance in the tasks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub customers: Option<Vec<String>>,
    /// Trace length; defaults to the last arrival.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
    /// CSV travel matrix; straight-line travel when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub travel_matrix: Option<PathBuf>,
    #[serde(default)]
    pub rides: RideCounting,
    #[serde(default = "default_expiry")]
    pub expiry_s: f64,
    #[serde(default = "default_policy")]
    pub policy: PolicySel,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    /// Seeds the solver; overrides `solver.seed`.
    #[serde(default)]
    pub seed: u64,

    #[serde(default = "d_round_s")]
    pub round_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replan_s: Option<f64>,
    #[serde(default = "d_alpha")]
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discount: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub return_home_every_s: Option<f64>,
    #[serde(default = "d_prune")]
    pub prune_after_rounds: usize,
    #[serde(default = "d_stages")]
    pub max_stages: usize,

    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub vehicles: Vec<VehicleConfig>,
}

fn default_expiry() -> f64 {
    DEFAULT_EXPIRY_S
}
fn default_policy() -> PolicySel {
    PolicySel::One(Policy::Mobius)
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn d_round_s() -> f64 {
    RoundConfig::default().round_s
}
fn d_alpha() -> f64 {
    RoundConfig::default().alpha
}
fn d_prune() -> usize {
    RoundConfig::default().prune_after_rounds
}
fn d_stages() -> usize {
    RoundConfig::default().max_stages
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        toml::from_str("").expect("every field has a default")
    }
}

impl ScenarioConfig {
    pub fn round(&self) -> RoundConfig {
        RoundConfig {
            round_s: self.round_s,
            replan_s: self.replan_s,
            alpha: self.alpha,
            discount: self.discount,
            return_home_every_s: self.return_home_every_s,
            prune_after_rounds: self.prune_after_rounds,
            max_stages: self.max_stages,
        }
    }

    pub fn set_round(&mut self, r: &RoundConfig) {
        self.round_s = r.round_s;
        self.replan_s = r.replan_s;
        self.alpha = r.alpha;
        self.discount = r.discount;
        self.return_home_every_s = r.return_home_every_s;
        self.prune_after_rounds = r.prune_after_rounds;
        self.max_stages = r.max_stages;
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            seed: self.seed,
            ..self.solver.clone()
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Parse TOML text, apply `key=value` overrides, and resolve relative
    /// paths against `base`.
    pub fn parse(text: &str, overrides: &[String], base: &Path) -> anyhow::Result<Self> {
        let mut table: toml::Table = toml::from_str(text)?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let mut cfg: ScenarioConfig = table.try_into()?;
        cfg.resolve_paths(base);
        cfg.round().validate()?;
        if !(cfg.expiry_s.is_finite() && cfg.expiry_s > 0.0) {
            bail!("expiry_s must be positive");
        }
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, overrides, base).with_context(|| format!("in {}", path.display()))
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(t) = &mut self.trace {
            fix(t);
        }
        self.interest_maps.iter_mut().for_each(fix);
        if let Some(m) = &mut self.travel_matrix {
            fix(m);
        }
        fix(&mut self.out_dir);
    }

    pub fn travel(&self) -> anyhow::Result<TravelModel> {
        match &self.travel_matrix {
            None => Ok(TravelModel::Euclidean),
            Some(p) => {
                let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
                let m = read_travel_matrix(f).with_context(|| p.display().to_string())?;
                Ok(TravelModel::Matrix(Arc::new(m)))
            }
        }
    }

    pub fn sim(&self) -> anyhow::Result<SimConfig> {
        let mut sim = SimConfig::new(
            self.vehicles.iter().map(VehicleConfig::to_vehicle).collect(),
            self.round(),
            self.solver(),
        );
        sim.expiry_s = self.expiry_s;
        sim.travel = self.travel()?;
        sim.rides = self.rides;
        Ok(sim)
    }

    /// Read the task files into a trace.
    pub fn load_trace(&self) -> anyhow::Result<Trace> {
        let mut tasks = Vec::new();
        if let Some(p) = &self.trace {
            let f = File::open(p).with_context(|| format!("opening trace {}", p.display()))?;
            tasks.extend(read_task_lines(BufReader::new(f)).with_context(|| p.display().to_string())?);
        }
        for p in &self.interest_maps {
            let f = File::open(p).with_context(|| format!("opening interest map {}", p.display()))?;
            let maps = read_interest_maps(BufReader::new(f)).with_context(|| p.display().to_string())?;
            tasks.extend(maps.into_iter().flat_map(|m| m.tasks));
        }
        let trace = match &self.customers {
            Some(cs) => {
                let cs: Vec<CustomerId> = cs.iter().map(CustomerId::new).collect();
                let last = tasks.iter().map(|t| t.arrival_time).fold(0.0, f64::max);
                Trace::new(cs, tasks, self.duration_s.unwrap_or(last))?
            }
            None => Trace::from_tasks(tasks, self.duration_s)?,
        };
        Ok(trace)
    }
}

/// `a.b.c=value`; the value is parsed as TOML and taken as a bare string if
/// that fails.
fn apply_override(table: &mut toml::Table, spec: &str) -> anyhow::Result<()> {
    let Some((key, raw)) = spec.split_once('=') else {
        bail!("override {spec:?} is not key=value");
    };
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        bail!("override {spec:?} has an empty key");
    }
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_owned()));
    let (last, path) = parts.split_last().expect("nonempty");
    let mut cur = table;
    for p in path {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = match entry {
            toml::Value::Table(t) => t,
            _ => bail!("override {spec:?}: {p} is not a table"),
        };
    }
    cur.insert(last.to_string(), value);
    Ok(())
}
