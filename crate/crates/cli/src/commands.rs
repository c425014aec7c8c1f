use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, Context};
use serde::Serialize;

use mobius_core::boundary::{full_boundary, search_boundary, OutcomeKind};
use mobius_core::emulator::{
    run_trace, write_metrics_csv, write_wait_histogram, write_xbar_series, Metrics, Policy, SimEvent, SimOutput,
    StatusCounts, Trace,
};
use mobius_core::model::{write_task_lines, Instance, Schedule};
use mobius_core::oracle::{boundary_optimum, convex_boundary, enumerate_feasible_allocations, pareto_frontier};
use mobius_core::scheduler::{RoundEvent, RoundSolver};
use mobius_core::synth::{generate, MapSpec};
use mobius_core::vrp::Prepared;

use crate::config::{PolicySel, ScenarioConfig, VehicleConfig};
use crate::Failure;

type Res<T> = Result<T, Failure>;

trait OrFail<T> {
    fn usage(self) -> Res<T>;
    fn runtime(self) -> Res<T>;
}

impl<T, E: Into<anyhow::Error>> OrFail<T> for Result<T, E> {
    fn usage(self) -> Res<T> {
        self.map_err(|e| Failure::Usage(e.into()))
    }
    fn runtime(self) -> Res<T> {
        self.map_err(|e| Failure::Runtime(e.into()))
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a ScenarioConfig,
}

impl<'a> Manifest<'a> {
    fn new(command: &'static str, config: &'a ScenarioConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
        }
    }
}

#[derive(Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum LogLine<'a> {
    Round(&'a RoundEvent),
    Task(&'a SimEvent),
}

#[derive(Serialize)]
struct RunSummary<'a> {
    manifest: Manifest<'a>,
    metrics: &'a Metrics,
    counts: StatusCounts,
    replans: usize,
}

#[derive(Serialize)]
struct Timings {
    wall_s: f64,
    round_wall_s: Vec<f64>,
}

fn create(path: &Path) -> Res<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .with_context(|| format!("creating {}", path.display()))
        .runtime()
}

fn write_json(path: &Path, value: &impl Serialize) -> Res<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).runtime()?;
    w.write_all(b"\n").runtime()?;
    w.flush().runtime()
}

fn write_csv(path: &Path, f: impl FnOnce(BufWriter<File>) -> csv::Result<()>) -> Res<()> {
    f(create(path)?).with_context(|| format!("writing {}", path.display())).runtime()
}

fn write_run(dir: &Path, cfg: &ScenarioConfig, out: &SimOutput, wall_s: f64) -> Res<()> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating {}", dir.display()))
        .runtime()?;
    let m = &out.metrics;
    write_csv(&dir.join("metrics.csv"), |w| write_metrics_csv(w, m))?;
    write_csv(&dir.join("wait_hist.csv"), |w| write_wait_histogram(w, m))?;
    write_csv(&dir.join("xbar_series.csv"), |w| write_xbar_series(w, m))?;

    let mut lines: Vec<(f64, LogLine)> = out.rounds.iter().map(|r| (r.start_s, LogLine::Round(r))).collect();
    lines.extend(out.final_state.events().iter().map(|e| (e.t_s, LogLine::Task(e))));
    lines.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut w = create(&dir.join("events.jsonl"))?;
    for (_, l) in &lines {
        serde_json::to_writer(&mut w, l).runtime()?;
        w.write_all(b"\n").runtime()?;
    }
    w.flush().runtime()?;

    write_json(
        &dir.join("summary.json"),
        &RunSummary {
            manifest: Manifest::new("run", cfg),
            metrics: m,
            counts: out.final_state.counts(),
            replans: out.metrics.series.len().saturating_sub(1),
        },
    )?;
    write_json(
        &dir.join("timings.json"),
        &Timings {
            wall_s,
            round_wall_s: out.rounds.iter().map(|r| r.wall_s).collect(),
        },
    )
}

fn simulate(cfg: &ScenarioConfig, trace: &Trace, policy: Policy) -> Res<(SimOutput, f64)> {
    let sim = cfg.sim().usage()?;
    let t0 = Instant::now();
    let out = run_trace(trace, policy, &sim)
        .with_context(|| format!("running {policy}"))
        .runtime()?;
    Ok((out, t0.elapsed().as_secs_f64()))
}

pub fn run(cfg: &ScenarioConfig) -> Res<()> {
    let trace = cfg.load_trace().usage()?;
    for policy in cfg.policy.policies() {
        let dir = match cfg.policy {
            PolicySel::All => cfg.out_dir.join(policy.name()),
            PolicySel::One(_) => cfg.out_dir.clone(),
        };
        let (out, wall) = simulate(cfg, &trace, policy)?;
        log::info!(
            "{policy}: total {:.3} tasks/min, jain {:.3}",
            out.metrics.total_throughput,
            out.metrics.jain
        );
        write_run(&dir, cfg, &out, wall)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CompareRow<'a> {
    policy: &'a str,
    customer: &'a str,
    xbar: f64,
    completion_fraction: f64,
    total_throughput: f64,
    jain: f64,
}

#[derive(Serialize)]
struct CompareSummary<'a> {
    manifest: Manifest<'a>,
    policies: Vec<&'a Metrics>,
}

fn compare_table(w: impl Write, results: &[Metrics]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for m in results {
        if m.customers.is_empty() {
            out.write_record([m.policy.name(), "", "0", "0", "0", &m.jain.to_string()])?;
            continue;
        }
        for c in &m.customers {
            out.serialize(CompareRow {
                policy: m.policy.name(),
                customer: c.customer.as_str(),
                xbar: c.xbar,
                completion_fraction: c.completion_fraction,
                total_throughput: m.total_throughput,
                jain: m.jain,
            })?;
        }
    }
    out.flush()?;
    Ok(())
}

/// All four policies on one trace: `compare.csv` plus a summary, and the
/// table on stdout.
pub fn compare(cfg: &ScenarioConfig) -> Res<()> {
    let trace = cfg.load_trace().usage()?;
    let mut results = Vec::new();
    for policy in Policy::ALL {
        let (out, _) = simulate(cfg, &trace, policy)?;
        results.push(out.metrics);
    }
    fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))
        .runtime()?;
    write_csv(&cfg.out_dir.join("compare.csv"), |w| compare_table(w, &results))?;
    write_json(
        &cfg.out_dir.join("summary.json"),
        &CompareSummary {
            manifest: Manifest::new("compare", cfg),
            policies: results.iter().collect(),
        },
    )?;
    compare_table(std::io::stdout().lock(), &results).runtime()
}

/// The planning instance after emulating the configured policy up to `at`.
fn freeze(cfg: &ScenarioConfig, at: f64) -> Res<(Instance, Option<Schedule>)> {
    if !(at.is_finite() && at >= 0.0) {
        return Err(Failure::Usage(anyhow!("snapshot time must be non-negative")));
    }
    let trace = cfg.load_trace().usage()?;
    let tasks = trace.tasks().iter().filter(|t| t.arrival_time <= at).cloned().collect();
    let cut = Trace::new(trace.customers.clone(), tasks, at).usage()?;
    let policy = match cfg.policy {
        PolicySel::One(p) => p,
        PolicySel::All => Policy::Mobius,
    };
    let (out, _) = simulate(cfg, &cut, policy)?;
    out.final_state
        .snapshot(cfg.round_s, cfg.return_home_every_s)
        .runtime()
}

fn emit(out: Option<&Path>, value: &impl Serialize) -> Res<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).runtime()?;
            }
            write_json(p, value)
        }
        None => {
            let mut w = std::io::stdout().lock();
            serde_json::to_writer_pretty(&mut w, value).runtime()?;
            writeln!(w).runtime()
        }
    }
}

#[derive(Serialize)]
struct FaceReport {
    corners: Vec<Vec<f64>>,
    normal: Vec<f64>,
    offset: f64,
}

#[derive(Serialize)]
struct BoundaryReport {
    t_s: f64,
    customers: Vec<String>,
    active: Vec<usize>,
    corners: Vec<Vec<f64>>,
    faces: Vec<FaceReport>,
    target: Vec<f64>,
    target_kind: OutcomeKind,
    /// Where the boundary meets the all-equal diagonal, when every customer
    /// can be served.
    equal_point: Option<Vec<f64>>,
    calls: usize,
}

pub fn boundary(cfg: &ScenarioConfig, at: f64, max_faces: usize) -> Res<impl Serialize> {
    let (inst, warm) = freeze(cfg, at)?;
    let k = inst.customers.len();
    let customers = inst.customers.iter().map(|c| c.as_str().to_owned()).collect();
    let prep = Arc::new(Prepared::new(Arc::new(inst)).usage()?);
    let warm: Vec<Schedule> = warm.into_iter().collect();
    let solver = RoundSolver::new(prep.clone(), cfg.solver(), warm.clone());
    let map = full_boundary(&solver, k, max_faces).runtime()?;
    let search = RoundSolver::new(prep, cfg.solver(), warm);
    let outcome = search_boundary(&search, k, cfg.round().fairness(), cfg.max_stages).runtime()?;

    let corners: Vec<Vec<f64>> = map.corners.iter().map(|c| c.point()).collect();
    let faces: Vec<FaceReport> = map
        .faces
        .iter()
        .map(|f| FaceReport {
            corners: f.corners.iter().map(|c| c.point()).collect(),
            normal: f.full_normal(),
            offset: f.plane.c,
        })
        .collect();
    let equal_point = (k >= 2 && map.active.len() == k).then(|| {
        let mut s = (0..k)
            .map(|i| corners.iter().map(|c| c[i]).fold(0.0, f64::max))
            .fold(f64::INFINITY, f64::min);
        for f in &faces {
            let sum: f64 = f.normal.iter().sum();
            if sum > 0.0 {
                s = s.min(f.offset / sum);
            }
        }
        vec![s; k]
    });
    Ok(BoundaryReport {
        t_s: at,
        customers,
        active: map.active.clone(),
        corners,
        faces,
        target: outcome.target,
        target_kind: outcome.kind,
        equal_point,
        calls: map.calls,
    })
}

pub fn write_boundary(cfg: &ScenarioConfig, at: f64, max_faces: usize, out: Option<&Path>) -> Res<()> {
    emit(out, &boundary(cfg, at, max_faces)?)
}

#[derive(Serialize)]
struct OracleReport {
    t_s: f64,
    customers: Vec<String>,
    feasible: Vec<Vec<f64>>,
    pareto: Vec<Vec<f64>>,
    boundary_corners: Vec<Vec<f64>>,
    /// Utility-best point over the boundary; absent in max-min mode.
    target: Option<Vec<f64>>,
    target_utility: Option<f64>,
}

pub fn oracle(cfg: &ScenarioConfig, at: f64, out: Option<&Path>) -> Res<()> {
    let (inst, _) = freeze(cfg, at)?;
    let fs = enumerate_feasible_allocations(&inst).runtime()?;
    let pareto = pareto_frontier(&fs).allocations();
    let corners: Vec<Vec<f64>> = convex_boundary(&fs).into_iter().map(|p| p.allocation.0).collect();
    let (target, target_utility) = if cfg.round().fairness().is_leximin() || corners.is_empty() {
        (None, None)
    } else {
        let (x, u) = boundary_optimum(&corners, cfg.alpha);
        (Some(x), Some(u))
    };
    emit(
        out,
        &OracleReport {
            t_s: at,
            customers: inst.customers.iter().map(|c| c.as_str().to_owned()).collect(),
            feasible: fs.allocations(),
            pareto,
            boundary_corners: corners,
            target,
            target_utility,
        },
    )
}

/// Write `trace.jsonl` and a runnable `scenario.toml` for a synthetic map.
pub fn gen(spec: &MapSpec, rounds: usize, out: &Path) -> Res<PathBuf> {
    let scenario = generate(spec).usage()?;
    fs::create_dir_all(out)
        .with_context(|| format!("creating {}", out.display()))
        .runtime()?;
    let trace = scenario.renewing_trace(rounds);
    let mut w = create(&out.join("trace.jsonl"))?;
    write_task_lines(&mut w, trace.tasks()).runtime()?;
    w.flush().runtime()?;

    let mut cfg = ScenarioConfig {
        trace: Some(PathBuf::from("trace.jsonl")),
        customers: Some(scenario.instance.customers.iter().map(|c| c.as_str().to_owned()).collect()),
        duration_s: Some(trace.duration),
        seed: spec.seed,
        vehicles: scenario.vehicles().iter().map(VehicleConfig::from_vehicle).collect(),
        ..ScenarioConfig::default()
    };
    cfg.set_round(&scenario.round);
    let path = out.join("scenario.toml");
    let mut w = create(&path)?;
    writeln!(w, "# {}, {} rounds", scenario.name, rounds).runtime()?;
    w.write_all(cfg.to_toml().as_bytes()).runtime()?;
    w.flush().runtime()?;
    Ok(path)
}
