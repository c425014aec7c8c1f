//! `mobius`: run, compare and inspect fair fleet schedules.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mobius_core::synth::{MapKind, MapSpec, MAX_TASKS_PER_CUSTOMER};

use config::ScenarioConfig;

/// Exit code 2: bad arguments, config, or input files. Exit code 1: the
/// command itself failed.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

#[derive(Parser)]
#[command(name = "mobius", version, about = "Fair multi-customer fleet scheduling and emulation")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Scenario file (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Override a config key, e.g. `--set solver.backend=exact`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ScenarioConfig, Failure> {
        ScenarioConfig::load(&self.config, &self.set).map_err(Failure::Usage)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Emulate a trace under one policy, or every policy with `--policy all`.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// mobius, max_throughput, dedicated, round_robin or all.
        #[arg(long)]
        policy: Option<String>,
        /// Output directory; replaces `out_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Task file; replaces `trace`.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run all four policies on one trace and tabulate throughput and fairness.
    Compare {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Freeze the instance at a time and trace its convex boundary.
    Boundary {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Snapshot time in seconds.
        #[arg(long, default_value_t = 0.0)]
        at: f64,
        #[arg(long, default_value_t = 64)]
        max_faces: usize,
        /// JSON output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Enumerate every feasible allocation of a small frozen instance.
    Oracle {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 0.0)]
        at: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic scenario: a renewing trace and a config to run it.
    Gen {
        /// a, b, c, d or three.
        #[arg(long)]
        map: MapKind,
        #[arg(long, default_value_t = MAX_TASKS_PER_CUSTOMER)]
        tasks: usize,
        /// Round length; the map's default when absent.
        #[arg(long)]
        round_s: Option<f64>,
        #[arg(long, default_value_t = 50)]
        rounds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run {
            cfg,
            policy,
            out,
            trace,
        } => {
            let mut set = cfg.set.clone();
            if let Some(p) = policy {
                set.push(format!("policy={p:?}"));
            }
            let mut c = ConfigArgs { set, ..cfg }.load()?;
            if let Some(o) = out {
                c.out_dir = o;
            }
            if trace.is_some() {
                c.trace = trace;
            }
            commands::run(&c)
        }
        Command::Compare { cfg, out } => {
            let mut c = cfg.load()?;
            if let Some(o) = out {
                c.out_dir = o;
            }
            commands::compare(&c)
        }
        Command::Boundary {
            cfg,
            at,
            max_faces,
            out,
        } => commands::write_boundary(&cfg.load()?, at, max_faces, out.as_deref()),
        Command::Oracle { cfg, at, out } => commands::oracle(&cfg.load()?, at, out.as_deref()),
        Command::Gen {
            map,
            tasks,
            round_s,
            rounds,
            seed,
            out,
        } => {
            let mut spec = MapSpec::new(map).with_tasks(tasks).with_seed(seed);
            if let Some(b) = round_s {
                spec = spec.with_round(b);
            }
            let path = commands::gen(&spec, rounds, &out)?;
            println!("{}", path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
