//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage and input errors (bad flags, unknown
//! preset, unreadable or invalid files), 2 when a run fails after starting.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::auction::{solve, Instance};
use crate::bidding::{PenaltyMode, TauMode};
use crate::metrics::export;
use crate::sim::{preset, run_scenario, scenario_presets, ScenarioConfig, SimError};

#[derive(Debug, Parser)]
#[command(
    name = "qalloc",
    version,
    about = "Reactive auction-based task allocation simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a preset (S1..S5) or a TOML scenario file and export its metrics.
    Run {
        /// Preset name or path to a config file.
        scenario: String,
        #[command(flatten)]
        overrides: Overrides,
        /// Output directory for queues.csv, waits.csv, events.jsonl and summary.json.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Solve a standalone assignment instance file.
    Solve { instance: PathBuf },
    /// List the built-in scenarios.
    Presets,
    /// Check a preset or config file without running it.
    Validate {
        scenario: String,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TauModeArg {
    ElapsedTime,
    TotalCount,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PenaltyModeArg {
    Urgency,
    Additive,
}

#[derive(Debug, Args)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    horizon: Option<u64>,
    /// Queue-length weight.
    #[arg(long)]
    q: Option<f64>,
    /// Waiting-time weight.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, value_enum)]
    tau_mode: Option<TauModeArg>,
    #[arg(long, value_enum)]
    penalty_mode: Option<PenaltyModeArg>,
    /// Agents allowed per station at once, applied to every station.
    #[arg(long)]
    m: Option<usize>,
}

impl Overrides {
    fn apply(&self, config: &mut ScenarioConfig) {
        if let Some(seed) = self.seed {
            config.rng_seed = seed;
        }
        if let Some(h) = self.horizon {
            config.horizon = h;
        }
        if let Some(q) = self.q {
            config.penalty.q = q;
        }
        if let Some(tau) = self.tau {
            config.penalty.tau = tau;
        }
        if let Some(mode) = self.tau_mode {
            config.penalty.tau_mode = match mode {
                TauModeArg::ElapsedTime => TauMode::ElapsedTime,
                TauModeArg::TotalCount => TauMode::TotalCount,
            };
        }
        if let Some(mode) = self.penalty_mode {
            config.penalty.mode = match mode {
                PenaltyModeArg::Urgency => PenaltyMode::Urgency,
                PenaltyModeArg::Additive => PenaltyMode::Additive,
            };
        }
        if let Some(m) = self.m {
            for s in &mut config.stations {
                s.capacity_m = m;
            }
        }
    }
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Runtime(m) => m,
        }
    }
}

/// Parses `argv` (program name first), executes, and returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.code()
        }
    }
}

fn load_scenario(name: &str, overrides: &Overrides) -> Result<ScenarioConfig, Failure> {
    let mut config = match preset(name) {
        Some(c) => c,
        None => {
            let path = Path::new(name);
            if !path.exists() {
                let known: Vec<String> = scenario_presets().into_keys().collect();
                return Err(Failure::Usage(format!(
                    "{name:?} is neither a preset ({}) nor an existing file",
                    known.join(", ")
                )));
            }
            ScenarioConfig::load(path).map_err(|e| Failure::Usage(e.to_string()))?
        }
    };
    overrides.apply(&mut config);
    config
        .validate()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(config)
}

fn io(e: std::io::Error) -> Failure {
    Failure::Runtime(e.to_string())
}

fn execute(command: Command, out: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::Run {
            scenario,
            overrides,
            out: dir,
        } => {
            let config = load_scenario(&scenario, &overrides)?;
            let trace = run_scenario(&config).map_err(|e| match e {
                SimError::Invariant {
                    tick,
                    message,
                    events,
                } => Failure::Runtime(format!(
                    "invariant violated at tick {tick}: {message} (after {} events)",
                    events.len()
                )),
                other => Failure::Runtime(other.to_string()),
            })?;
            let summary = export(&trace, &dir).map_err(|e| Failure::Runtime(e.to_string()))?;
            let fmt_opt = |v: Option<f64>| v.map_or("-".to_owned(), |x| format!("{x:.1}"));
            writeln!(
                out,
                "{} seed {}: delivered {}/{}, mean wait {}, max wait {}, final queues {:?}, q = {}, tau = {} -> {}",
                config.name,
                config.rng_seed,
                summary.delivered,
                summary.spawned,
                fmt_opt(summary.mean_wait),
                summary.max_wait.map_or("-".to_owned(), |m| m.to_string()),
                summary.final_queues,
                config.penalty.q,
                config.penalty.tau,
                dir.display()
            )
            .map_err(io)?;
        }
        Command::Solve { instance } => {
            let text = std::fs::read_to_string(&instance)
                .map_err(|e| Failure::Usage(format!("{}: {e}", instance.display())))?;
            let problem = Instance::parse(&text)
                .and_then(|i| i.to_problem())
                .map_err(|e| Failure::Usage(format!("{}: {e}", instance.display())))?;
            let assignment = solve(&problem);
            for (agent, task) in &assignment.pairs {
                writeln!(out, "{agent} -> {task}").map_err(io)?;
            }
            writeln!(
                out,
                "assigned {} of {} agents, objective {:.6}, total cost {}",
                assignment.len(),
                problem.agents().len(),
                assignment.objective_units(),
                assignment.total_cost
            )
            .map_err(io)?;
        }
        Command::Presets => {
            for (name, c) in scenario_presets() {
                let initial: Vec<usize> = c.stations.iter().map(|s| s.initial_tasks).collect();
                let arrivals: Vec<f64> = c.stations.iter().map(|s| s.arrival_prob).collect();
                writeln!(
                    out,
                    "{name}: horizon {}, initial {initial:?}, arrivals {arrivals:?}, cap {}, q = {}, tau = {}, m = {}",
                    c.horizon, c.global_task_cap, c.penalty.q, c.penalty.tau, c.stations[0].capacity_m
                )
                .map_err(io)?;
            }
        }
        Command::Validate {
            scenario,
            overrides,
        } => {
            let config = load_scenario(&scenario, &overrides)?;
            writeln!(
                out,
                "ok: {} ({} stations, {} agents, horizon {})",
                if config.name.is_empty() {
                    &scenario
                } else {
                    &config.name
                },
                config.stations.len(),
                config.agents.len(),
                config.horizon
            )
            .map_err(io)?;
        }
    }
    Ok(())
}
