use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use rdw_arena::env::{build_preset, Preset, ResetMode, ScenarioConfig, ScenarioFile, SteeringKind};
use rdw_arena::harness::engine::controller_for;
use rdw_arena::harness::export::write_episode_csv;
use rdw_arena::harness::{export_results, read_json, run_experiment, summary, ExperimentConfig, Simulation, THREADS_ENV};
use rdw_arena::locomotion::TrajectoryWriter;
use rdw_arena::marl::trainer::write_curve;
use rdw_arena::marl::{train_mode, Checkpoint, PolicyMode, TrainerConfig};
use rdw_arena::rng::{derive_seed, streams};
use rdw_arena::{Error, Result};

#[derive(Parser)]
#[command(name = "rdw-arena", version, about = "Multi-user redirected-walking simulator and benchmark harness")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario (simulate, train) or grid (evaluate) file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Single worker thread.
    #[arg(long, global = true)]
    deterministic: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write per-trial metrics as CSV.
    Simulate {
        /// Per-frame poses of the first trial.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        /// Checkpoint for the mrc_policy reset mode.
        #[arg(long)]
        policy: Option<PathBuf>,
    },
    /// Train a learned reset controller and save a checkpoint.
    Train {
        /// Overrides the decision-step budget.
        #[arg(long)]
        steps: Option<u64>,
        /// Joint-action actor over the full state.
        #[arg(long)]
        single_agent: bool,
        /// Learning-curve CSV.
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Run an experiment grid and write a result table.
    Evaluate {
        /// Built-in grid (E1 to E5) used when no --config is given.
        #[arg(long, default_value = "E1")]
        experiment: String,
        #[arg(long)]
        waypoints: Option<usize>,
        /// Adds learned-policy cells next to the greedy ones.
        #[arg(long)]
        policy: Option<PathBuf>,
    },
    /// Print the summary of a JSON result table, optionally re-exporting it.
    Report {
        input: PathBuf,
    },
}

/// Train file: a scenario plus an optional `[trainer]` table.
#[derive(Deserialize)]
struct TrainFile {
    #[serde(flatten)]
    scenario: ScenarioFile,
    #[serde(default)]
    trainer: TrainerConfig,
}

fn default_scenario(reset: ResetMode) -> Result<ScenarioConfig> {
    Ok(ScenarioConfig::new(build_preset(Preset::Simple, 10.0, 10.0)?, 2, SteeringKind::Ns, reset))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn simulate(c: &Common, trajectory: Option<&Path>, policy: Option<&Path>) -> Result<()> {
    let mut scenario = match &c.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => default_scenario(ResetMode::R2C)?,
    };
    if let Some(s) = c.seed {
        scenario.seed = s;
    }
    let ckpt = policy.map(Checkpoint::load).transpose()?;
    let params = ckpt.as_ref().map(|k| &k.policy);
    let trials = c.trials.unwrap_or(1).max(1);
    let mut metrics = Vec::with_capacity(trials);
    for t in 0..trials {
        let cfg = scenario.clone().with_seed(derive_seed(scenario.seed, &[streams::TRIAL, t as u64]));
        let mut controller = controller_for(cfg.reset, params, &cfg)?;
        let mut sim = Simulation::new(&cfg)?;
        let mut dump = match (t, trajectory) {
            (0, Some(p)) => Some(TrajectoryWriter::new(create(p)?)?),
            _ => None,
        };
        while !sim.is_finished() {
            if let Some(w) = dump.as_mut() {
                for u in sim.users() {
                    w.record(sim.frame(), u)?;
                }
            }
            sim.step_frame(controller.as_mut())?;
        }
        if let Some(w) = dump {
            w.into_inner().flush()?;
        }
        metrics.push(sim.finish().metrics);
    }
    match &c.out {
        Some(p) => write_episode_csv(&metrics, create(p)?)?,
        None => write_episode_csv(&metrics, std::io::stdout().lock())?,
    }
    Ok(())
}

fn train(c: &Common, steps: Option<u64>, single_agent: bool, curve: Option<&Path>) -> Result<()> {
    let (mut scenario, mut trainer) = match &c.config {
        Some(p) => {
            let file: TrainFile = toml::from_str(&std::fs::read_to_string(p)?)?;
            (file.scenario.into_config()?, file.trainer)
        }
        None => (default_scenario(ResetMode::MrcPolicy)?, TrainerConfig::desk_scale(100_000)),
    };
    scenario.reset = ResetMode::MrcPolicy;
    if let Some(s) = c.seed {
        trainer.seed = s;
    }
    if let Some(n) = steps {
        trainer.max_steps = n;
    }
    let mode = if single_agent { PolicyMode::SingleAgent } else { PolicyMode::Ctde };
    let report = train_mode(&trainer, &scenario, mode)?;
    if let Some(p) = curve {
        write_curve(&report.curve, create(p)?)?;
    }
    let out = c.out.clone().unwrap_or_else(|| PathBuf::from("policy.json"));
    Checkpoint::new(report.params, trainer, &scenario).save(&out)?;
    let last = report.curve.last();
    println!(
        "trained {} for {} decision steps over {} updates; final mean return {:.3}, mean resets {:.2}; saved {}",
        mode.tag(),
        report.steps,
        report.curve.len(),
        last.map_or(0.0, |p| p.mean_return),
        last.map_or(0.0, |p| p.mean_resets),
        out.display()
    );
    Ok(())
}

fn evaluate(c: &Common, experiment: &str, waypoints: Option<usize>, policy: Option<&Path>) -> Result<()> {
    let mut grid = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::by_name(experiment)?,
    };
    if let Some(t) = c.trials {
        grid = grid.with_trials(t);
    }
    if let Some(s) = c.seed {
        grid = grid.with_seed(s);
    }
    if let Some(w) = waypoints {
        grid = grid.with_waypoints(w);
    }
    let ckpt = policy.map(Checkpoint::load).transpose()?;
    if ckpt.is_some() {
        grid = grid.with_policy_cells();
    }
    let table = run_experiment(&grid, ckpt.as_ref().map(|k| &k.policy))?;
    let out = c.out.clone().unwrap_or_else(|| PathBuf::from("results.json"));
    export_results(&table, &out)?;
    print!("{}", summary(&table));
    println!("wrote {}", out.display());
    Ok(())
}

fn report(c: &Common, input: &Path) -> Result<()> {
    let table = read_json(input)?;
    print!("{}", summary(&table));
    if let Some(out) = &c.out {
        export_results(&table, out)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if cli.common.deterministic {
        std::env::set_var(THREADS_ENV, "1");
    }
    let c = &cli.common;
    match &cli.command {
        Command::Simulate { trajectory, policy } => simulate(c, trajectory.as_deref(), policy.as_deref()),
        Command::Train { steps, single_agent, curve } => train(c, *steps, *single_agent, curve.as_deref()),
        Command::Evaluate { experiment, waypoints, policy } => {
            evaluate(c, experiment, *waypoints, policy.as_deref())
        }
        Command::Report { input } => report(c, input),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rdw-arena: {e}");
            if matches!(e, Error::Config(_) | Error::Toml(_)) {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
