//! Baseline vs greedy reset controller in one room, with a Mann-Whitney test.
//!
//! cargo run --release --example compare_resets -- [preset] [size] [steering] [trials] [waypoints]

use std::time::Instant;

use rdw_arena::env::{Preset, ResetMode, SteeringKind};
use rdw_arena::harness::{run_experiment, summary, ExperimentConfig};

fn main() -> rdw_arena::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: &str| args.get(i).cloned().unwrap_or_else(|| default.to_string());
    let preset: Preset = arg(0, "circle").parse()?;
    let size: f64 = arg(1, "10").parse().expect("room size");
    let steering: SteeringKind = arg(2, "ns").parse()?;
    let trials: usize = arg(3, "30").parse().expect("trial count");
    let waypoints: usize = arg(4, "200").parse().expect("waypoint count");

    let config = ExperimentConfig::grid("compare", &[size], &[preset], &[2], &[steering], &[ResetMode::MrcGreedy])
        .with_trials(trials)
        .with_waypoints(waypoints)
        .with_seed(1);
    let start = Instant::now();
    let table = run_experiment(&config, None)?;
    print!("{}", summary(&table));
    println!("elapsed {:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}
