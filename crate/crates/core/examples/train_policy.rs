//! Short training run of the learned reset controller, then a head-to-head
//! against uniformly random resets.
//!
//! cargo run --release --example train_policy -- [decision steps] [checkpoint.json]

use rdw_arena::env::{build_preset, Preset, ResetMode, ScenarioConfig, SteeringKind};
use rdw_arena::harness::{mean, Simulation};
use rdw_arena::marl::{train, Checkpoint, PolicyController, TrainerConfig};
use rdw_arena::reset::UniformRandom;
use rdw_arena::rng::{derive_seed, stream, streams};

fn main() -> rdw_arena::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let steps: u64 = args.first().map_or(20_000, |s| s.parse().expect("step count"));
    let scenario = ScenarioConfig::new(build_preset(Preset::Simple, 10.0, 10.0)?, 2, SteeringKind::Ns, ResetMode::MrcPolicy);
    let config = TrainerConfig::desk_scale(steps);
    let report = train(&config, &scenario)?;
    for p in report.curve.iter().step_by((report.curve.len() / 10).max(1)) {
        println!(
            "update {:>3}  steps {:>7}  return {:>7.2}  resets {:>5.1}",
            p.update, p.steps, p.mean_return, p.mean_resets
        );
    }

    let (mut trained, mut uniform) = (Vec::new(), Vec::new());
    for t in 0..20 {
        let trial = scenario.clone().with_waypoints(50).with_seed(derive_seed(5, &[streams::TRIAL, t]));
        let mut a = PolicyController::greedy(&report.params, stream(trial.seed, &[streams::POLICY]));
        trained.push(Simulation::new(&trial)?.run(&mut a)?.metrics.total_resets as f64);
        let mut b = UniformRandom::new(stream(trial.seed, &[streams::POLICY]));
        uniform.push(Simulation::new(&trial)?.run(&mut b)?.metrics.total_resets as f64);
    }
    println!("mean resets over 20 trials: trained {:.1}, uniform {:.1}", mean(&trained), mean(&uniform));

    if let Some(path) = args.get(1) {
        Checkpoint::new(report.params, config, &scenario).save(path)?;
        println!("saved {path}");
    }
    Ok(())
}
