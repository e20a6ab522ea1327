//! Simulates one episode and writes per-frame physical and virtual poses.
//!
//! cargo run --release --example trajectory -- [scenario.toml] [out.csv]

use std::fs::File;
use std::io::{BufWriter, Write};

use rdw_arena::env::{build_preset, Preset, ResetMode, ScenarioConfig, SteeringKind};
use rdw_arena::harness::{controller_for, Simulation};
use rdw_arena::locomotion::TrajectoryWriter;

fn main() -> rdw_arena::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cfg = match args.first() {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::new(build_preset(Preset::Circle, 8.0, 8.0)?, 2, SteeringKind::S2C, ResetMode::MrcGreedy)
            .with_waypoints(20),
    };
    let out = args.get(1).map_or("trajectory.csv", String::as_str);
    let mut writer = TrajectoryWriter::new(BufWriter::new(File::create(out)?))?;
    let mut controller = controller_for(cfg.reset, None, &cfg)?;
    let mut sim = Simulation::new(&cfg)?;
    while !sim.is_finished() {
        for u in sim.users() {
            writer.record(sim.frame(), u)?;
        }
        sim.step_frame(controller.as_mut())?;
    }
    writer.into_inner().flush()?;
    let episode = sim.finish();
    println!(
        "{} frames, {} resets; poses written to {out}",
        episode.metrics.frames, episode.metrics.total_resets
    );
    for e in episode.events.iter().take(5) {
        println!(
            "  frame {:>5}: user {} {} reset, turned to {:.1} deg",
            e.frame,
            e.user_index,
            e.kind.label(),
            e.theta_a.to_degrees()
        );
    }
    Ok(())
}
