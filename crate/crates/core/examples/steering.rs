//! The three steering controllers on the same spawns and paths.
//!
//! cargo run --release --example steering -- [preset] [size] [users] [waypoints]

use rdw_arena::env::{build_preset, Preset, ScenarioConfig, SteeringKind};
use rdw_arena::harness::{controller_for, Simulation};

fn main() -> rdw_arena::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: &str| args.get(i).cloned().unwrap_or_else(|| default.to_string());
    let preset: Preset = arg(0, "simple").parse()?;
    let size: f64 = arg(1, "10").parse().expect("room size");
    let users: usize = arg(2, "3").parse().expect("user count");
    let waypoints: usize = arg(3, "100").parse().expect("waypoint count");

    println!("steering  reset  resets  boundary  user  mean_gt  mean_gr  curved");
    for steering in SteeringKind::ALL {
        let reset = steering.baseline_reset();
        let cfg = ScenarioConfig::new(build_preset(preset, size, size)?, users, steering, reset)
            .with_waypoints(waypoints)
            .with_seed(11);
        let mut controller = controller_for(reset, None, &cfg)?;
        let mut sim = Simulation::new(&cfg)?;
        let (mut n, mut gt, mut gr, mut curved) = (0usize, 0.0, 0.0, 0usize);
        while !sim.is_finished() {
            let report = sim.step_frame(controller.as_mut())?;
            for g in report.gains.iter().flatten() {
                n += 1;
                gt += g.translation;
                gr += g.rotation;
                curved += usize::from(g.curvature_sign != 0);
            }
        }
        let m = sim.finish().metrics;
        println!(
            "{:<8}  {:<5}  {:>6}  {:>8}  {:>4}  {:>7.3}  {:>7.3}  {:>5.1}%",
            steering.name(),
            reset.name(),
            m.total_resets,
            m.boundary_resets,
            m.user_resets,
            gt / n as f64,
            gr / n as f64,
            100.0 * curved as f64 / n as f64
        );
    }
    Ok(())
}
