//! Runs a built-in experiment grid at reduced size and writes its tables.
//!
//! cargo run --release --example experiment_grid -- [E1..E5] [trials] [waypoints] [out.json|out.csv]

use rdw_arena::harness::{export_results, run_experiment, summary, ExperimentConfig};

fn main() -> rdw_arena::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: &str| args.get(i).cloned().unwrap_or_else(|| default.to_string());
    let config = ExperimentConfig::by_name(&arg(0, "E5"))?
        .with_trials(arg(1, "10").parse().expect("trial count"))
        .with_waypoints(arg(2, "50").parse().expect("waypoint count"));
    let table = run_experiment(&config, None)?;
    print!("{}", summary(&table));
    let failed = table.cells.iter().filter(|c| !c.is_ok()).count();
    if failed > 0 {
        println!("{failed} cells failed");
    }
    if let Some(out) = args.get(3) {
        // The extension picks the format.
        export_results(&table, out)?;
        println!("wrote {out}");
    }
    Ok(())
}
