//! Visible area around a standing user and the share each heading would keep
//! in front of them.
//!
//! cargo run --release --example visibility -- [preset] [size] [x] [y]

use std::f64::consts::PI;

use rdw_arena::env::{build_preset, Preset};
use rdw_arena::geometry::{visibility_fan, Disc, Point2};
use rdw_arena::params::ResetParams;
use rdw_arena::reward::area_ratio;

fn main() -> rdw_arena::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: &str| args.get(i).cloned().unwrap_or_else(|| default.to_string());
    let preset: Preset = arg(0, "four_squares").parse()?;
    let size: f64 = arg(1, "10").parse().expect("room size");
    let origin = Point2::new(arg(2, "0").parse().expect("x"), arg(3, "-1").parse().expect("y"));

    let space = build_preset(preset, size, size)?;
    let params = ResetParams::default();
    // A second user standing two meters to the east.
    let blockers = [Disc::new(origin + Point2::new(2.0, 0.0), params.user_radius)];
    let fan = visibility_fan(&space, &blockers, origin, params.fan_samples)?;
    println!(
        "visible area from ({:.1}, {:.1}): {:.2} m^2 of {:.0} m^2",
        origin.x,
        origin.y,
        fan.total_area(),
        size * size
    );
    for k in 0..16 {
        let theta = -PI + k as f64 * PI / 8.0;
        let share = area_ratio(&fan, theta, params.cone_half_width)?;
        println!("{:>7.1} deg  {:>5.1}%  {}", theta.to_degrees(), 100.0 * share, "#".repeat((share * 200.0) as usize));
    }
    Ok(())
}
