//! One boundary reset decided three ways, with the area each choice keeps.
//!
//! cargo run --release --example greedy_reset

use std::f64::consts::FRAC_PI_2;

use rdw_arena::env::{build_preset, Preset};
use rdw_arena::geometry::{visibility_fan, Point2};
use rdw_arena::locomotion::UserState;
use rdw_arena::params::SimParams;
use rdw_arena::reset::{candidate_directions, GreedyMrc, ResetContext, ResetKind, ResetPolicy, ResetToCenter, ResetToGradient};
use rdw_arena::reward::area_ratio;

fn main() -> rdw_arena::Result<()> {
    let space = build_preset(Preset::Complex, 10.0, 10.0)?;
    let params = SimParams::default();
    // Close to the south wall, walking into it.
    let pos = Point2::new(1.5, -4.75);
    let user = UserState {
        index: 0,
        phys_pos: pos,
        phys_heading: -FRAC_PI_2,
        virt_pos: Point2::new(0.0, 0.0),
        virt_heading: 0.0,
        dist_since_reset: 0.0,
        waypoint: Point2::new(5.0, 0.0),
    };
    let kind = ResetKind::Boundary { theta_n: FRAC_PI_2 };
    let users = [user];
    let ctx = ResetContext {
        space: &space,
        params: &params,
        users: &users,
        peers: &[],
        index: 0,
        kind,
    };
    let fan = visibility_fan(&space, &[], pos, params.reset.fan_samples)?;

    println!("candidate sweep (offset from the wall normal, area share):");
    let mut sweep = candidate_directions(&kind, 13);
    sweep.sort_by(f64::total_cmp);
    for theta in sweep {
        let share = area_ratio(&fan, theta, params.reset.cone_half_width)?;
        println!("  {:>6.1} deg  {:>5.1}%", (theta - FRAC_PI_2).to_degrees(), 100.0 * share);
    }
    let mut controllers: [Box<dyn ResetPolicy>; 3] =
        [Box::new(ResetToCenter), Box::new(ResetToGradient), Box::new(GreedyMrc::default())];
    for c in &mut controllers {
        let theta = c.direction(&ctx)?;
        let share = area_ratio(&fan, theta, params.reset.cone_half_width)?;
        println!("{:<10} turns to {:>6.1} deg, keeping {:.1}% of the visible area ahead", c.name(), theta.to_degrees(), 100.0 * share);
    }
    Ok(())
}
