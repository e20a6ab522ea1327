//! Cross-module invariants over random inputs.

use std::f64::consts::{FRAC_PI_2, PI};

use proptest::prelude::*;

use rdw_arena::env::{build_preset, PhysicalSpace, Preset, SteeringKind};
use rdw_arena::geometry::{visibility_fan, wrap_angle, Disc, Point2};
use rdw_arena::harness::mann_whitney_u;
use rdw_arena::locomotion::{apply_reset, step_user, SimClock, UserState};
use rdw_arena::marl::{compute_advantages, PolicyController, PolicyMode, PolicyParams, TdStep};
use rdw_arena::params::SimParams;
use rdw_arena::reset::{
    GreedyMrc, Peer, ResetContext, ResetKind, ResetPolicy, ResetToCenter, ResetToGradient, UniformRandom,
};
use rdw_arena::reward::area_ratio;
use rdw_arena::rng::{stream, streams};
use rdw_arena::steering::steering_gains;

fn preset() -> impl Strategy<Value = Preset> {
    prop::sample::select(Preset::ALL.to_vec())
}

fn steering() -> impl Strategy<Value = SteeringKind> {
    prop::sample::select(SteeringKind::ALL.to_vec())
}

/// A free point drawn deterministically from `seed`, or `None` if the
/// layout leaves no room near the sampled spots.
fn free_point(space: &PhysicalSpace, seed: u64) -> Option<Point2> {
    use rand::Rng;
    let mut rng = stream(seed, &[]);
    let (w, h) = (space.width(), space.height());
    (0..1000)
        .map(|_| Point2::new(rng.random_range(-w / 2.0..w / 2.0), rng.random_range(-h / 2.0..h / 2.0)))
        .find(|p| space.contains_free(*p) && space.clearance(*p) > 0.05)
}

fn user(index: usize, pos: Point2, heading: f64) -> UserState {
    UserState {
        index,
        phys_pos: pos,
        phys_heading: heading,
        virt_pos: Point2::new(3.0 * index as f64, -1.0),
        virt_heading: -heading,
        dist_since_reset: 2.5,
        waypoint: Point2::new(3.0 * index as f64 + 4.0, 2.0),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn every_controller_stays_in_the_half_plane(
        preset in preset(),
        size in 4.0..16.0f64,
        seed in any::<u64>(),
        h0 in -PI..PI,
        h1 in -PI..PI,
        theta_n in -PI..PI,
        boundary in any::<bool>(),
    ) {
        let space = build_preset(preset, size, size).unwrap();
        let (Some(p0), Some(p1)) = (free_point(&space, seed), free_point(&space, seed ^ 0x9e37)) else {
            return Ok(());
        };
        prop_assume!(p0.distance(p1) > 0.2);
        let users = [user(0, p0, h0), user(1, p1, h1)];
        let peers = [Peer { index: 1, pos: p1 }];
        let kind = if boundary {
            ResetKind::Boundary { theta_n }
        } else {
            ResetKind::user_reset(h0, 1)
        };
        let params = SimParams::default();
        let ctx = ResetContext { space: &space, params: &params, users: &users, peers: &peers, index: 0, kind };
        let policy = PolicyParams::new(PolicyMode::Ctde, 2, 1, 8, &mut stream(seed, &[streams::INIT])).unwrap();
        let mut controllers: Vec<Box<dyn ResetPolicy + '_>> = vec![
            Box::new(ResetToCenter),
            Box::new(ResetToGradient),
            Box::new(GreedyMrc::default()),
            Box::new(UniformRandom::new(stream(seed, &[streams::POLICY]))),
            Box::new(PolicyController::exploring(&policy, 2.0, stream(seed, &[streams::POLICY]), false)),
        ];
        for c in &mut controllers {
            let theta = c.direction(&ctx).unwrap();
            prop_assert!(theta.is_finite());
            // Angular distance to the base, measured with atan2 rather than wrap_angle.
            let (s, co) = (theta - kind.base()).sin_cos();
            prop_assert!(s.atan2(co).abs() <= FRAC_PI_2 + 1e-9, "{} chose {theta}", c.name());
        }
    }

    #[test]
    fn reset_only_turns_the_physical_body(pos_x in -5.0..5.0f64, pos_y in -5.0..5.0f64, h in -PI..PI, theta in -10.0..10.0f64) {
        let u = user(0, Point2::new(pos_x, pos_y), h);
        let r = apply_reset(&u, theta);
        prop_assert_eq!(r.virt_pos, u.virt_pos);
        prop_assert_eq!(r.virt_heading, u.virt_heading);
        prop_assert_eq!(r.phys_pos, u.phys_pos);
        prop_assert_eq!(r.waypoint, u.waypoint);
        prop_assert_eq!(r.dist_since_reset, 0.0);
        prop_assert!(wrap_angle(r.phys_heading - theta).abs() < 1e-12);
    }

    #[test]
    fn steering_gains_respect_thresholds(
        preset in preset(),
        kind in steering(),
        size in 4.0..16.0f64,
        seed in any::<u64>(),
        heading in -PI..PI,
        peer_count in 0usize..4,
    ) {
        let space = build_preset(preset, size, size).unwrap();
        let Some(p) = free_point(&space, seed) else { return Ok(()) };
        let peers: Vec<Point2> = (0..peer_count).filter_map(|k| free_point(&space, seed.wrapping_add(k as u64 + 1))).collect();
        let u = user(0, p, heading);
        let params = SimParams::default();
        let g = steering_gains(kind, &space, &u, &peers, &params);
        prop_assert!((0.86..=1.26).contains(&g.translation), "{g:?}");
        prop_assert!((0.67..=1.24).contains(&g.rotation), "{g:?}");
        prop_assert!(g.curvature_sign == 0 || g.curvature_radius >= 7.5, "{g:?}");
        let step = step_user(&space, &u, &g, &SimClock { frame: 0 }, &params).unwrap();
        if step.phys_translation > 1e-9 {
            let ratio = step.virt_translation / step.phys_translation;
            prop_assert!((0.86 - 1e-9..=1.26 + 1e-9).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn mann_whitney_is_symmetric_and_bounded(
        a in prop::collection::vec(0u8..20, 1..40),
        b in prop::collection::vec(0u8..20, 1..40),
    ) {
        let a: Vec<f64> = a.into_iter().map(f64::from).collect();
        let b: Vec<f64> = b.into_iter().map(f64::from).collect();
        let (u_ab, p_ab) = mann_whitney_u(&a, &b).unwrap();
        let (u_ba, p_ba) = mann_whitney_u(&b, &a).unwrap();
        prop_assert!((0.0..=1.0).contains(&p_ab));
        prop_assert!((p_ab - p_ba).abs() < 1e-12);
        prop_assert!((u_ab + u_ba - (a.len() * b.len()) as f64).abs() < 1e-9);
    }

    #[test]
    fn area_ratio_is_a_fraction(
        preset in preset(),
        size in 4.0..16.0f64,
        seed in any::<u64>(),
        theta in -20.0..20.0f64,
        half in 0.001..PI,
        k in 8usize..400,
    ) {
        let space = build_preset(preset, size, size).unwrap();
        let Some(o) = free_point(&space, seed) else { return Ok(()) };
        let blockers: Vec<Disc> = free_point(&space, !seed)
            .filter(|c| c.distance(o) > 0.3)
            .map(|c| Disc::new(c, 0.3))
            .into_iter()
            .collect();
        let fan = visibility_fan(&space, &blockers, o, k).unwrap();
        let r = area_ratio(&fan, theta, half).unwrap();
        prop_assert!((0.0..=1.0).contains(&r), "{r}");
    }

    #[test]
    fn zero_lambda_advantage_is_the_td_error(
        raw in prop::collection::vec((-2.0..2.0f64, -5.0..5.0f64, -5.0..5.0f64, any::<bool>()), 1..30),
        gamma in 0.0..1.0f64,
    ) {
        let steps: Vec<TdStep> = raw
            .iter()
            .map(|&(reward, value, next_value, done)| TdStep { reward, value, next_value, done })
            .collect();
        let adv = compute_advantages(&steps, gamma, 0.0);
        for (a, s) in adv.iter().zip(&steps) {
            let delta = s.reward + if s.done { 0.0 } else { gamma * s.next_value } - s.value;
            prop_assert!((a - delta).abs() < 1e-12);
        }
    }
}
