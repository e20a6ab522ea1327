//! Reset detection and reset-direction controllers.
//!
//! A reset fires when a user's proposed step would bring them within one
//! body radius of a wall or obstacle edge while moving toward it (boundary
//! reset), or within two radii of another user while closing in (user
//! reset). The new physical heading is restricted to the closed half-plane
//! centered on a base direction: the edge normal pointing back into free
//! space for boundary resets, the opposite of the user's heading for user
//! resets.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::PhysicalSpace;
use crate::error::Result;
use crate::geometry::{ray_distance, visibility_fan, wrap_angle, Disc, Point2};
use crate::locomotion::UserState;
use crate::marl::{action_to_direction, GlobalState, PolicyParams};
use crate::params::{ResetParams, SimParams};
use crate::reward::{area_ratio, RewardBreakdown};
use crate::rng::SimRng;
use crate::steering::apf_force;

/// Slack for admissibility checks on wrapped angles.
pub const ANGLE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ResetKind {
    Boundary { theta_n: f64 },
    User { theta_u: f64, other: usize },
}

impl ResetKind {
    /// Center of the admissible half-plane.
    pub fn base(&self) -> f64 {
        match *self {
            ResetKind::Boundary { theta_n } => theta_n,
            ResetKind::User { theta_u, .. } => theta_u,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ResetKind::Boundary { .. } => "boundary",
            ResetKind::User { .. } => "user",
        }
    }

    pub fn user_reset(heading: f64, other: usize) -> Self {
        ResetKind::User {
            theta_u: wrap_angle(heading + PI),
            other,
        }
    }
}

/// Closed interval `[base - π/2, base + π/2]`, not wrapped.
pub fn admissible_range(kind: &ResetKind) -> (f64, f64) {
    let b = kind.base();
    (b - FRAC_PI_2, b + FRAC_PI_2)
}

/// Signed offset of `theta` from the base direction, in `(-π, π]`.
pub fn offset_from_base(kind: &ResetKind, theta: f64) -> f64 {
    wrap_angle(theta - kind.base())
}

pub fn is_admissible(kind: &ResetKind, theta: f64) -> bool {
    theta.is_finite() && offset_from_base(kind, theta).abs() <= FRAC_PI_2 + ANGLE_TOLERANCE
}

/// Nearest admissible direction to `theta`.
pub fn clamp_to_range(kind: &ResetKind, theta: f64) -> f64 {
    let off = offset_from_base(kind, theta).clamp(-FRAC_PI_2, FRAC_PI_2);
    wrap_angle(kind.base() + off)
}

/// Another user as seen by the reset detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peer {
    pub index: usize,
    pub pos: Point2,
}

/// Checks a proposed physical position against walls, obstacles and peers.
pub fn detect_reset(
    space: &PhysicalSpace,
    params: &ResetParams,
    user: &UserState,
    proposed: Point2,
    peers: &[Peer],
) -> Option<ResetKind> {
    let from = user.phys_pos;
    let mut hit: Option<(f64, usize)> = None;
    for (k, e) in space.edges().iter().enumerate() {
        let d_new = e.distance(proposed);
        if d_new < params.user_radius && d_new < e.distance(from) {
            if hit.is_none_or(|(d, _)| d_new < d) {
                hit = Some((d_new, k));
            }
        }
    }
    if let Some((_, k)) = hit {
        let n = space.edges()[k].normal_toward(from);
        return Some(ResetKind::Boundary { theta_n: n.angle() });
    }
    peers
        .iter()
        .filter_map(|p| {
            let d_new = p.pos.distance(proposed);
            (d_new < params.user_separation && d_new < p.pos.distance(from)).then_some((d_new, p.index))
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, other)| ResetKind::user_reset(user.phys_heading, other))
}

/// Everything a direction controller may look at.
#[derive(Debug, Clone, Copy)]
pub struct ResetContext<'a> {
    pub space: &'a PhysicalSpace,
    pub params: &'a SimParams,
    /// All users, including ones that finished their path.
    pub users: &'a [UserState],
    /// Other users still walking, used for blocking and repulsion.
    pub peers: &'a [Peer],
    pub index: usize,
    pub kind: ResetKind,
}

impl ResetContext<'_> {
    pub fn user(&self) -> &UserState {
        &self.users[self.index]
    }

    pub fn peer_positions(&self) -> Vec<Point2> {
        self.peers.iter().map(|p| p.pos).collect()
    }

    pub fn blockers(&self) -> Vec<Disc> {
        self.peers
            .iter()
            .map(|p| Disc::new(p.pos, self.params.reset.user_radius))
            .collect()
    }
}

/// A reset-direction controller.
pub trait ResetPolicy {
    fn name(&self) -> &str;

    /// Chooses the new physical heading; must lie in the admissible range.
    fn direction(&mut self, ctx: &ResetContext<'_>) -> Result<f64>;
}

/// Turn toward the room center, falling back to the base direction when an
/// obstacle blocks the way close by.
pub fn r2c_direction(user: &UserState, space: &PhysicalSpace, kind: &ResetKind, params: &ResetParams) -> Result<f64> {
    let to_center = space.center() - user.phys_pos;
    let dist = to_center.norm();
    if dist < 1e-9 {
        return Ok(wrap_angle(kind.base()));
    }
    let theta = to_center.angle();
    let clear = ray_distance(space, &[], user.phys_pos, theta)?;
    if clear < params.r2c_fallback_distance.min(dist) {
        return Ok(wrap_angle(kind.base()));
    }
    Ok(clamp_to_range(kind, theta))
}

/// Turn along the potential-field force.
pub fn r2g_direction(
    user: &UserState,
    space: &PhysicalSpace,
    peers: &[Point2],
    kind: &ResetKind,
    params: &SimParams,
) -> f64 {
    let f = apf_force(space, user.phys_pos, peers, &params.steering);
    if !(f.magnitude() > 1e-12) {
        return wrap_angle(kind.base());
    }
    clamp_to_range(kind, f.direction())
}

/// Candidate directions evenly spaced over the admissible range, ordered by
/// distance from the base direction (base first when `m` is odd).
pub fn candidate_directions(kind: &ResetKind, m: usize) -> Vec<f64> {
    let m = m.max(2);
    let mut offsets: Vec<f64> = (0..m)
        .map(|k| -FRAC_PI_2 + PI * k as f64 / (m - 1) as f64)
        .collect();
    offsets.sort_by(|a, b| a.abs().total_cmp(&b.abs()).then(a.total_cmp(b)));
    offsets.into_iter().map(|o| wrap_angle(kind.base() + o)).collect()
}

/// Evaluates the forward visible-area ratio at `m` candidate directions and
/// returns the best one; ties go to the candidate nearest the base.
pub fn greedy_mrc_direction(
    user: &UserState,
    space: &PhysicalSpace,
    blockers: &[Disc],
    kind: &ResetKind,
    m: usize,
    params: &ResetParams,
) -> Result<f64> {
    let fan = visibility_fan(space, blockers, user.phys_pos, params.fan_samples)?;
    let mut best = (f64::NEG_INFINITY, wrap_angle(kind.base()));
    for theta in candidate_directions(kind, m) {
        let r = area_ratio(&fan, theta, params.cone_half_width)?;
        if r > best.0 + 1e-12 {
            best = (r, theta);
        }
    }
    Ok(best.1)
}

/// Learned controller, deterministic: `θ_a = base + a·π/2` with `a` the
/// actor's output for user `i`.
pub fn policy_mrc_direction(policy: &PolicyParams, state: &GlobalState, kind: &ResetKind, i: usize) -> Result<f64> {
    Ok(action_to_direction(kind, policy.action_mean(state, i)?))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ResetToCenter;

impl ResetPolicy for ResetToCenter {
    fn name(&self) -> &str {
        "R2C"
    }

    fn direction(&mut self, ctx: &ResetContext<'_>) -> Result<f64> {
        r2c_direction(ctx.user(), ctx.space, &ctx.kind, &ctx.params.reset)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ResetToGradient;

impl ResetPolicy for ResetToGradient {
    fn name(&self) -> &str {
        "R2G"
    }

    fn direction(&mut self, ctx: &ResetContext<'_>) -> Result<f64> {
        Ok(r2g_direction(
            ctx.user(),
            ctx.space,
            &ctx.peer_positions(),
            &ctx.kind,
            ctx.params,
        ))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GreedyMrc {
    pub candidates: usize,
}

impl Default for GreedyMrc {
    fn default() -> Self {
        Self {
            candidates: ResetParams::default().greedy_candidates,
        }
    }
}

impl ResetPolicy for GreedyMrc {
    fn name(&self) -> &str {
        "MRC_GREEDY"
    }

    fn direction(&mut self, ctx: &ResetContext<'_>) -> Result<f64> {
        greedy_mrc_direction(
            ctx.user(),
            ctx.space,
            &ctx.blockers(),
            &ctx.kind,
            self.candidates,
            &ctx.params.reset,
        )
    }
}

/// Uniformly random direction in the admissible range; a reference point
/// for learned controllers.
#[derive(Debug, Clone)]
pub struct UniformRandom {
    rng: SimRng,
}

impl UniformRandom {
    pub fn new(rng: SimRng) -> Self {
        Self { rng }
    }
}

impl ResetPolicy for UniformRandom {
    fn name(&self) -> &str {
        "UNIFORM"
    }

    fn direction(&mut self, ctx: &ResetContext<'_>) -> Result<f64> {
        let a: f64 = self.rng.random_range(-1.0..=1.0);
        Ok(wrap_angle(ctx.kind.base() + a * FRAC_PI_2))
    }
}

/// One executed reset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResetEvent {
    pub frame: u64,
    pub user_index: usize,
    pub kind: ResetKind,
    pub theta_a: f64,
    /// The controller's direction was replaced to avoid an immediate
    /// repeat reset.
    pub escalated: bool,
    pub reward: RewardBreakdown,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{build_preset, Preset};

    fn user(p: Point2, heading: f64) -> UserState {
        UserState {
            index: 0,
            phys_pos: p,
            phys_heading: heading,
            virt_pos: Point2::ORIGIN,
            virt_heading: 0.0,
            dist_since_reset: 0.0,
            waypoint: Point2::ORIGIN,
        }
    }

    fn empty() -> PhysicalSpace {
        PhysicalSpace::empty(10.0, 10.0).unwrap()
    }

    #[test]
    fn wall_approach_triggers_boundary_reset() {
        let p = ResetParams::default();
        let u = user(Point2::new(4.8, 0.0), 0.0);
        let k = detect_reset(&empty(), &p, &u, Point2::new(4.85, 0.0), &[]).unwrap();
        match k {
            ResetKind::Boundary { theta_n } => assert!((wrap_angle(theta_n - PI)).abs() < 1e-12),
            _ => panic!("expected boundary reset"),
        }
    }

    #[test]
    fn walking_parallel_to_wall_is_fine() {
        let p = ResetParams::default();
        let u = user(Point2::new(0.0, 4.75), 0.0);
        let proposed = Point2::new(0.05, 4.75);
        assert!(detect_reset(&empty(), &p, &u, proposed, &[]).is_none());
        // Brute-force check: the step does not reduce wall clearance.
        let s = empty();
        assert!(s.clearance(proposed) >= s.clearance(u.phys_pos) - 1e-12);
        // Leaving the wall is fine too.
        let away = Point2::new(0.0, 4.70);
        assert!(detect_reset(&s, &p, &user(Point2::new(0.0, 4.75), -FRAC_PI_2), away, &[]).is_none());
    }

    #[test]
    fn head_on_users_get_opposite_bases() {
        let p = ResetParams::default();
        let a = user(Point2::new(-0.275, 0.0), 0.0);
        let mut b = user(Point2::new(0.275, 0.0), PI);
        b.index = 1;
        let ka = detect_reset(&empty(), &p, &a, Point2::new(-0.25, 0.0), &[Peer { index: 1, pos: b.phys_pos }]).unwrap();
        let kb = detect_reset(&empty(), &p, &b, Point2::new(0.25, 0.0), &[Peer { index: 0, pos: a.phys_pos }]).unwrap();
        let (ResetKind::User { theta_u: ua, other: oa }, ResetKind::User { theta_u: ub, other: ob }) = (ka, kb) else {
            panic!("expected user resets");
        };
        assert_eq!((oa, ob), (1, 0));
        assert!((wrap_angle(ua - ub) - PI).abs() < 1e-12 || (wrap_angle(ua - ub) + PI).abs() < 1e-12);
        assert!((wrap_angle(ua - PI)).abs() < 1e-12);
    }

    #[test]
    fn admissible_range_examples() {
        let (lo, hi) = admissible_range(&ResetKind::Boundary { theta_n: 0.0 });
        assert_eq!((lo, hi), (-FRAC_PI_2, FRAC_PI_2));
        let k = ResetKind::User { theta_u: PI, other: 1 };
        let (lo, hi) = admissible_range(&k);
        assert!((lo - FRAC_PI_2).abs() < 1e-15 && (hi - 3.0 * FRAC_PI_2).abs() < 1e-15);
        assert_eq!((lo + hi) / 2.0, k.base());
        assert!(is_admissible(&k, -PI + 0.1));
        assert!(!is_admissible(&k, 0.1));
    }

    #[test]
    fn clamp_lands_on_nearest_endpoint() {
        let k = ResetKind::Boundary { theta_n: 0.0 };
        assert!((clamp_to_range(&k, 2.0) - FRAC_PI_2).abs() < 1e-15);
        assert!((clamp_to_range(&k, -2.0) + FRAC_PI_2).abs() < 1e-15);
        assert_eq!(clamp_to_range(&k, 0.4), 0.4);
    }

    #[test]
    fn r2c_points_to_center() {
        let p = ResetParams::default();
        let k = ResetKind::Boundary { theta_n: PI };
        let t = r2c_direction(&user(Point2::new(4.7, 0.0), 0.0), &empty(), &k, &p).unwrap();
        assert!((wrap_angle(t - PI)).abs() < 1e-12);
    }

    #[test]
    fn r2c_falls_back_when_center_is_blocked() {
        let p = ResetParams::default();
        let s = build_preset(Preset::Circle, 10.0, 10.0).unwrap();
        let k = ResetKind::Boundary { theta_n: PI };
        let t = r2c_direction(&user(Point2::new(4.7, 0.0), 0.0), &s, &k, &p).unwrap();
        assert!((wrap_angle(t - PI)).abs() < 1e-12);
        // Right next to the disc, the center is blocked within 1 m.
        let k = ResetKind::Boundary { theta_n: 0.3 };
        let t = r2c_direction(&user(Point2::new(1.9, 0.2), 0.0), &s, &k, &p).unwrap();
        assert!((t - 0.3).abs() < 1e-12);
    }

    #[test]
    fn r2g_single_wall_follows_normal() {
        // Near the middle of the east wall the field is dominated by it and
        // the symmetric north/south walls cancel.
        let s = empty();
        let k = ResetKind::Boundary { theta_n: PI };
        let t = r2g_direction(&user(Point2::new(4.7, 0.0), 0.0), &s, &[], &k, &SimParams::default());
        assert!((wrap_angle(t - PI)).abs() < 1e-12);
    }

    #[test]
    fn r2g_corner_bisects_normals() {
        let s = empty();
        let pos = Point2::new(4.7, 4.7);
        let k = ResetKind::Boundary { theta_n: PI };
        let t = r2g_direction(&user(pos, 0.0), &s, &[], &k, &SimParams::default());
        // Two-segment analytic field: each near wall pushes 1/0.3 along its
        // normal; the far walls push 1/9.7 back. The sum is symmetric in x
        // and y so the direction is the diagonal -3π/4.
        let fx: f64 = -1.0 / 0.3 + 1.0 / 9.7;
        let expected = fx.atan2(fx);
        assert!((wrap_angle(t - expected)).abs() < 1e-9);
        assert!((wrap_angle(t + 3.0 * PI / 4.0)).abs() < 1e-9);
    }

    #[test]
    fn greedy_wall_reset_in_square_is_mirror_symmetric() {
        // From a wall midpoint the line of sight grows as 1/cos toward the
        // corners, so the normal-facing cone is a local minimum of the ratio
        // and the optimum comes as a mirrored pair; the tie goes to the
        // smaller offset.
        let p = ResetParams::default();
        let pos = Point2::new(4.7, 0.0);
        let k = ResetKind::Boundary { theta_n: PI };
        let t = greedy_mrc_direction(&user(pos, 0.0), &empty(), &[], &k, 37, &p).unwrap();
        let off = offset_from_base(&k, t);
        assert!(off < 0.0 && is_admissible(&k, t));
        let fan = visibility_fan(&empty(), &[], pos, p.fan_samples).unwrap();
        let r = |theta: f64| area_ratio(&fan, theta, p.cone_half_width).unwrap();
        assert!((r(t) - r(PI - off)).abs() < 1e-9);
        assert!(r(t) > r(PI));
        // Independent quadrature of the exact line of sight agrees on the
        // ordering.
        let los = |th: f64| {
            let d = Point2::from_angle(th);
            let tx = if d.x < 0.0 { (-5.0 - pos.x) / d.x } else { (5.0 - pos.x) / d.x };
            let ty = if d.y < 0.0 { -5.0 / d.y } else { 5.0 / d.y };
            tx.min(ty)
        };
        let cone = |c: f64| {
            let n = 4000;
            let h = 2.0 * p.cone_half_width / n as f64;
            (0..n).map(|i| 0.5 * los(c - p.cone_half_width + (i as f64 + 0.5) * h).powi(2) * h).sum::<f64>()
        };
        assert!(cone(t) > cone(PI));
    }

    #[test]
    fn greedy_avoids_the_disc() {
        let p = ResetParams::default();
        let s = build_preset(Preset::Circle, 10.0, 10.0).unwrap();
        let pos = Point2::new(4.7, 0.0);
        let k = ResetKind::Boundary { theta_n: PI };
        let t = greedy_mrc_direction(&user(pos, 0.0), &s, &[], &k, 37, &p).unwrap();
        let toward_center = ray_distance(&s, &[], pos, PI).unwrap();
        let chosen = ray_distance(&s, &[], pos, t).unwrap();
        assert!(chosen > toward_center);
        // Exhaustive sweep is its own oracle: nothing scores higher.
        let fan = visibility_fan(&s, &[], pos, p.fan_samples).unwrap();
        let best = area_ratio(&fan, t, p.cone_half_width).unwrap();
        for c in candidate_directions(&k, 37) {
            assert!(area_ratio(&fan, c, p.cone_half_width).unwrap() <= best + 1e-12);
        }
    }

    #[test]
    fn candidates_cover_range_in_center_first_order() {
        let k = ResetKind::Boundary { theta_n: 0.5 };
        let c = candidate_directions(&k, 37);
        assert_eq!(c.len(), 37);
        assert!((c[0] - 0.5).abs() < 1e-15);
        assert!(c.iter().all(|&t| is_admissible(&k, t)));
    }

    #[test]
    fn greedy_rotates_with_the_scene() {
        let p = ResetParams::default();
        let s = build_preset(Preset::Complex, 10.0, 10.0).unwrap();
        let pos = Point2::new(-4.6, 1.0);
        let k = ResetKind::Boundary { theta_n: 0.0 };
        let peer = Disc::new(Point2::new(-3.0, -1.0), 0.3);
        let t = greedy_mrc_direction(&user(pos, 0.0), &s, &[peer], &k, 37, &p).unwrap();
        for quarter in 1..4 {
            let phi = quarter as f64 * FRAC_PI_2;
            let sr = s.rotated_obstacles(phi).unwrap();
            let kr = ResetKind::Boundary { theta_n: phi };
            let pr = Disc::new(peer.center.rotated(phi), 0.3);
            let tr = greedy_mrc_direction(&user(pos.rotated(phi), 0.0), &sr, &[pr], &kr, 37, &p).unwrap();
            assert!(
                wrap_angle(tr - t - phi).abs() <= PI / 36.0 + 1e-9,
                "quarter {quarter}: {tr} vs {t}"
            );
        }
    }
}
