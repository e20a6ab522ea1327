//! Subtle steering controllers: steer-to-center, artificial potential field
//! and no steering.
//!
//! Both active controllers share one scheduling rule around a steering
//! target direction: apply curvature at the tightest allowed radius
//! whenever the bearing error to the target exceeds the dead band, and
//! pick the rotation gain so that the walker's own turning is amplified
//! physically when it already turns toward the target and damped when it
//! turns away.

use serde::{Deserialize, Serialize};

use crate::env::{PhysicalSpace, SteeringKind};
use crate::geometry::{wrap_angle, Point2};
use crate::locomotion::{GainSet, UserState};
use crate::params::{
    SimParams, SteeringParams, MAX_ROTATION_GAIN, MAX_TRANSLATION_GAIN, MIN_ROTATION_GAIN,
};

/// Repulsive force in the potential field, units of 1/m.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ForceVector {
    pub fx: f64,
    pub fy: f64,
}

impl ForceVector {
    pub fn as_point(self) -> Point2 {
        Point2::new(self.fx, self.fy)
    }

    pub fn magnitude(self) -> f64 {
        self.fx.hypot(self.fy)
    }

    pub fn direction(self) -> f64 {
        self.fy.atan2(self.fx)
    }
}

impl std::ops::Add for ForceVector {
    type Output = ForceVector;
    fn add(self, o: ForceVector) -> ForceVector {
        ForceVector {
            fx: self.fx + o.fx,
            fy: self.fy + o.fy,
        }
    }
}

pub fn ns_gains() -> GainSet {
    GainSet::IDENTITY
}

/// Sign (+1, -1 or 0) of the walker's next virtual turn toward its waypoint.
fn intended_turn(user: &UserState) -> f64 {
    let to_target = user.waypoint - user.virt_pos;
    if to_target.norm() < 1e-9 {
        return 0.0;
    }
    let err = wrap_angle(to_target.angle() - user.virt_heading);
    if err.abs() < 1e-12 {
        0.0
    } else {
        err.signum()
    }
}

/// Gains steering the user's physical heading toward `target` (radians).
pub fn steer_toward(user: &UserState, target: f64, params: &SteeringParams) -> GainSet {
    let beta = wrap_angle(target - user.phys_heading);
    // wrap_angle maps "directly behind" to +π, so ties turn counter-clockwise.
    let sign: i8 = if beta >= 0.0 { 1 } else { -1 };
    let mut gains = if beta.abs() > params.dead_band {
        GainSet::curving(sign, params.curvature_radius)
    } else {
        GainSet::IDENTITY
    };
    let turn = intended_turn(user);
    gains.rotation = if turn == 0.0 {
        1.0
    } else if turn == sign as f64 {
        MIN_ROTATION_GAIN
    } else {
        MAX_ROTATION_GAIN
    };
    gains
}

pub fn s2c_gains(user: &UserState, space: &PhysicalSpace, params: &SteeringParams) -> GainSet {
    let to_center = space.center() - user.phys_pos;
    if to_center.norm() <= params.center_deadzone {
        return GainSet::IDENTITY;
    }
    steer_toward(user, to_center.angle(), params)
}

fn repulsion(from: Point2, at: Point2, coefficient: f64, params: &SteeringParams, fallback: Point2) -> ForceVector {
    let delta = at - from;
    let d = delta.norm();
    let dir = if d > 0.0 { delta * (1.0 / d) } else { fallback };
    let magnitude = coefficient / d.max(params.min_distance);
    ForceVector {
        fx: dir.x * magnitude,
        fy: dir.y * magnitude,
    }
}

/// Sum of 1/d repulsions from every wall and obstacle edge (nearest point
/// on each segment) and from each other user.
pub fn apf_force(
    space: &PhysicalSpace,
    position: Point2,
    peers: &[Point2],
    params: &SteeringParams,
) -> ForceVector {
    let walls = space.edges().iter().fold(ForceVector::default(), |acc, e| {
        let q = e.closest_point(position);
        acc + repulsion(q, position, params.wall_coefficient, params, e.normal_toward(position))
    });
    peers.iter().fold(walls, |acc, &q| {
        acc + repulsion(q, position, params.user_coefficient, params, Point2::ORIGIN)
    })
}

pub fn apf_gains(user: &UserState, force: ForceVector, params: &SteeringParams) -> GainSet {
    if !(force.magnitude() > 1e-12) {
        return ns_gains();
    }
    let mut gains = steer_toward(user, force.direction(), params);
    if Point2::from_angle(user.phys_heading).dot(force.as_point()) < 0.0 {
        // Walking against the field: shorten the physical stride.
        gains.translation = MAX_TRANSLATION_GAIN;
    }
    gains
}

/// Gains for one user under the given algorithm.
pub fn steering_gains(
    kind: SteeringKind,
    space: &PhysicalSpace,
    user: &UserState,
    peers: &[Point2],
    params: &SimParams,
) -> GainSet {
    match kind {
        SteeringKind::Ns => ns_gains(),
        SteeringKind::S2C => s2c_gains(user, space, &params.steering),
        SteeringKind::Apf => {
            let f = apf_force(space, user.phys_pos, peers, &params.steering);
            apf_gains(user, f, &params.steering)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{build_preset, Preset};
    use crate::geometry::Segment;
    use crate::rng::stream;
    use rand::Rng;
    use std::f64::consts::PI;

    fn user_at(p: Point2, heading: f64) -> UserState {
        UserState {
            index: 0,
            phys_pos: p,
            phys_heading: heading,
            virt_pos: Point2::ORIGIN,
            virt_heading: 0.0,
            dist_since_reset: 0.0,
            waypoint: Point2::new(5.0, 0.0),
        }
    }

    #[test]
    fn ns_is_identity() {
        let g = ns_gains();
        assert_eq!((g.translation, g.rotation, g.curvature_sign), (1.0, 1.0, 0));
        assert!(g.validate().is_ok());
    }

    #[test]
    fn s2c_idle_at_center() {
        let s = PhysicalSpace::empty(10.0, 10.0).unwrap();
        let p = SteeringParams::default();
        let g = s2c_gains(&user_at(Point2::new(0.2, 0.1), 1.0), &s, &p);
        assert!(!g.curvature_active());
    }

    #[test]
    fn s2c_facing_away_turns_by_tie_rule() {
        let s = PhysicalSpace::empty(10.0, 10.0).unwrap();
        let p = SteeringParams::default();
        // At (3, 0) facing +x: the center is directly behind.
        let g = s2c_gains(&user_at(Point2::new(3.0, 0.0), 0.0), &s, &p);
        assert_eq!(g.curvature_sign, 1);
        assert_eq!(g.curvature_radius, 7.5);
        // Slightly off the tie, the shorter correction wins.
        let g = s2c_gains(&user_at(Point2::new(3.0, 0.0), 0.1), &s, &p);
        assert_eq!(g.curvature_sign, 1);
        let g = s2c_gains(&user_at(Point2::new(3.0, 0.0), -0.1), &s, &p);
        assert_eq!(g.curvature_sign, -1);
    }

    #[test]
    fn s2c_inside_dead_band_has_no_curvature() {
        let s = PhysicalSpace::empty(10.0, 10.0).unwrap();
        let p = SteeringParams::default();
        let g = s2c_gains(&user_at(Point2::new(3.0, 0.0), PI - 0.1), &s, &p);
        assert!(!g.curvature_active());
    }

    #[test]
    fn s2c_rotation_gain_amplifies_turns_toward_center() {
        let s = PhysicalSpace::empty(10.0, 10.0).unwrap();
        let p = SteeringParams::default();
        // Center lies to the left (β > 0); waypoint also to the left.
        let mut u = user_at(Point2::new(0.0, -3.0), 0.0);
        u.waypoint = Point2::new(0.0, 5.0);
        assert_eq!(s2c_gains(&u, &s, &p).rotation, MIN_ROTATION_GAIN);
        u.waypoint = Point2::new(0.0, -5.0);
        assert_eq!(s2c_gains(&u, &s, &p).rotation, MAX_ROTATION_GAIN);
    }

    #[test]
    fn apf_zero_at_center_of_square() {
        let s = PhysicalSpace::empty(10.0, 10.0).unwrap();
        let f = apf_force(&s, Point2::ORIGIN, &[], &SteeringParams::default());
        assert!(f.magnitude() < 1e-9);
    }

    #[test]
    fn apf_two_users_antiparallel() {
        let s = PhysicalSpace::empty(10.0, 10.0).unwrap();
        let p = SteeringParams::default();
        let a = Point2::new(-1.0, 0.5);
        let b = Point2::new(1.0, -0.5);
        // Symmetric about the center, so the walls cancel pairwise as well.
        let fa = apf_force(&s, a, &[b], &p);
        let fb = apf_force(&s, b, &[a], &p);
        assert!((fa.fx + fb.fx).abs() < 1e-9 && (fa.fy + fb.fy).abs() < 1e-9);
        assert!((fa.magnitude() - fb.magnitude()).abs() < 1e-9);
    }

    /// Field of one long wall at distance `d`, evaluated per segment.
    fn single_wall_force(d: f64) -> f64 {
        let p = SteeringParams::default();
        let wall = Segment::new(Point2::new(-50.0, 0.0), Point2::new(50.0, 0.0));
        let at = Point2::new(0.0, d);
        let q = wall.closest_point(at);
        repulsion(q, at, p.wall_coefficient, &p, wall.normal_toward(at)).magnitude()
    }

    #[test]
    fn single_wall_magnitude_is_inverse_distance() {
        for d in [0.5, 1.0, 2.0, 4.0] {
            assert!((single_wall_force(d) - 1.0 / d).abs() < 1e-9);
        }
        let mags: Vec<f64> = [0.5, 1.0, 2.0, 4.0].iter().map(|&d| single_wall_force(d)).collect();
        assert!(mags.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn apf_clamps_tiny_distances() {
        let p = SteeringParams::default();
        let f = repulsion(Point2::ORIGIN, Point2::new(1e-9, 0.0), 1.0, &p, Point2::ORIGIN);
        assert!((f.magnitude() - 1e6).abs() < 1e-3);
    }

    #[test]
    fn apf_gains_examples() {
        let p = SteeringParams::default();
        let mut u = user_at(Point2::ORIGIN, 0.0);
        u.waypoint = Point2::new(5.0, 0.0);
        let g = apf_gains(&u, ForceVector { fx: 1.0, fy: 0.02 }, &p);
        assert!(!g.curvature_active());
        assert_eq!(g.translation, 1.0);
        let g = apf_gains(&u, ForceVector { fx: -1.0, fy: 0.0 }, &p);
        assert_eq!(g.translation, MAX_TRANSLATION_GAIN);
        assert!(g.curvature_active());
        assert_eq!(apf_gains(&u, ForceVector::default(), &p), GainSet::IDENTITY);
    }

    #[test]
    fn controllers_are_pure() {
        let s = build_preset(Preset::Complex, 10.0, 10.0).unwrap();
        let params = SimParams::default();
        let u = user_at(Point2::new(1.0, 1.0), 0.7);
        let peers = [Point2::new(-2.0, 0.0)];
        for kind in SteeringKind::ALL {
            let a = steering_gains(kind, &s, &u, &peers, &params);
            let b = steering_gains(kind, &s, &u, &peers, &params);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn fuzzed_states_never_exceed_thresholds() {
        let params = SimParams::default();
        let spaces = [
            build_preset(Preset::Complex, 5.0, 5.0).unwrap(),
            build_preset(Preset::Circle, 10.0, 10.0).unwrap(),
        ];
        let mut rng = stream(17, &[]);
        for kind in SteeringKind::ALL {
            let mut n = 0;
            while n < 100_000 {
                let s = &spaces[n % 2];
                let hw = s.width() / 2.0;
                let p = Point2::new(rng.random_range(-hw..hw), rng.random_range(-hw..hw));
                if !s.contains_free(p) {
                    continue;
                }
                let mut u = user_at(p, rng.random_range(-PI..PI));
                u.virt_heading = rng.random_range(-PI..PI);
                u.waypoint = Point2::new(rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0));
                let peer = Point2::new(rng.random_range(-hw..hw), rng.random_range(-hw..hw));
                let g = steering_gains(kind, s, &u, &[peer], &params);
                assert!(g.validate().is_ok(), "{kind}: {g:?}");
                n += 1;
            }
        }
    }
}
