//! Per-frame user motion.
//!
//! The virtual walk is the independent variable: each frame the simulated
//! walker turns toward its current virtual waypoint and, once roughly
//! aligned, walks forward. Physical motion is derived from the virtual
//! motion by dividing by the redirection gains, and curvature adds a
//! physical heading drift proportional to the distance walked.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{PhysicalSpace, VirtualSpace};
use crate::error::{domain, Result};
use crate::geometry::{wrap_angle, Point2};
use crate::params::{
    SimParams, WaypointLaw, FRAMES_PER_SECOND, MAX_ROTATION_GAIN, MAX_TRANSLATION_GAIN,
    MIN_CURVATURE_RADIUS, MIN_ROTATION_GAIN, MIN_TRANSLATION_GAIN,
};

/// A waypoint counts as reached once the walker is this close.
pub const ARRIVAL_TOLERANCE: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserState {
    pub index: usize,
    pub phys_pos: Point2,
    pub phys_heading: f64,
    pub virt_pos: Point2,
    pub virt_heading: f64,
    /// Virtual distance walked since the last reset.
    pub dist_since_reset: f64,
    /// Current virtual target.
    pub waypoint: Point2,
}

impl UserState {
    pub fn is_finite(&self) -> bool {
        self.phys_pos.is_finite()
            && self.virt_pos.is_finite()
            && self.phys_heading.is_finite()
            && self.virt_heading.is_finite()
            && self.dist_since_reset.is_finite()
    }
}

/// Redirection gains for one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainSet {
    /// Virtual / physical translation.
    pub translation: f64,
    /// Virtual / physical rotation.
    pub rotation: f64,
    /// -1 turns clockwise, +1 counter-clockwise, 0 disables curvature.
    pub curvature_sign: i8,
    /// Radius of the injected physical arc; infinite when curvature is off.
    pub curvature_radius: f64,
}

impl GainSet {
    pub const IDENTITY: GainSet = GainSet {
        translation: 1.0,
        rotation: 1.0,
        curvature_sign: 0,
        curvature_radius: f64::INFINITY,
    };

    pub fn curving(sign: i8, radius: f64) -> Self {
        Self {
            curvature_sign: sign,
            curvature_radius: radius,
            ..Self::IDENTITY
        }
    }

    pub fn curvature_active(&self) -> bool {
        self.curvature_sign != 0 && self.curvature_radius.is_finite()
    }

    /// Checks the perceptual detection thresholds.
    pub fn validate(&self) -> Result<()> {
        let tol = 1e-12;
        if !(MIN_TRANSLATION_GAIN - tol..=MAX_TRANSLATION_GAIN + tol).contains(&self.translation) {
            return Err(domain(format!("translation gain {} out of range", self.translation)));
        }
        if !(MIN_ROTATION_GAIN - tol..=MAX_ROTATION_GAIN + tol).contains(&self.rotation) {
            return Err(domain(format!("rotation gain {} out of range", self.rotation)));
        }
        if !matches!(self.curvature_sign, -1..=1) {
            return Err(domain("curvature sign must be -1, 0 or 1"));
        }
        if self.curvature_sign != 0
            && self.curvature_radius.is_finite()
            && self.curvature_radius < MIN_CURVATURE_RADIUS - tol
        {
            return Err(domain(format!(
                "curvature radius {} below threshold",
                self.curvature_radius
            )));
        }
        Ok(())
    }
}

impl Default for GainSet {
    fn default() -> Self {
        Self::IDENTITY
    }
}

/// Fixed-rate simulation clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SimClock {
    pub frame: u64,
}

impl SimClock {
    pub fn dt(&self) -> f64 {
        1.0 / FRAMES_PER_SECOND as f64
    }

    pub fn seconds(&self) -> f64 {
        self.frame as f64 / FRAMES_PER_SECOND as f64
    }

    pub fn tick(&mut self) {
        self.frame += 1;
    }
}

/// Outcome of advancing one user by one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    /// Proposed state; the engine commits it only when no reset fires.
    pub next: UserState,
    pub virt_translation: f64,
    pub phys_translation: f64,
    pub virt_rotation: f64,
    pub phys_rotation: f64,
    pub reached_waypoint: bool,
    /// The proposed physical position is outside free space.
    pub collision: bool,
}

pub fn step_user(
    space: &PhysicalSpace,
    user: &UserState,
    gains: &GainSet,
    clock: &SimClock,
    params: &SimParams,
) -> Result<Step> {
    gains.validate()?;
    let dt = clock.dt();
    let kin = params.kinematics;
    let to_target = user.waypoint - user.virt_pos;
    let dist = to_target.norm();

    let (virt_rotation, virt_translation) = if dist < ARRIVAL_TOLERANCE {
        (0.0, 0.0)
    } else {
        let error = wrap_angle(to_target.angle() - user.virt_heading);
        let max_turn = kin.turn_rate * dt;
        let rot = error.clamp(-max_turn, max_turn);
        let trans = if (error - rot).abs() < kin.align_gate {
            (kin.walk_speed * dt).min(dist)
        } else {
            0.0
        };
        (rot, trans)
    };

    let mut next = *user;
    next.virt_heading = wrap_angle(user.virt_heading + virt_rotation);
    next.virt_pos = user.virt_pos + Point2::from_angle(next.virt_heading) * virt_translation;
    next.dist_since_reset += virt_translation;

    let phys_rotation = virt_rotation / gains.rotation;
    let phys_translation = virt_translation / gains.translation;
    let heading = user.phys_heading + phys_rotation;
    next.phys_pos = user.phys_pos + Point2::from_angle(heading) * phys_translation;
    let drift = if gains.curvature_active() {
        gains.curvature_sign as f64 * phys_translation / gains.curvature_radius
    } else {
        0.0
    };
    next.phys_heading = wrap_angle(heading + drift);

    let reached_waypoint = next.virt_pos.distance(next.waypoint) < ARRIVAL_TOLERANCE;
    Ok(Step {
        collision: !space.contains_free(next.phys_pos),
        next,
        virt_translation,
        phys_translation,
        virt_rotation,
        phys_rotation,
        reached_waypoint,
    })
}

/// Reorients the user physically to `theta_a`. The virtual pose is kept and
/// the distance accumulator restarts.
pub fn apply_reset(user: &UserState, theta_a: f64) -> UserState {
    UserState {
        phys_heading: wrap_angle(theta_a),
        dist_since_reset: 0.0,
        ..*user
    }
}

/// Draws the next virtual waypoint ahead of the user.
pub fn next_waypoint<R: Rng + ?Sized>(
    user: &UserState,
    vspace: &VirtualSpace,
    rng: &mut R,
    law: &WaypointLaw,
) -> Point2 {
    for _ in 0..law.max_rejections {
        let d = rng.random_range(law.min_distance..=law.max_distance);
        let bearing = rng.random_range(-law.max_bearing..=law.max_bearing);
        let p = user.virt_pos + Point2::from_angle(user.virt_heading + bearing) * d;
        if vspace.contains(p) {
            return p;
        }
    }
    vspace.sample_uniform(rng, 1.0)
}

/// Columnar per-frame trajectory dump.
pub struct TrajectoryWriter<W: Write> {
    out: W,
}

impl<W: Write> TrajectoryWriter<W> {
    pub const HEADER: &'static str =
        "frame,user_index,phys_x,phys_y,phys_heading,virt_x,virt_y,virt_heading";

    pub fn new(mut out: W) -> Result<Self> {
        writeln!(out, "{}", Self::HEADER)?;
        Ok(Self { out })
    }

    pub fn record(&mut self, frame: u64, user: &UserState) -> Result<()> {
        writeln!(
            self.out,
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            frame,
            user.index,
            user.phys_pos.x,
            user.phys_pos.y,
            user.phys_heading,
            user.virt_pos.x,
            user.virt_pos.y,
            user.virt_heading
        )?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}
