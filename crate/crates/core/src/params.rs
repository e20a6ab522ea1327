//! Every tunable constant of the simulator in one block.
//!
//! Result files embed a copy of [`SimParams`] so that a table of reset
//! counts can always be traced back to the trigger distances, force law and
//! reward weights that produced it.

use serde::{Deserialize, Serialize};

use crate::reward::RewardWeights;

/// Frame rate of the simulation loop.
pub const FRAMES_PER_SECOND: u32 = 30;

/// Perceptual detection thresholds for redirection gains.
pub const MIN_TRANSLATION_GAIN: f64 = 0.86;
pub const MAX_TRANSLATION_GAIN: f64 = 1.26;
pub const MIN_ROTATION_GAIN: f64 = 0.67;
pub const MAX_ROTATION_GAIN: f64 = 1.24;
pub const MIN_CURVATURE_RADIUS: f64 = 7.5;

/// Walker kinematics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kinematics {
    /// Forward speed in virtual space, m/s.
    pub walk_speed: f64,
    /// Turning speed in virtual space, rad/s.
    pub turn_rate: f64,
    /// Forward motion starts only once the heading error drops below this.
    pub align_gate: f64,
}

impl Default for Kinematics {
    fn default() -> Self {
        Self {
            walk_speed: 1.4,
            turn_rate: std::f64::consts::FRAC_PI_2,
            align_gate: 5f64.to_radians(),
        }
    }
}

/// Random-path law for virtual waypoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaypointLaw {
    pub min_distance: f64,
    pub max_distance: f64,
    /// Relative bearing is drawn uniformly from `[-max_bearing, max_bearing]`.
    pub max_bearing: f64,
    pub max_rejections: usize,
}

impl Default for WaypointLaw {
    fn default() -> Self {
        Self {
            min_distance: 2.0,
            max_distance: 8.0,
            max_bearing: std::f64::consts::FRAC_PI_2,
            max_rejections: 100,
        }
    }
}

/// Steer-to-center and potential-field constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteeringParams {
    /// No curvature while the bearing error is within this band.
    pub dead_band: f64,
    /// Steer-to-center is idle within this radius of the room center.
    pub center_deadzone: f64,
    /// Radius used whenever curvature is active.
    pub curvature_radius: f64,
    /// Coefficient of the 1/d repulsion from each wall or obstacle edge.
    pub wall_coefficient: f64,
    /// Coefficient of the 1/d repulsion from each other user.
    pub user_coefficient: f64,
    /// Distances below this are clamped when evaluating 1/d.
    pub min_distance: f64,
}

impl Default for SteeringParams {
    fn default() -> Self {
        Self {
            dead_band: 10f64.to_radians(),
            center_deadzone: 0.5,
            curvature_radius: MIN_CURVATURE_RADIUS,
            wall_coefficient: 1.0,
            user_coefficient: 1.5,
            min_distance: 1e-6,
        }
    }
}

/// Reset triggers and direction-policy constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResetParams {
    /// Body radius of a user; also the wall-clearance trigger.
    pub user_radius: f64,
    /// Centre-to-centre distance that triggers a user reset.
    pub user_separation: f64,
    /// Reset-to-center falls back to the base direction when an obstacle
    /// sits closer than this along the ray to the center.
    pub r2c_fallback_distance: f64,
    /// Candidate directions evaluated by the greedy controller.
    pub greedy_candidates: usize,
    /// Ray count of visibility fans.
    pub fan_samples: usize,
    /// Half-width of the forward cone of the area reward.
    pub cone_half_width: f64,
}

impl Default for ResetParams {
    fn default() -> Self {
        Self {
            user_radius: 0.3,
            user_separation: 0.6,
            r2c_fallback_distance: 1.0,
            greedy_candidates: 37,
            fan_samples: 360,
            cone_half_width: std::f64::consts::PI / 8.0,
        }
    }
}

/// Spawn placement rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpawnParams {
    pub min_separation: f64,
    pub min_clearance: f64,
    pub max_attempts: usize,
}

impl Default for SpawnParams {
    fn default() -> Self {
        Self {
            min_separation: 1.0,
            min_clearance: 0.5,
            max_attempts: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SimParams {
    pub kinematics: Kinematics,
    pub waypoints: WaypointLaw,
    pub steering: SteeringParams,
    pub reset: ResetParams,
    pub spawn: SpawnParams,
    pub reward: RewardWeights,
}

impl SimParams {
    pub fn dt(&self) -> f64 {
        1.0 / FRAMES_PER_SECOND as f64
    }

    /// Longest virtual translation in one frame.
    pub fn step_length(&self) -> f64 {
        self.kinematics.walk_speed * self.dt()
    }
}
