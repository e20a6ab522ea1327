//! Reward for a reset decision: a constant penalty, the virtual distance
//! walked until the next reset, and the share of the visible area that lies
//! in a narrow cone around the chosen reset direction.

use serde::{Deserialize, Serialize};

use crate::env::PhysicalSpace;
use crate::error::{domain, Error, Result};
use crate::geometry::{visibility_fan, Disc, Point2, VisibilityFan};
use crate::locomotion::UserState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub reset: f64,
    /// Per metre of virtual walking.
    pub distance: f64,
    pub area: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            reset: 1.0,
            distance: 0.1,
            area: 1.0,
        }
    }
}

impl RewardWeights {
    pub fn scaled(self, k: f64) -> Self {
        Self {
            reset: self.reset * k,
            distance: self.distance * k,
            area: self.area * k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_reset: f64,
    /// Virtual metres walked until the next reset; `None` until realized.
    pub r_dist: Option<f64>,
    pub r_area: f64,
}

impl RewardBreakdown {
    pub fn new(r_area: f64) -> Self {
        Self {
            r_reset: reset_penalty(),
            r_dist: None,
            r_area,
        }
    }

    pub fn with_distance(mut self, d: f64) -> Self {
        self.r_dist = Some(d);
        self
    }
}

pub fn reset_penalty() -> f64 {
    -1.0
}

/// Virtual distance accumulated since the user's previous reset.
pub fn distance_reward(user: &UserState) -> f64 {
    user.dist_since_reset
}

/// Forward-cone share of the total visible area of a fan.
pub fn area_ratio(fan: &VisibilityFan, theta_a: f64, half_width: f64) -> Result<f64> {
    let total = fan.total_area();
    if !(total > 0.0) {
        return Err(domain("visible area is zero"));
    }
    let forward = fan.cone_area(theta_a - half_width, theta_a + half_width)?;
    Ok((forward / total).clamp(0.0, 1.0))
}

/// Builds the visibility fan at `pos` (other users as blocker discs) and
/// returns the forward-cone area ratio for direction `theta_a`.
pub fn area_reward(
    space: &PhysicalSpace,
    blockers: &[Disc],
    pos: Point2,
    theta_a: f64,
    fan_samples: usize,
    half_width: f64,
) -> Result<f64> {
    let fan = visibility_fan(space, blockers, pos, fan_samples)?;
    area_ratio(&fan, theta_a, half_width)
}

pub fn total_reward(weights: &RewardWeights, breakdown: &RewardBreakdown) -> Result<f64> {
    let d = breakdown
        .r_dist
        .ok_or_else(|| Error::Domain("distance reward not yet realized".into()))?;
    Ok(weights.reset * breakdown.r_reset + weights.distance * d + weights.area * breakdown.r_area)
}
