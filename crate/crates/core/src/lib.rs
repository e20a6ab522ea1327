//! Multi-user redirected-walking arena.
//!
//! A 2D simulator in which several users walk random paths through a large
//! virtual space while confined to a small physical room with obstacles.
//! Per-frame steering controllers (steer-to-center, artificial potential
//! field, no steering) bend their physical paths within perceptual
//! thresholds; when a collision with a wall, obstacle or another user is
//! imminent, a reset controller picks a new physical heading inside the
//! admissible half-plane.
//!
//! Reset controllers:
//! - reset-to-center and reset-to-gradient baselines,
//! - a greedy controller that maximises the forward visible-area ratio,
//! - a learned controller: an actor shared by all users, trained with a
//!   centralized critic over the joint state, plus a single-agent variant
//!   that emits one joint action for all users.
//!
//! The [`harness`] module runs seeded trials over scenario grids, reports
//! reset counts and mean distance between resets, and compares controllers
//! with the Mann-Whitney U test.

pub mod env;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod locomotion;
pub mod marl;
pub mod params;
pub mod reset;
pub mod reward;
pub mod rng;
pub mod steering;

pub use error::{Error, Result};
