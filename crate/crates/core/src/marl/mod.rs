//! Learned reset controller: networks, advantage estimation, training and
//! checkpoints.

pub mod advantage;
pub mod checkpoint;
pub mod nn;
pub mod policy;
pub mod trainer;

pub use advantage::{compute_advantages, lambda_returns, TdStep};
pub use checkpoint::Checkpoint;
pub use nn::{Adam, Mlp, OutputActivation};
pub use policy::{
    action_to_direction, actor_forward, build_state, Decision, GlobalState, Observation, PolicyController,
    PolicyMode, PolicyParams,
};
pub use trainer::{train, train_mode, train_single_agent, CurvePoint, TrainerConfig, TrainingReport};
