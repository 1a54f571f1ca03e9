//! Soft actor-critic learner that trains a neural precoder.
//!
//! The learning problem is a contextual bandit: a state (the standardized
//! channel estimate) maps to an action (real coordinates of a precoding
//! matrix), which earns an immediate reward (the realized sum rate). The
//! critics regress reward from (state, action); the actor maximizes the
//! minimum critic estimate plus an entropy bonus. There is no bootstrapped
//! next-state target, no discount, and no target networks.
//!
//! Submodules:
//! - [`transform`]: channel-to-state and action-to-precoder mappings plus
//!   input standardization,
//! - [`buffer`]: the FIFO experience ring,
//! - [`learner`]: losses, gradients, temperature tuning, and the 10:1
//!   inference/learning step loop.

pub mod buffer;
pub mod learner;
pub mod transform;

pub use buffer::{Experience, ExperienceBuffer};
pub use learner::{
    actor_loss_and_grad, actor_loss_value, critic_loss_and_grad, critic_loss_value,
    critic_values, evaluate_mean_action, mean_action, sample_action, ActionVector,
    ActorLossBreakdown, EntropyTemperature, InferenceRecord, PolicyMode, SacHyper, SacLearner,
    StepDiagnostics, TemperatureMode,
};
pub use transform::{
    calibrate_standardization, precoder_from_action, random_precoder, state_from_estimate,
    StandardizationStats, Transform,
};
