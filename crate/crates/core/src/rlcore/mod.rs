//! Learning primitives that do not depend on a policy representation: state tensors, clipped
//! PPO objectives with their gradients, and the K-Best self-play opponent pool.

mod encoding;
mod losses;
mod pool;

pub use encoding::{
    encode_state, read_tensor, write_tensor, ActionMenu, ActionTensor, CardTensor, EncodedState, SlotFeature,
    StateFeatures, Tensor, ACTION_CHANNELS, ACTION_ROWS, CARD_CHANNELS, MAX_ROUNDS, SLOTS_PER_ROUND,
};
pub use losses::{
    clip, ppo_clip_term, ppo_reference_losses, trinal_clip_policy_grad, trinal_clip_policy_loss, trinal_clip_term,
    trinal_clip_value_grad, trinal_clip_value_loss, value_clip_bounds, ClipConfig, LossInputs,
};
pub use pool::{kbest_schedule, Schedule, SelfPlayPool};

use crate::engine::EngineError;

#[derive(Debug, thiserror::Error)]
pub enum RlError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("tensor format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
