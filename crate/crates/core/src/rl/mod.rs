//! Value-based reinforcement learning: transitions, experience replay,
//! epsilon-greedy exploration, temporal-difference targets for DQN and Double
//! DQN, target-network updates, and a tabular Q-learning reference.

mod agent;
mod policy;
mod replay;
mod tabular;
mod targets;
mod transition;

pub use agent::{AgentConfig, AgentState, DqnAgent, LearnOutcome, ObsScaler, Preset, TargetUpdate, Variant};
pub use policy::{argmax, select_action, EpsilonSchedule};
pub use replay::{ReplayBuffer, SharedReplay};
pub use tabular::{
    discounted_return, expected_q_sweep, random_mdp, tabular_q_update, value_iteration_oracle,
    QTable, TabularMDP, TabularTransition,
};
pub use targets::{hard_update, q_loss_and_grad, soft_update, td_target_double, td_target_vanilla};
pub use transition::{Batch, Transition};

use crate::nn::NnError;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum RlError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("state error: {0}")]
    State(String),
    #[error("numeric error: {0}")]
    Numeric(String),
}

impl From<NnError> for RlError {
    fn from(e: NnError) -> Self {
        match e {
            NnError::Config(m) => RlError::Config(m),
            NnError::Input(m) => RlError::Input(m),
            NnError::Numeric(m) => RlError::Numeric(m),
        }
    }
}

pub type Result<T, E = RlError> = std::result::Result<T, E>;
