//! The uniform agent interface, the rule-based roster and the blueprint agent.

mod blueprint;
mod rules;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::abstraction::AbstractionError;
use crate::engine::{Action, EngineError, PlayerView, Seat};
use crate::gametree::GameError;

pub use blueprint::{make_blueprint_agent, BlueprintAgent};
pub use rules::{
    hand_equity, holds_nuts, make_rule_agent, FickleAgent, RuleAgent, RuleConfig, Sizing, StrongRuleAgent, Style,
    StyleConfig, ROSTER,
};

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error("{agent} does not support {capability}")]
    Unsupported { agent: String, capability: &'static str },
    #[error("unknown agent {name:?}; available: {}", .roster.join(", "))]
    UnknownAgent { name: String, roster: Vec<String> },
    #[error("blueprint has no strategy for information set {0}")]
    MissingKey(String),
    #[error("invalid agent config: {0}")]
    Config(String),
    /// A remote participant timed out, disconnected or broke the protocol.
    #[error("remote agent {agent}: {message}")]
    Remote { agent: String, message: String },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Abstraction(#[from] AbstractionError),
}

/// A distribution over concrete actions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub actions: Vec<(Action, f64)>,
}

impl Policy {
    pub fn pure(action: Action) -> Policy {
        Policy {
            actions: vec![(action, 1.0)],
        }
    }

    /// Builds a policy from weighted actions, merging duplicates and dropping zero weights.
    pub fn from_weights(weights: impl IntoIterator<Item = (Action, f64)>) -> Policy {
        let mut actions: Vec<(Action, f64)> = Vec::new();
        for (a, w) in weights {
            if w <= 0.0 {
                continue;
            }
            match actions.iter_mut().find(|(b, _)| *b == a) {
                Some(entry) => entry.1 += w,
                None => actions.push((a, w)),
            }
        }
        let total: f64 = actions.iter().map(|(_, w)| w).sum();
        for entry in &mut actions {
            entry.1 /= total;
        }
        Policy { actions }
    }

    pub fn prob(&self, action: Action) -> f64 {
        self.actions.iter().filter(|(a, _)| *a == action).map(|(_, p)| p).sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Action {
        let mut u: f64 = rng.gen();
        for &(a, p) in &self.actions {
            if u < p {
                return a;
            }
            u -= p;
        }
        self.actions.last().expect("policy has at least one action").0
    }
}

/// Anything that can sit at a table: one `act` per decision.
pub trait Agent: Send {
    fn name(&self) -> &str;

    /// Called before every hand with the seat this agent plays.
    fn reset(&mut self, _hand_id: u64, _seat: Seat) {}

    fn act(&mut self, view: &PlayerView) -> Result<Action, AgentError>;

    /// The exact distribution `act` samples from. Black-box agents return `Unsupported`.
    fn policy(&self, _view: &PlayerView) -> Result<Policy, AgentError> {
        Err(AgentError::Unsupported {
            agent: self.name().to_string(),
            capability: "policy queries",
        })
    }

    fn is_white_box(&self) -> bool {
        false
    }

    /// Whether the agent may fold when checking is free (the engine rejects that by default).
    fn emits_free_fold(&self) -> bool {
        false
    }
}

impl Agent for Box<dyn Agent> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn reset(&mut self, hand_id: u64, seat: Seat) {
        (**self).reset(hand_id, seat)
    }

    fn act(&mut self, view: &PlayerView) -> Result<Action, AgentError> {
        (**self).act(view)
    }

    fn policy(&self, view: &PlayerView) -> Result<Policy, AgentError> {
        (**self).policy(view)
    }

    fn is_white_box(&self) -> bool {
        (**self).is_white_box()
    }

    fn emits_free_fold(&self) -> bool {
        (**self).emits_free_fold()
    }
}
