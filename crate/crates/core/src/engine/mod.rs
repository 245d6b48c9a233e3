//! Heads-up poker rules: cards, hand ranking, game presets and the hand state machine.

pub mod card;
pub mod eval;
pub mod spec;
pub mod state;

pub use card::{format_cards, parse_cards, Card, CardSet};
pub use eval::{evaluate, evaluate7, evaluate_set, HandCategory, HandRank};
pub use spec::{GameSpec, Variant};
pub use state::{
    betting_states, new_hand, placeholder_deal, replay, showdown_strength, Action, ActionRecord, Deal, DealSource,
    HandState, LegalActions, PayoffRecord, PlayerView, RaiseRange, Round,
};

pub type Chips = i64;
/// Seat 0 is P1 (big blind), seat 1 is P2 (small blind).
pub type Seat = usize;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("illegal action: {0}")]
    IllegalAction(String),
    #[error("invalid state: {0}")]
    State(String),
}
