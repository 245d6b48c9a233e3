use serde::{Deserialize, Serialize};

use super::aivat::{private_deals, reveal_outcomes};
use super::EvalError;
use crate::agents::Agent;
use crate::engine::{GameSpec, HandState, Variant};
use crate::gametree::{abstract_decision, build_tree, Dense, Game, TreeConfig};

/// Reads an agent's behavior strategy off every information set of `game`, querying
/// `seats[s]` for seat `s`. The agents must be white-box and stationary.
pub fn agent_profile(game: &Game, cfg: &TreeConfig, seats: [&dyn Agent; 2]) -> Result<Dense, EvalError> {
    let mut dense = game.uniform();
    let mut filled = vec![false; game.infosets.len()];
    let deals = match &cfg.deals {
        Some(d) => d.clone(),
        None => private_deals(&game.spec),
    };
    for (n, deal) in deals.into_iter().enumerate() {
        let state = HandState::new(game.spec, n as u64, deal)?;
        walk(game, cfg, seats, &state, &mut dense, &mut filled)?;
    }
    Ok(dense)
}

fn walk(
    game: &Game,
    cfg: &TreeConfig,
    seats: [&dyn Agent; 2],
    state: &HandState,
    dense: &mut Dense,
    filled: &mut [bool],
) -> Result<(), EvalError> {
    let Some(seat) = state.to_act() else {
        return Ok(());
    };
    let view = state.view(seat);
    let decision = abstract_decision(cfg, &view)?;
    let id = game
        .infoset_id(&decision.key)
        .ok_or_else(|| EvalError::Invalid(format!("state maps to unknown information set {}", decision.key)))?;
    if !filled[id] {
        let policy = seats[seat].policy(&view)?;
        let probs: Vec<f64> = decision.actions.iter().map(|(_, a)| policy.prob(*a)).collect();
        let mass: f64 = probs.iter().sum();
        if (mass - 1.0).abs() > 1e-9 {
            return Err(EvalError::Invalid(format!(
                "{} puts mass {:.6} outside the actions of {}",
                seats[seat].name(),
                1.0 - mass,
                decision.key
            )));
        }
        dense[id] = probs;
        filled[id] = true;
    }
    for (_, action) in &decision.actions {
        for (_, next) in reveal_outcomes(state, *action, usize::MAX, 0)? {
            walk(game, cfg, seats, &next, dense, filled)?;
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exploitability {
    /// Best-response value of each seat against the agent in the other seat, in chips.
    pub best_response: [f64; 2],
    /// Mean best-response gain in chips.
    pub chips: f64,
    pub mbb: f64,
}

/// Exact exploitability of an agent playing both seats of a toy game.
pub fn agent_exploitability(spec: &GameSpec, agent: &dyn Agent) -> Result<Exploitability, EvalError> {
    if spec.variant == Variant::Hunl {
        return Err(EvalError::Invalid("exact exploitability needs a toy game".into()));
    }
    let cfg = TreeConfig::default();
    let game = build_tree(spec, &cfg)?;
    let dense = agent_profile(&game, &cfg, [agent, agent])?;
    let best_response = game.best_response_values(&dense);
    let chips = game.exploitability(&dense);
    Ok(Exploitability {
        best_response,
        chips,
        mbb: spec.to_mbb(chips),
    })
}

/// Exact expected chips per hand of `a` against `b`, averaged over both seat assignments.
pub fn exact_match_value(spec: &GameSpec, a: &dyn Agent, b: &dyn Agent) -> Result<f64, EvalError> {
    if spec.variant == Variant::Hunl {
        return Err(EvalError::Invalid("exact match values need a toy game".into()));
    }
    let cfg = TreeConfig::default();
    let game = build_tree(spec, &cfg)?;
    let a_first = game.expected_value(&agent_profile(&game, &cfg, [a, b])?)[0];
    let a_second = game.expected_value(&agent_profile(&game, &cfg, [b, a])?)[1];
    Ok((a_first + a_second) / 2.0)
}
