use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Agent, AgentError, Policy};
use crate::engine::{Action, PlayerView};
use crate::gametree::{abstract_decision, realize, StrategyProfile, TreeConfig};

/// Plays a solved abstract profile in the real game.
pub struct BlueprintAgent {
    name: String,
    profile: StrategyProfile,
    tree: TreeConfig,
    rng: ChaCha8Rng,
    /// Check/call instead of failing when an information set is missing from the profile.
    pub passive_fallback: bool,
    free_fold: bool,
}

/// `tree` must be the configuration the profile was solved on (menu, card abstraction and
/// raise cap); its deal list and budget are ignored.
pub fn make_blueprint_agent(profile: StrategyProfile, tree: TreeConfig, seed: u64) -> BlueprintAgent {
    BlueprintAgent {
        name: "BlueprintAgent".into(),
        profile,
        tree,
        rng: ChaCha8Rng::seed_from_u64(seed),
        passive_fallback: false,
        free_fold: false,
    }
}

impl BlueprintAgent {
    pub fn with_name(mut self, name: &str) -> BlueprintAgent {
        self.name = name.to_string();
        self
    }

    /// Marks the profile as solved with free folds allowed, so unfacing `f` labels are playable.
    pub fn with_free_fold(mut self, allow: bool) -> BlueprintAgent {
        self.free_fold = allow;
        self
    }

    pub fn profile(&self) -> &StrategyProfile {
        &self.profile
    }
}

impl Agent for BlueprintAgent {
    fn name(&self) -> &str {
        &self.name
    }

    fn act(&mut self, view: &PlayerView) -> Result<Action, AgentError> {
        let policy = self.policy(view)?;
        Ok(policy.sample(&mut self.rng))
    }

    fn policy(&self, view: &PlayerView) -> Result<Policy, AgentError> {
        let mut shadow_view = view.clone();
        shadow_view.spec = view.spec.with_free_fold(self.free_fold);
        let decision = abstract_decision(&self.tree, &shadow_view)?;
        let Some(strategy) = self.profile.get(&decision.key) else {
            if self.passive_fallback {
                return Ok(Policy::pure(view.legal()?.passive()));
            }
            return Err(AgentError::MissingKey(decision.key));
        };
        let mut weights = Vec::with_capacity(strategy.actions.len());
        for (label, &p) in strategy.actions.iter().zip(&strategy.probs) {
            if p > 0.0 {
                weights.push((realize(self.tree.menu.as_ref(), &decision, label, view)?, p));
            }
        }
        if weights.is_empty() {
            return Err(AgentError::Config(format!(
                "strategy for {} has no positive probability",
                decision.key
            )));
        }
        Ok(Policy::from_weights(weights))
    }

    fn is_white_box(&self) -> bool {
        true
    }

    fn emits_free_fold(&self) -> bool {
        self.free_fold
    }
}
