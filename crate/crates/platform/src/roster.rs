use std::path::{Path, PathBuf};
use std::sync::Arc;

use holdem_core::abstraction::{BetMenu, BucketMap};
use holdem_core::agents::{make_blueprint_agent, make_rule_agent, Agent, RuleConfig};
use holdem_core::engine::{GameSpec, Variant};
use holdem_core::gametree::{CardAbstraction, StrategyProfile, TreeConfig};
use serde::{Deserialize, Serialize};

use crate::PlatformError;

pub const BLUEPRINT_PREFIX: &str = "blueprint:";

/// Abstraction a profile was solved on, stored next to it as `<profile>.tree.json`.
/// Profiles of the unabstracted toy games need no sidecar.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TreeSidecar {
    pub game: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pot_fractions: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raise_cap: Option<u32>,
    /// Bucket file, relative to the sidecar's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub buckets: Option<PathBuf>,
}

pub fn sidecar_path(profile: &Path) -> PathBuf {
    let mut s = profile.as_os_str().to_owned();
    s.push(".tree.json");
    PathBuf::from(s)
}

impl TreeSidecar {
    pub fn save(&self, profile: &Path) -> Result<(), PlatformError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| PlatformError::Config(e.to_string()))?;
        std::fs::write(sidecar_path(profile), text)?;
        Ok(())
    }

    pub fn load(profile: &Path) -> Result<Option<TreeSidecar>, PlatformError> {
        let path = sidecar_path(profile);
        if !path.exists() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(&path)?;
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| PlatformError::Config(format!("{}: {e}", path.display())))
    }

    pub fn tree_config(&self, base: &Path) -> Result<TreeConfig, PlatformError> {
        let mut cfg = TreeConfig {
            menu: self.pot_fractions.as_deref().map(BetMenu::with_fractions),
            raise_cap: self.raise_cap,
            ..TreeConfig::default()
        };
        if let Some(b) = &self.buckets {
            let path = base.parent().unwrap_or(Path::new(".")).join(b);
            let map = BucketMap::load(&path).map_err(|e| PlatformError::Config(format!("{}: {e}", path.display())))?;
            cfg.cards = Some(Arc::new(map) as Arc<dyn CardAbstraction>);
        }
        Ok(cfg)
    }
}

/// Loads a solved profile and its abstraction. Returns the game it was solved for.
pub fn load_blueprint(path: &Path, seed: u64) -> Result<(GameSpec, Box<dyn Agent>), PlatformError> {
    let (game, profile) =
        StrategyProfile::load(path).map_err(|e| PlatformError::Config(format!("{}: {e}", path.display())))?;
    let variant: Variant = game.parse()?;
    let spec = GameSpec::for_variant(variant);
    let tree = match TreeSidecar::load(path)? {
        Some(side) => side.tree_config(path)?,
        None if variant == Variant::Hunl => {
            return Err(PlatformError::Config(format!(
                "{} is a hold'em profile without its {} abstraction file",
                path.display(),
                sidecar_path(path).display()
            )))
        }
        None => TreeConfig::default(),
    };
    let mut agent =
        make_blueprint_agent(profile, tree, seed).with_name(&format!("{BLUEPRINT_PREFIX}{}", path.display()));
    agent.passive_fallback = true;
    Ok((spec, Box::new(agent)))
}

/// A built-in opponent by roster name or `blueprint:<profile-path>`, checked against `spec`.
pub fn builtin_agent(name: &str, spec: &GameSpec, seed: u64) -> Result<Box<dyn Agent>, PlatformError> {
    if let Some(path) = name.strip_prefix(BLUEPRINT_PREFIX) {
        let (game, agent) = load_blueprint(Path::new(path), seed)?;
        if game.variant != spec.variant {
            return Err(PlatformError::Config(format!(
                "{name} was solved for {:?}, not {:?}",
                game.variant, spec.variant
            )));
        }
        return Ok(agent);
    }
    Ok(make_rule_agent(
        name,
        &RuleConfig {
            seed,
            ..RuleConfig::default()
        },
    )?)
}
