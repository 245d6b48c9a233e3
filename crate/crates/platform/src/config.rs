use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::PlatformError;

pub const LISTEN_ENV: &str = "HOLDEM_LISTEN";
pub const DATA_DIR_ENV: &str = "HOLDEM_DATA_DIR";

/// What the server does with a well-formed but illegal action.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IllegalActionPolicy {
    /// Answer with an `illegal_action` error carrying the legal actions and wait for another.
    #[default]
    RejectAndRetry,
    /// The offending seat loses the hand.
    Forfeit,
}

/// Server settings. Read from a TOML file; every key is optional.
///
/// ```toml
/// listen = "127.0.0.1:7878"
/// ws_listen = "127.0.0.1:7879"
/// data_dir = "data"
/// decision_timeout_ms = 10000
/// illegal_action = "reject_and_retry"   # or "forfeit"
/// max_strikes = 3
/// resume_grace_ms = 30000
/// capacity = 4
/// default_hands = 1000
/// max_hands = 1000000
/// seed = 0
/// aivat_report = true
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub listen: String,
    /// Websocket gateway address; the gateway is off when unset.
    pub ws_listen: Option<String>,
    /// Hand histories and match reports are written here.
    pub data_dir: PathBuf,
    pub decision_timeout_ms: u64,
    /// Time a new connection has to send its hello.
    pub handshake_timeout_ms: u64,
    pub illegal_action: IllegalActionPolicy,
    /// Malformed messages tolerated before the connection is closed.
    pub max_strikes: u32,
    /// How long a disconnected seat is held for a resume before the match is abandoned.
    pub resume_grace_ms: u64,
    /// Matches played at the same time; later ones wait in arrival order.
    pub capacity: usize,
    pub default_hands: u64,
    pub max_hands: u64,
    /// Base seed; match n is dealt from a seed derived from this and n.
    pub seed: u64,
    /// Write an AIVAT estimate next to the plain report when one seat is a built-in agent.
    pub aivat_report: bool,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            listen: "127.0.0.1:7878".into(),
            ws_listen: None,
            data_dir: PathBuf::from("data"),
            decision_timeout_ms: 10_000,
            handshake_timeout_ms: 10_000,
            illegal_action: IllegalActionPolicy::RejectAndRetry,
            max_strikes: 3,
            resume_grace_ms: 30_000,
            capacity: 4,
            default_hands: 1000,
            max_hands: 1_000_000,
            seed: 0,
            aivat_report: true,
        }
    }
}

impl ServerConfig {
    pub fn from_toml(text: &str) -> Result<ServerConfig, PlatformError> {
        let config: ServerConfig = toml::from_str(text).map_err(|e| PlatformError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads `path` when given, then applies the environment overrides.
    pub fn load(path: Option<&Path>) -> Result<ServerConfig, PlatformError> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| PlatformError::Config(format!("cannot read {}: {e}", p.display())))?;
                ServerConfig::from_toml(&text)?
            }
            None => ServerConfig::default(),
        };
        config.apply_env(|k| std::env::var(k).ok());
        config.validate()?;
        Ok(config)
    }

    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) {
        if let Some(v) = var(LISTEN_ENV).filter(|v| !v.is_empty()) {
            self.listen = v;
        }
        if let Some(v) = var(DATA_DIR_ENV).filter(|v| !v.is_empty()) {
            self.data_dir = PathBuf::from(v);
        }
    }

    pub fn validate(&self) -> Result<(), PlatformError> {
        if self.capacity == 0 {
            return Err(PlatformError::Config("capacity must be at least 1".into()));
        }
        if self.max_strikes == 0 {
            return Err(PlatformError::Config("max_strikes must be at least 1".into()));
        }
        if self.decision_timeout_ms == 0 || self.handshake_timeout_ms == 0 {
            return Err(PlatformError::Config("timeouts must be positive".into()));
        }
        if self.default_hands == 0 || self.default_hands > self.max_hands {
            return Err(PlatformError::Config(format!(
                "default_hands {} must lie in 1..={}",
                self.default_hands, self.max_hands
            )));
        }
        Ok(())
    }

    pub fn decision_timeout(&self) -> Duration {
        Duration::from_millis(self.decision_timeout_ms)
    }

    pub fn handshake_timeout(&self) -> Duration {
        Duration::from_millis(self.handshake_timeout_ms)
    }

    pub fn resume_grace(&self) -> Duration {
        Duration::from_millis(self.resume_grace_ms)
    }
}
