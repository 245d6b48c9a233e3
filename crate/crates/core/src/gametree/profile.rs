use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::GameError;

pub const PROFILE_FORMAT: &str = "holdem-profile";
pub const PROFILE_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfoSetStrategy {
    pub actions: Vec<String>,
    pub probs: Vec<f64>,
}

/// Action distributions keyed by information-set key.
///
/// File format: newline-delimited JSON. The first line is a header
/// `{"format":"holdem-profile","version":1,"game":"<variant>","infosets":<n>}`; each following
/// line is `{"key":"...","actions":[...],"probs":[...]}` in key order. Floats are written in
/// shortest round-trip form, so load(save(p)) == p bit for bit.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StrategyProfile {
    entries: BTreeMap<String, InfoSetStrategy>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    game: String,
    infosets: usize,
}

#[derive(Serialize, Deserialize)]
struct Record {
    key: String,
    actions: Vec<String>,
    probs: Vec<f64>,
}

impl StrategyProfile {
    pub fn insert(&mut self, key: String, actions: Vec<String>, probs: Vec<f64>) {
        self.entries.insert(key, InfoSetStrategy { actions, probs });
    }

    pub fn get(&self, key: &str) -> Option<&InfoSetStrategy> {
        self.entries.get(key)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &InfoSetStrategy)> {
        self.entries.iter()
    }

    /// Checks every row is a distribution (nonnegative, sums to 1 within `tol`).
    pub fn validate(&self, tol: f64) -> Result<(), GameError> {
        for (key, s) in &self.entries {
            let bad = |message: String| GameError::InfoSet {
                key: key.clone(),
                message,
            };
            if s.actions.len() != s.probs.len() || s.probs.is_empty() {
                return Err(bad("action and probability counts differ".into()));
            }
            if s.probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(bad(format!("invalid probabilities {:?}", s.probs)));
            }
            let total: f64 = s.probs.iter().sum();
            if (total - 1.0).abs() > tol {
                return Err(bad(format!("probabilities sum to {total}")));
            }
        }
        Ok(())
    }

    pub fn write_to<W: Write>(&self, game: &str, mut out: W) -> std::io::Result<()> {
        let header = Header {
            format: PROFILE_FORMAT.into(),
            version: PROFILE_VERSION,
            game: game.into(),
            infosets: self.entries.len(),
        };
        writeln!(out, "{}", serde_json::to_string(&header)?)?;
        for (key, s) in &self.entries {
            let rec = Record {
                key: key.clone(),
                actions: s.actions.clone(),
                probs: s.probs.clone(),
            };
            writeln!(out, "{}", serde_json::to_string(&rec)?)?;
        }
        out.flush()
    }

    /// Reads a profile, returning it with the game name from the header.
    pub fn read_from<R: BufRead>(input: R) -> Result<(String, StrategyProfile), GameError> {
        let mut lines = input.lines();
        let header_line = lines
            .next()
            .ok_or_else(|| GameError::Config("empty profile file".into()))?
            .map_err(|e| GameError::Config(e.to_string()))?;
        let header: Header =
            serde_json::from_str(&header_line).map_err(|e| GameError::Config(format!("bad profile header: {e}")))?;
        if header.format != PROFILE_FORMAT || header.version != PROFILE_VERSION {
            return Err(GameError::Config(format!(
                "unsupported profile format {} v{}",
                header.format, header.version
            )));
        }
        let mut profile = StrategyProfile::default();
        for (n, line) in lines.enumerate() {
            let line = line.map_err(|e| GameError::Config(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: Record =
                serde_json::from_str(&line).map_err(|e| GameError::Config(format!("profile line {}: {e}", n + 2)))?;
            profile.insert(rec.key, rec.actions, rec.probs);
        }
        if profile.len() != header.infosets {
            return Err(GameError::Config(format!(
                "profile header promises {} information sets, found {}",
                header.infosets,
                profile.len()
            )));
        }
        Ok((header.game, profile))
    }

    pub fn save(&self, game: &str, path: &std::path::Path) -> std::io::Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_to(game, std::io::BufWriter::new(file))
    }

    pub fn load(path: &std::path::Path) -> Result<(String, StrategyProfile), GameError> {
        let file = std::fs::File::open(path).map_err(|e| GameError::Config(format!("{}: {e}", path.display())))?;
        Self::read_from(std::io::BufReader::new(file))
    }
}
