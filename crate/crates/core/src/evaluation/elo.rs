use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub const DEFAULT_K: f64 = 16.0;

/// Expected score of a player rated `ra` against one rated `rb` (logistic, scale 400).
pub fn expected_score(ra: f64, rb: f64) -> f64 {
    1.0 / (1.0 + 10f64.powf((rb - ra) / 400.0))
}

/// Aggregated results of one pairing, from `a`'s side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub a: String,
    pub b: String,
    pub wins: f64,
    pub losses: f64,
    pub draws: f64,
}

impl Outcome {
    /// A single game decided by the sign of `a`'s winnings.
    pub fn from_winnings(a: &str, b: &str, winnings: f64) -> Outcome {
        let (wins, losses, draws) = if winnings > 0.0 {
            (1.0, 0.0, 0.0)
        } else if winnings < 0.0 {
            (0.0, 1.0, 0.0)
        } else {
            (0.0, 0.0, 1.0)
        };
        Outcome {
            a: a.into(),
            b: b.into(),
            wins,
            losses,
            draws,
        }
    }

    pub fn games(&self) -> f64 {
        self.wins + self.losses + self.draws
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EloTable {
    pub ratings: BTreeMap<String, f64>,
    pub k: f64,
    /// Rating given to players on first appearance.
    pub initial: f64,
}

impl Default for EloTable {
    fn default() -> Self {
        EloTable {
            ratings: BTreeMap::new(),
            k: DEFAULT_K,
            initial: 1500.0,
        }
    }
}

impl EloTable {
    pub fn with_k(k: f64) -> EloTable {
        EloTable {
            k,
            ..EloTable::default()
        }
    }

    pub fn rating(&self, name: &str) -> f64 {
        self.ratings.get(name).copied().unwrap_or(self.initial)
    }

    pub fn total(&self) -> f64 {
        self.ratings.values().sum()
    }

    /// Names sorted by rating, best first; ties broken by name.
    pub fn ranking(&self) -> Vec<(String, f64)> {
        let mut v: Vec<(String, f64)> = self.ratings.iter().map(|(n, r)| (n.clone(), *r)).collect();
        v.sort_by(|x, y| y.1.total_cmp(&x.1).then_with(|| x.0.cmp(&y.0)));
        v
    }
}

/// Applies the outcomes in order. Each pairing moves `K·(S − games·E)` points from one side to
/// the other, so the rating total only changes by the initial ratings of newcomers.
pub fn elo_update(table: &mut EloTable, outcomes: &[Outcome]) {
    for o in outcomes {
        let ra = table.rating(&o.a);
        let rb = table.rating(&o.b);
        let delta = table.k * (o.wins + 0.5 * o.draws - o.games() * expected_score(ra, rb));
        table.ratings.insert(o.a.clone(), ra + delta);
        table.ratings.insert(o.b.clone(), rb - delta);
    }
}
