use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::RlError;
use crate::evaluation::{elo_update, EloTable, Outcome};

/// The learning agent plus its K highest-rated historical versions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfPlayPool {
    k: usize,
    main: String,
    /// Surviving historical versions, best first.
    historical: Vec<String>,
    elo: EloTable,
    seed: u64,
    round: u64,
}

/// Result of one scheduling round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    /// Opponent of the main agent for each upcoming game.
    pub opponents: Vec<String>,
    pub evicted: Vec<String>,
    /// The pool was empty and received a snapshot of the main agent.
    pub initialized: bool,
}

impl SelfPlayPool {
    pub fn new(k: usize, main: &str, seed: u64) -> Result<SelfPlayPool, RlError> {
        if k == 0 {
            return Err(RlError::Config("K must be at least 1".into()));
        }
        let mut elo = EloTable::default();
        elo.ratings.insert(main.to_string(), elo.initial);
        Ok(SelfPlayPool {
            k,
            main: main.to_string(),
            historical: Vec::new(),
            elo,
            seed,
            round: 0,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn main(&self) -> &str {
        &self.main
    }

    pub fn historical(&self) -> &[String] {
        &self.historical
    }

    /// Members including the main agent; never more than K+1.
    pub fn size(&self) -> usize {
        self.historical.len() + 1
    }

    pub fn rating(&self, name: &str) -> f64 {
        self.elo.rating(name)
    }

    pub fn elo(&self) -> &EloTable {
        &self.elo
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    /// Freezes the main agent as a historical version rated like the main agent, then keeps
    /// the top K. Returns the evicted names, which may include the new snapshot.
    pub fn add_snapshot(&mut self, name: &str) -> Result<Vec<String>, RlError> {
        if name == self.main || self.historical.iter().any(|h| h == name) {
            return Err(RlError::Input(format!("version {name} is already in the pool")));
        }
        self.elo.ratings.insert(name.to_string(), self.elo.rating(&self.main));
        self.historical.push(name.to_string());
        Ok(self.retain_top_k())
    }

    fn retain_top_k(&mut self) -> Vec<String> {
        let elo = &self.elo;
        self.historical
            .sort_by(|a, b| elo.rating(b).total_cmp(&elo.rating(a)).then_with(|| a.cmp(b)));
        let evicted = self.historical.split_off(self.historical.len().min(self.k));
        for name in &evicted {
            self.elo.ratings.remove(name);
        }
        evicted
    }

    fn is_member(&self, name: &str) -> bool {
        name == self.main || self.historical.iter().any(|h| h == name)
    }
}

/// Applies `results` to the ratings, keeps the K best historical versions and draws `games`
/// opponents for the main agent uniformly from the survivors. An empty pool is first seeded
/// with a snapshot of the main agent.
pub fn kbest_schedule(pool: &mut SelfPlayPool, results: &[Outcome], games: usize) -> Result<Schedule, RlError> {
    let initialized = pool.historical.is_empty();
    if initialized {
        let name = format!("{}@{}", pool.main, pool.round);
        pool.add_snapshot(&name)?;
    }
    for o in results {
        if !pool.is_member(&o.a) || !pool.is_member(&o.b) || o.a == o.b {
            return Err(RlError::Input(format!(
                "result {} vs {} is not between pool members",
                o.a, o.b
            )));
        }
        if [o.wins, o.losses, o.draws].iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(RlError::Input(format!("result {} vs {} has invalid counts", o.a, o.b)));
        }
    }
    elo_update(&mut pool.elo, results);
    let evicted = pool.retain_top_k();
    let mut rng = ChaCha8Rng::seed_from_u64(pool.seed ^ pool.round.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let opponents = (0..games)
        .map(|_| pool.historical[rng.gen_range(0..pool.historical.len())].clone())
        .collect();
    pool.round += 1;
    Ok(Schedule {
        opponents,
        evicted,
        initialized,
    })
}
