use serde::{Deserialize, Serialize};

use super::card::Card;
use super::{Chips, EngineError, Seat};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Hunl,
    Kuhn,
    Leduc,
}

impl std::str::FromStr for Variant {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hunl" | "holdem" | "nlhe" => Ok(Variant::Hunl),
            "kuhn" => Ok(Variant::Kuhn),
            "leduc" => Ok(Variant::Leduc),
            other => Err(EngineError::InvalidInput(format!(
                "unknown game {other:?} (expected hunl, kuhn or leduc)"
            ))),
        }
    }
}

/// Rules of one game. HUNL uses the standard competition stacks and blinds; Kuhn and Leduc
/// are fixed-limit verification games measured in antes (`big_blind` = 1 is the reporting
/// unit there, no blinds are posted).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameSpec {
    pub variant: Variant,
    pub stack: Chips,
    pub big_blind: Chips,
    pub small_blind: Chips,
    pub min_bet: Chips,
    pub ante: Chips,
    /// Folding when checking is free is dominated; only agents that emit it need this.
    #[serde(default)]
    pub allow_free_fold: bool,
}

impl GameSpec {
    pub fn hunl() -> GameSpec {
        GameSpec {
            variant: Variant::Hunl,
            stack: 20_000,
            big_blind: 100,
            small_blind: 50,
            min_bet: 100,
            ante: 0,
            allow_free_fold: false,
        }
    }

    /// Kuhn poker: J Q K, ante 1, one bet of 1. The stack equals the largest possible
    /// commitment so that the payoff range is exactly `2 * stack`.
    pub fn kuhn() -> GameSpec {
        GameSpec {
            variant: Variant::Kuhn,
            stack: 2,
            big_blind: 1,
            small_blind: 0,
            min_bet: 1,
            ante: 1,
            allow_free_fold: false,
        }
    }

    /// Leduc hold'em: two suits of J Q K, ante 1, bets of 2 then 4, at most two raises per
    /// round, one public card.
    pub fn leduc() -> GameSpec {
        GameSpec {
            variant: Variant::Leduc,
            stack: 13,
            big_blind: 1,
            small_blind: 0,
            min_bet: 2,
            ante: 1,
            allow_free_fold: false,
        }
    }

    pub fn for_variant(variant: Variant) -> GameSpec {
        match variant {
            Variant::Hunl => GameSpec::hunl(),
            Variant::Kuhn => GameSpec::kuhn(),
            Variant::Leduc => GameSpec::leduc(),
        }
    }

    pub fn with_free_fold(mut self, allow: bool) -> GameSpec {
        self.allow_free_fold = allow;
        self
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: &str| Err(EngineError::InvalidInput(m.to_string()));
        if self.stack <= 0 || self.big_blind <= 0 {
            return bad("stack and big blind must be positive");
        }
        match self.variant {
            Variant::Hunl => {
                if self.small_blind * 2 != self.big_blind {
                    return bad("small blind must be half the big blind");
                }
                if self.min_bet < self.big_blind {
                    return bad("minimum bet below the big blind");
                }
                if self.stack < self.big_blind {
                    return bad("stack smaller than the big blind");
                }
            }
            Variant::Kuhn | Variant::Leduc => {
                let spec = GameSpec::for_variant(self.variant);
                if (self.stack, self.ante, self.min_bet) != (spec.stack, spec.ante, spec.min_bet) {
                    return bad("toy game parameters are fixed presets");
                }
            }
        }
        Ok(())
    }

    pub fn num_rounds(&self) -> usize {
        match self.variant {
            Variant::Hunl => 4,
            Variant::Kuhn => 1,
            Variant::Leduc => 2,
        }
    }

    pub fn hole_cards(&self) -> usize {
        match self.variant {
            Variant::Hunl => 2,
            Variant::Kuhn | Variant::Leduc => 1,
        }
    }

    /// Number of board cards visible during betting round `street`.
    pub fn board_len(&self, street: usize) -> usize {
        match self.variant {
            Variant::Hunl => [0, 3, 4, 5][street.min(3)],
            Variant::Kuhn => 0,
            Variant::Leduc => [0, 1][street.min(1)],
        }
    }

    pub fn total_board_cards(&self) -> usize {
        self.board_len(self.num_rounds() - 1)
    }

    pub fn deck(&self) -> Vec<Card> {
        match self.variant {
            Variant::Hunl => super::card::full_deck(),
            Variant::Kuhn => (9..12).map(|r| Card::new(r, 3)).collect(),
            Variant::Leduc => (9..12).flat_map(|r| [Card::new(r, 2), Card::new(r, 3)]).collect(),
        }
    }

    pub fn first_to_act(&self, street: usize) -> Seat {
        match (self.variant, street) {
            (Variant::Hunl, 0) => 1,
            _ => 0,
        }
    }

    pub fn posts_blinds(&self) -> bool {
        self.variant == Variant::Hunl
    }

    /// Fixed bet size for limit games, `None` for no-limit.
    pub fn limit_bet(&self, street: usize) -> Option<Chips> {
        match self.variant {
            Variant::Hunl => None,
            Variant::Kuhn => Some(1),
            Variant::Leduc => Some(if street == 0 { 2 } else { 4 }),
        }
    }

    pub fn raise_cap(&self) -> Option<u32> {
        match self.variant {
            Variant::Hunl => None,
            Variant::Kuhn => Some(1),
            Variant::Leduc => Some(2),
        }
    }

    /// Payoff range Δ surfaced for convergence-bound reports.
    pub fn payoff_range(&self) -> Chips {
        2 * self.stack
    }

    pub fn to_mbb(&self, chips: f64) -> f64 {
        chips * 1000.0 / self.big_blind as f64
    }
}
