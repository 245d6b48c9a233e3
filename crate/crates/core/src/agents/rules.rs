use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Agent, AgentError, Policy};
use crate::abstraction::equity::{equity, EquityMethod};
use crate::engine::{showdown_strength, Action, Chips, LegalActions, PlayerView, Seat};

/// Every name `make_rule_agent` accepts.
pub const ROSTER: [&str; 12] = [
    "CallAgent",
    "FoldAgent",
    "ManiacAgent",
    "RandomAgent",
    "TimidAgent",
    "CandidAgent",
    "FickleAgent",
    "LooseAggressiveAgent",
    "LoosePassiveAgent",
    "TightPassiveAgent",
    "TightAggressiveAgent",
    "StrongRuleAgent",
];

/// How a styled agent sizes its raises, in fractions of the pot after calling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sizing {
    /// One of these, uniformly.
    Fixed(Vec<f64>),
    /// Interpolated between `min` and `max` as equity goes from the raise threshold to 1.
    Scaled { min: f64, max: f64 },
}

/// Equity thresholds per round (preflop, flop, turn, river; smaller games use the first
/// entries) and aggression parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StyleConfig {
    pub fold_below: [f64; 4],
    pub raise_above: [f64; 4],
    /// Probability of raising once equity clears `raise_above`.
    pub raise_prob: f64,
    /// Probability of raising with equity under `fold_below`.
    pub bluff_prob: f64,
    pub sizing: Sizing,
}

impl StyleConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        for s in 0..4 {
            let (f, r) = (self.fold_below[s], self.raise_above[s]);
            if !unit(f) || !unit(r) || f > r {
                return Err(AgentError::Config(format!(
                    "round {s}: need 0 <= fold_below ({f}) <= raise_above ({r}) <= 1"
                )));
            }
        }
        if !unit(self.raise_prob) || !unit(self.bluff_prob) {
            return Err(AgentError::Config(
                "raise_prob and bluff_prob must lie in [0, 1]".into(),
            ));
        }
        match &self.sizing {
            Sizing::Fixed(v) if v.is_empty() || v.iter().any(|x| *x <= 0.0) => {
                Err(AgentError::Config("fixed sizing needs positive pot fractions".into()))
            }
            Sizing::Scaled { min, max } if *min <= 0.0 || min > max => {
                Err(AgentError::Config("scaled sizing needs 0 < min <= max".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Style {
    Candid,
    LooseAggressive,
    LoosePassive,
    TightPassive,
    TightAggressive,
}

impl Style {
    /// Default thresholds. These are tuning choices, not measured values.
    pub fn config(self) -> StyleConfig {
        match self {
            Style::Candid => StyleConfig {
                fold_below: [0.35; 4],
                raise_above: [0.6; 4],
                raise_prob: 1.0,
                bluff_prob: 0.0,
                sizing: Sizing::Scaled { min: 0.25, max: 1.0 },
            },
            Style::LooseAggressive => StyleConfig {
                fold_below: [0.3, 0.25, 0.25, 0.25],
                raise_above: [0.5; 4],
                raise_prob: 0.85,
                bluff_prob: 0.15,
                sizing: Sizing::Fixed(vec![0.75, 1.0]),
            },
            Style::LoosePassive => StyleConfig {
                fold_below: [0.3, 0.25, 0.25, 0.25],
                raise_above: [0.9; 4],
                raise_prob: 0.3,
                bluff_prob: 0.0,
                sizing: Sizing::Fixed(vec![0.5]),
            },
            Style::TightPassive => StyleConfig {
                fold_below: [0.55, 0.5, 0.5, 0.5],
                raise_above: [0.9; 4],
                raise_prob: 0.3,
                bluff_prob: 0.0,
                sizing: Sizing::Fixed(vec![0.5]),
            },
            Style::TightAggressive => StyleConfig {
                fold_below: [0.5, 0.45, 0.45, 0.45],
                raise_above: [0.6, 0.62, 0.65, 0.7],
                raise_prob: 0.95,
                bluff_prob: 0.08,
                sizing: Sizing::Scaled { min: 0.25, max: 1.0 },
            },
        }
    }

    fn name(self) -> &'static str {
        match self {
            Style::Candid => "CandidAgent",
            Style::LooseAggressive => "LooseAggressiveAgent",
            Style::LoosePassive => "LoosePassiveAgent",
            Style::TightPassive => "TightPassiveAgent",
            Style::TightAggressive => "TightAggressiveAgent",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleConfig {
    pub seed: u64,
    /// Monte Carlo samples when exact equity is too expensive.
    pub equity_samples: usize,
    /// FickleAgent switches style every this many hands.
    pub fickle_period: u64,
    /// Replaces the named style's default thresholds.
    pub style: Option<StyleConfig>,
}

impl Default for RuleConfig {
    fn default() -> Self {
        RuleConfig {
            seed: 0,
            equity_samples: 300,
            fickle_period: 100,
            style: None,
        }
    }
}

fn card_seed(view: &PlayerView) -> u64 {
    view.private
        .iter()
        .chain(&view.board)
        .fold(0x9e37_79b9_7f4a_7c15u64, |h, c| {
            (h ^ c.index() as u64).wrapping_mul(0x0100_0000_01b3)
        })
}

/// Win probability against a random holding; deterministic for given cards.
pub fn hand_equity(view: &PlayerView, samples: usize) -> Result<f64, AgentError> {
    let method = EquityMethod::Auto {
        samples,
        seed: card_seed(view),
    };
    Ok(equity(&view.spec, &view.private, &view.board, method)?.value)
}

/// True when no opponent holding consistent with the visible cards beats ours.
pub fn holds_nuts(view: &PlayerView) -> bool {
    let spec = &view.spec;
    let mine = showdown_strength(spec, &view.private, &view.board);
    let rest: Vec<_> = spec
        .deck()
        .into_iter()
        .filter(|c| !view.private.contains(c) && !view.board.contains(c))
        .collect();
    let h = spec.hole_cards();
    let mut beaten = false;
    let mut opp = Vec::with_capacity(h);
    crate::abstraction::equity::for_each_subset(&rest, h, &mut |o| {
        if beaten {
            return;
        }
        opp.clear();
        opp.extend_from_slice(o);
        if showdown_strength(spec, &opp, &view.board) > mine {
            beaten = true;
        }
    });
    !beaten
}

fn raise_at(legal: &LegalActions, view: &PlayerView, fraction: f64) -> Option<Action> {
    let bet = view.committed[0].max(view.committed[1]);
    let pot = view.total_pot() + view.to_call();
    legal.clamp_raise(bet + (fraction * pot as f64).round() as Chips)
}

fn fold_or_check(legal: &LegalActions, facing: bool) -> Action {
    if facing && legal.fold {
        Action::Fold
    } else {
        legal.passive()
    }
}

fn round_index(view: &PlayerView) -> usize {
    view.street.min(3)
}

/// Decision rule shared by the threshold-driven styles.
pub(crate) fn style_policy(style: &StyleConfig, view: &PlayerView, equity: f64) -> Result<Policy, AgentError> {
    let legal = *view.legal()?;
    let s = round_index(view);
    let facing = view.facing_bet();
    let raises: Vec<Action> = match &style.sizing {
        Sizing::Fixed(fracs) => fracs.iter().filter_map(|&f| raise_at(&legal, view, f)).collect(),
        Sizing::Scaled { min, max } => {
            let lo = style.raise_above[s];
            let t = if lo >= 1.0 {
                1.0
            } else {
                ((equity - lo) / (1.0 - lo)).clamp(0.0, 1.0)
            };
            raise_at(&legal, view, min + t * (max - min)).into_iter().collect()
        }
    };
    let (raise_mass, rest) = if equity >= style.raise_above[s] {
        (style.raise_prob, legal.passive())
    } else if equity >= style.fold_below[s] {
        (0.0, legal.passive())
    } else {
        (style.bluff_prob, fold_or_check(&legal, facing))
    };
    if raises.is_empty() || raise_mass == 0.0 {
        return Ok(Policy::pure(rest));
    }
    let each = raise_mass / raises.len() as f64;
    Ok(Policy::from_weights(
        raises
            .into_iter()
            .map(|a| (a, each))
            .chain(std::iter::once((rest, 1.0 - raise_mass))),
    ))
}

#[derive(Clone, Debug)]
enum Kind {
    Call,
    Fold,
    Maniac,
    Random,
    Timid,
    Styled(StyleConfig),
}

/// A single-rule agent from the roster.
pub struct RuleAgent {
    name: String,
    kind: Kind,
    equity_samples: usize,
    rng: ChaCha8Rng,
}

impl RuleAgent {
    fn new(name: &str, kind: Kind, config: &RuleConfig) -> RuleAgent {
        RuleAgent {
            name: name.to_string(),
            kind,
            equity_samples: config.equity_samples.max(1),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
        }
    }

    pub fn styled(style: Style, config: &RuleConfig) -> Result<RuleAgent, AgentError> {
        let sc = config.style.clone().unwrap_or_else(|| style.config());
        sc.validate()?;
        Ok(RuleAgent::new(style.name(), Kind::Styled(sc), config))
    }
}

impl Agent for RuleAgent {
    fn name(&self) -> &str {
        &self.name
    }

    fn act(&mut self, view: &PlayerView) -> Result<Action, AgentError> {
        let policy = self.policy(view)?;
        Ok(policy.sample(&mut self.rng))
    }

    fn policy(&self, view: &PlayerView) -> Result<Policy, AgentError> {
        let legal = *view.legal()?;
        let facing = view.facing_bet();
        Ok(match &self.kind {
            Kind::Call => Policy::pure(legal.passive()),
            Kind::Fold => Policy::pure(if legal.fold { Action::Fold } else { legal.passive() }),
            Kind::Maniac => {
                let options: Vec<Action> = [0.5, 1.0].iter().filter_map(|&f| raise_at(&legal, view, f)).collect();
                if options.is_empty() {
                    Policy::pure(legal.passive())
                } else {
                    Policy::from_weights(options.into_iter().map(|a| (a, 0.5)))
                }
            }
            Kind::Random => {
                let mut kinds: Vec<Vec<Action>> = Vec::new();
                if legal.fold && facing {
                    kinds.push(vec![Action::Fold]);
                }
                kinds.push(vec![legal.passive()]);
                if let Some(r) = legal.raise {
                    let mut sizes = vec![Action::RaiseTo(r.min_to)];
                    if let Some(p) = raise_at(&legal, view, 1.0) {
                        sizes.push(p);
                    }
                    sizes.push(Action::RaiseTo(r.max_to));
                    sizes.dedup();
                    sizes.sort_by_key(|a| match a {
                        Action::RaiseTo(x) => *x,
                        _ => 0,
                    });
                    sizes.dedup();
                    kinds.push(sizes);
                }
                let share = 1.0 / kinds.len() as f64;
                Policy::from_weights(
                    kinds
                        .iter()
                        .flat_map(|k| k.iter().map(move |&a| (a, share / k.len() as f64))),
                )
            }
            Kind::Timid => {
                if facing {
                    Policy::pure(if holds_nuts(view) {
                        Action::Call
                    } else {
                        fold_or_check(&legal, true)
                    })
                } else {
                    Policy::pure(legal.passive())
                }
            }
            Kind::Styled(style) => style_policy(style, view, hand_equity(view, self.equity_samples)?)?,
        })
    }

    fn is_white_box(&self) -> bool {
        true
    }

    fn emits_free_fold(&self) -> bool {
        matches!(self.kind, Kind::Fold)
    }
}

/// Composite decision table over round, equity bucket, pot odds and opponent aggression.
pub struct StrongRuleAgent {
    equity_samples: usize,
    rng: ChaCha8Rng,
}

impl StrongRuleAgent {
    pub fn new(config: &RuleConfig) -> StrongRuleAgent {
        StrongRuleAgent {
            equity_samples: config.equity_samples.max(1),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
        }
    }

    fn decide(&self, view: &PlayerView, e: f64) -> Result<Policy, AgentError> {
        let legal = *view.legal()?;
        let s = round_index(view);
        let last_round = view.street + 1 == view.spec.num_rounds();
        let aggression = view.opponent_raises_this_round().min(2);
        let facing = view.facing_bet();
        let pot_after_call = view.total_pot() + view.to_call();
        let pot_odds = view.to_call() as f64 / pot_after_call.max(1) as f64;
        let bucket = ((e * 5.0) as usize).min(4);

        const BET_CUT: [f64; 4] = [0.58, 0.6, 0.62, 0.65];
        const RAISE_CUT: [f64; 4] = [0.62, 0.65, 0.7, 0.75];
        const MARGIN: [f64; 3] = [0.0, 0.05, 0.1];
        const SIZE_BY_BUCKET: [f64; 5] = [0.75, 0.5, 0.5, 0.5, 0.75];

        let value_size = |e: f64| {
            if last_round && e >= 0.95 {
                legal.raise.map(|r| Action::RaiseTo(r.max_to))
            } else {
                raise_at(&legal, view, SIZE_BY_BUCKET[bucket])
            }
        };
        let mixed = |a: Option<Action>, p: f64, other: Action| match a {
            Some(a) => Policy::from_weights([(a, p), (other, 1.0 - p)]),
            None => Policy::pure(other),
        };

        if !facing {
            if e >= BET_CUT[s] {
                return Ok(mixed(value_size(e), 0.9, legal.passive()));
            }
            if last_round && e < 0.2 {
                return Ok(mixed(raise_at(&legal, view, 0.75), 0.1, legal.passive()));
            }
            return Ok(Policy::pure(legal.passive()));
        }
        if e >= RAISE_CUT[s] + 0.05 * aggression as f64 {
            return Ok(mixed(value_size(e), 0.9, Action::Call));
        }
        if e >= pot_odds + MARGIN[aggression] {
            return Ok(Policy::pure(Action::Call));
        }
        Ok(Policy::pure(fold_or_check(&legal, true)))
    }
}

impl Agent for StrongRuleAgent {
    fn name(&self) -> &str {
        "StrongRuleAgent"
    }

    fn act(&mut self, view: &PlayerView) -> Result<Action, AgentError> {
        let policy = self.policy(view)?;
        Ok(policy.sample(&mut self.rng))
    }

    fn policy(&self, view: &PlayerView) -> Result<Policy, AgentError> {
        self.decide(view, hand_equity(view, self.equity_samples)?)
    }

    fn is_white_box(&self) -> bool {
        true
    }
}

/// Plays one roster style and switches to a different, randomly chosen one every `period`
/// hands.
pub struct FickleAgent {
    candidates: Vec<Box<dyn Agent>>,
    current: usize,
    period: u64,
    hands: u64,
    rng: ChaCha8Rng,
}

impl FickleAgent {
    pub fn new(config: &RuleConfig) -> Result<FickleAgent, AgentError> {
        if config.fickle_period == 0 {
            return Err(AgentError::Config("fickle_period must be at least 1".into()));
        }
        let inner = RuleConfig {
            style: None,
            ..config.clone()
        };
        let mut candidates: Vec<Box<dyn Agent>> = vec![
            Box::new(RuleAgent::new("CallAgent", Kind::Call, &inner)),
            Box::new(RuleAgent::new("ManiacAgent", Kind::Maniac, &inner)),
            Box::new(RuleAgent::new("RandomAgent", Kind::Random, &inner)),
            Box::new(RuleAgent::new("TimidAgent", Kind::Timid, &inner)),
        ];
        for style in [
            Style::Candid,
            Style::LooseAggressive,
            Style::LoosePassive,
            Style::TightPassive,
            Style::TightAggressive,
        ] {
            candidates.push(Box::new(RuleAgent::styled(style, &inner)?));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0xf1c1e);
        let current = rng.gen_range(0..candidates.len());
        Ok(FickleAgent {
            candidates,
            current,
            period: config.fickle_period,
            hands: 0,
            rng,
        })
    }

    pub fn current_style(&self) -> &str {
        self.candidates[self.current].name()
    }
}

impl Agent for FickleAgent {
    fn name(&self) -> &str {
        "FickleAgent"
    }

    fn reset(&mut self, hand_id: u64, seat: Seat) {
        if self.hands > 0 && self.hands % self.period == 0 {
            let step = self.rng.gen_range(1..self.candidates.len());
            self.current = (self.current + step) % self.candidates.len();
        }
        self.hands += 1;
        self.candidates[self.current].reset(hand_id, seat);
    }

    fn act(&mut self, view: &PlayerView) -> Result<Action, AgentError> {
        self.candidates[self.current].act(view)
    }

    fn policy(&self, view: &PlayerView) -> Result<Policy, AgentError> {
        self.candidates[self.current].policy(view)
    }

    fn is_white_box(&self) -> bool {
        true
    }
}

fn normalize_name(name: &str) -> String {
    let lower = name.trim().to_ascii_lowercase().replace(['_', '-', ' '], "");
    lower.strip_suffix("agent").unwrap_or(&lower).to_string()
}

/// Builds any roster agent by name (case-insensitive, "Agent" suffix optional).
pub fn make_rule_agent(name: &str, config: &RuleConfig) -> Result<Box<dyn Agent>, AgentError> {
    let agent: Box<dyn Agent> = match normalize_name(name).as_str() {
        "call" | "alwayscall" => Box::new(RuleAgent::new("CallAgent", Kind::Call, config)),
        "fold" | "alwaysfold" => Box::new(RuleAgent::new("FoldAgent", Kind::Fold, config)),
        "maniac" => Box::new(RuleAgent::new("ManiacAgent", Kind::Maniac, config)),
        "random" => Box::new(RuleAgent::new("RandomAgent", Kind::Random, config)),
        "timid" => Box::new(RuleAgent::new("TimidAgent", Kind::Timid, config)),
        "candid" => Box::new(RuleAgent::styled(Style::Candid, config)?),
        "looseaggressive" => Box::new(RuleAgent::styled(Style::LooseAggressive, config)?),
        "loosepassive" => Box::new(RuleAgent::styled(Style::LoosePassive, config)?),
        "tightpassive" => Box::new(RuleAgent::styled(Style::TightPassive, config)?),
        "tightaggressive" => Box::new(RuleAgent::styled(Style::TightAggressive, config)?),
        "fickle" => Box::new(FickleAgent::new(config)?),
        "strongrule" | "ar" => Box::new(StrongRuleAgent::new(config)),
        _ => {
            return Err(AgentError::UnknownAgent {
                name: name.to_string(),
                roster: ROSTER.iter().map(|s| s.to_string()).collect(),
            })
        }
    };
    Ok(agent)
}
