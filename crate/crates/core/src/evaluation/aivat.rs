use std::collections::HashMap;
use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::matches::pair_samples;
use super::{mean_variance, Estimator, EvalError, EvalReport, HandHistoryRecord};
use crate::abstraction::buckets::fnv1a;
use crate::abstraction::equity::{binomial, for_each_subset};
use crate::abstraction::range_equity;
use crate::agents::{Agent, AgentError};
use crate::engine::{format_cards, Action, Card, Deal, EngineError, GameSpec, HandState, Variant};

/// State-value estimate v̂(h) used by the control variates, in chips for seat 0. The
/// evaluator sees every card, so `state` is the full history.
pub trait Baseline {
    fn name(&self) -> &str;

    fn supports(&self, _spec: &GameSpec) -> bool {
        true
    }

    /// `seats` are the agents by seat; `seating` distinguishes the two seat assignments of a
    /// match for baselines that cache per strategy profile.
    fn value(&mut self, state: &HandState, seats: [&dyn Agent; 2], seating: usize) -> Result<f64, EvalError>;

    /// v̂ before the private cards are dealt, enabling the correction at the deal.
    fn expected_root(
        &mut self,
        _spec: &GameSpec,
        _hand_id: u64,
        _seats: [&dyn Agent; 2],
        _seating: usize,
    ) -> Result<Option<f64>, EvalError> {
        Ok(None)
    }
}

/// v̂ ≡ 0: every correction vanishes and the estimate equals the plain one.
pub struct ZeroBaseline;

impl Baseline for ZeroBaseline {
    fn name(&self) -> &str {
        "zero"
    }

    fn value(&mut self, _: &HandState, _: [&dyn Agent; 2], _: usize) -> Result<f64, EvalError> {
        Ok(0.0)
    }
}

/// Exact expected value under both agents' policies, enumerating every future card. Only
/// feasible for the toy games; assumes the policies do not change between hands.
#[derive(Default)]
pub struct ExactTreeBaseline {
    memo: HashMap<(usize, String), f64>,
}

impl ExactTreeBaseline {
    pub fn new() -> ExactTreeBaseline {
        ExactTreeBaseline::default()
    }

    fn eval(&mut self, state: &HandState, seats: [&dyn Agent; 2], seating: usize) -> Result<f64, EvalError> {
        if state.is_terminal() {
            return Ok(state.settle()?.chips_won[0] as f64);
        }
        let key = (seating, state_key(state));
        if let Some(&v) = self.memo.get(&key) {
            return Ok(v);
        }
        let seat = state.to_act().expect("non-terminal");
        let policy = seats[seat].policy(&state.view(seat))?;
        let mut v = 0.0;
        for &(action, p) in &policy.actions {
            for (w, next) in reveal_outcomes(state, action, usize::MAX, 0)? {
                v += p * w * self.eval(&next, seats, seating)?;
            }
        }
        self.memo.insert(key, v);
        Ok(v)
    }
}

impl Baseline for ExactTreeBaseline {
    fn name(&self) -> &str {
        "exact_tree"
    }

    fn supports(&self, spec: &GameSpec) -> bool {
        spec.variant != Variant::Hunl
    }

    fn value(&mut self, state: &HandState, seats: [&dyn Agent; 2], seating: usize) -> Result<f64, EvalError> {
        self.eval(state, seats, seating)
    }

    fn expected_root(
        &mut self,
        spec: &GameSpec,
        hand_id: u64,
        seats: [&dyn Agent; 2],
        seating: usize,
    ) -> Result<Option<f64>, EvalError> {
        let deals = private_deals(spec);
        let mut total = 0.0;
        for deal in &deals {
            total += self.eval(&HandState::new(*spec, hand_id, deal.clone())?, seats, seating)?;
        }
        Ok(Some(total / deals.len() as f64))
    }
}

/// Pot share implied by the current equity minus the chips committed:
/// v̂ = p·c₁ − (1 − p)·c₀ for seat 0 with showdown-equity p against seat 1's actual holding.
pub struct EquityBaseline {
    /// Board completions enumerated (or sampled, above this count) per equity evaluation.
    pub max_boards: usize,
}

impl Default for EquityBaseline {
    fn default() -> Self {
        EquityBaseline { max_boards: 300 }
    }
}

impl Baseline for EquityBaseline {
    fn name(&self) -> &str {
        "equity_heuristic"
    }

    fn value(&mut self, state: &HandState, _: [&dyn Agent; 2], _: usize) -> Result<f64, EvalError> {
        if state.is_terminal() {
            return Ok(state.settle()?.chips_won[0] as f64);
        }
        let spec = state.spec();
        let p = range_equity(
            spec,
            state.private_cards(0),
            state.board(),
            &[(state.private_cards(1).to_vec(), 1.0)],
            self.max_boards,
            fnv1a(&state_key(state)),
        )?;
        let c = [state.contribution(0) as f64, state.contribution(1) as f64];
        Ok(p * c[1] - (1.0 - p) * c[0])
    }
}

/// Cache key of a full history: both holdings, visible board and the betting.
pub(crate) fn state_key(state: &HandState) -> String {
    let mut s = format!(
        "{}|{}|{}|",
        format_cards(state.private_cards(0)),
        format_cards(state.private_cards(1)),
        format_cards(state.board())
    );
    for r in state.history() {
        let _ = match r.action {
            Action::Fold => write!(s, "f"),
            Action::Check => write!(s, "k"),
            Action::Call => write!(s, "c"),
            Action::RaiseTo(x) => write!(s, "r{x}"),
        };
    }
    s
}

/// Every ordered assignment of private cards, with the board filled from the remaining deck.
pub(crate) fn private_deals(spec: &GameSpec) -> Vec<Deal> {
    let deck = spec.deck();
    let h = spec.hole_cards();
    let mut firsts = Vec::new();
    for_each_subset(&deck, h, &mut |a: &[Card]| firsts.push(a.to_vec()));
    let mut out = Vec::new();
    for a in &firsts {
        let rest: Vec<Card> = deck.iter().filter(|c| !a.contains(c)).copied().collect();
        for_each_subset(&rest, h, &mut |b: &[Card]| {
            let board = rest
                .iter()
                .filter(|c| !b.contains(c))
                .take(spec.total_board_cards())
                .copied()
                .collect();
            out.push(Deal {
                hole: [a.clone(), b.to_vec()],
                board,
            });
        });
    }
    out
}

/// States after `action`, weighted over the board cards the action reveals. At most `max`
/// outcomes: larger sets are sampled uniformly with a generator seeded from the history.
pub(crate) fn reveal_outcomes(
    state: &HandState,
    action: Action,
    max: usize,
    seed: u64,
) -> Result<Vec<(f64, HandState)>, EngineError> {
    let next = state.apply(action)?;
    let k = next.board().len() - state.board().len();
    if k == 0 {
        return Ok(vec![(1.0, next)]);
    }
    let pool = state.undealt();
    let hidden = state.unrevealed_board_len();
    let with = |combo: &[Card]| -> Result<HandState, EngineError> {
        let mut cards = combo.to_vec();
        cards.extend(pool.iter().filter(|c| !combo.contains(c)).take(hidden - k));
        state.with_unrevealed_board(&cards)?.apply(action)
    };
    let mut combos: Vec<Vec<Card>> = Vec::new();
    if binomial(pool.len() as u64, k as u64) <= max as u64 {
        for_each_subset(&pool, k, &mut |c: &[Card]| combos.push(c.to_vec()));
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(&state_key(state)) ^ fnv1a(&action.to_string()));
        for _ in 0..max {
            combos.push(sample(&mut rng, pool.len(), k).iter().map(|i| pool[i]).collect());
        }
    }
    let w = 1.0 / combos.len() as f64;
    combos.iter().map(|c| Ok((w, with(c)?))).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct AivatConfig {
    /// Whether to correct at the first and second agent's decisions (when white-box).
    pub known: [bool; 2],
    /// Board reveals enumerated per chance correction before switching to sampling.
    pub max_chance_outcomes: usize,
    pub seed: u64,
}

impl Default for AivatConfig {
    fn default() -> Self {
        AivatConfig {
            known: [true, true],
            max_chance_outcomes: 64,
            seed: 0,
        }
    }
}

pub struct AivatResult {
    pub report: EvalReport,
    /// Corrected per-hand mbb of the first agent, in record order.
    pub corrected_mbb: Vec<f64>,
    pub plain_mbb: Vec<f64>,
}

/// Control-variate estimate over recorded hands. `a` and `b` are the match's first and second
/// agents; they are reset for every record as during play, so stateful agents line up.
pub fn aivat_estimate(
    records: &[HandHistoryRecord],
    a: &mut dyn Agent,
    b: &mut dyn Agent,
    baseline: &mut dyn Baseline,
    cfg: &AivatConfig,
) -> Result<AivatResult, EvalError> {
    let Some(first) = records.first() else {
        return Err(EvalError::Invalid("no hands to evaluate".into()));
    };
    let mut flags = Vec::new();
    let mut fallback = EquityBaseline::default();
    let mut known = cfg.known;
    let baseline: &mut dyn Baseline = if baseline.supports(&first.game) {
        baseline
    } else {
        flags.push(format!(
            "baseline {} unavailable for {:?}; chance-only corrections with {}",
            baseline.name(),
            first.game.variant,
            fallback.name()
        ));
        known = [false, false];
        &mut fallback
    };
    for (i, agent) in [&*a, &*b].into_iter().enumerate() {
        if known[i] && !agent.is_white_box() {
            flags.push(format!(
                "{} is black-box; its decisions are not corrected",
                agent.name()
            ));
            known[i] = false;
        }
    }
    let mut corrected = Vec::with_capacity(records.len());
    let mut plain = Vec::with_capacity(records.len());
    let mut off_policy = 0usize;
    for (index, rec) in records.iter().enumerate() {
        let first_seat = rec.first_seat;
        let chips = rec.replay().map_err(|e| EvalError::History {
            index,
            message: e.to_string(),
        })?;
        let u0 = chips.settle()?.chips_won[0] as f64;
        if first_seat == 0 {
            a.reset(rec.hand_id, 0);
            b.reset(rec.hand_id, 1);
        } else {
            b.reset(rec.hand_id, 0);
            a.reset(rec.hand_id, 1);
        }
        let seats: [&dyn Agent; 2] = if first_seat == 0 { [&*a, &*b] } else { [&*b, &*a] };
        let known_by_seat = if first_seat == 0 { known } else { [known[1], known[0]] };
        let (corr, off) = hand_correction(rec, seats, known_by_seat, baseline, cfg)?;
        off_policy += off;
        let sign = if first_seat == 0 { 1.0 } else { -1.0 };
        corrected.push(rec.game.to_mbb(sign * (u0 + corr)));
        plain.push(rec.game.to_mbb(sign * u0));
    }
    if off_policy > 0 {
        flags.push(format!(
            "{off_policy} observed actions had zero probability under the known policy"
        ));
    }
    let forfeits = records.iter().filter(|r| r.forfeit.is_some()).count();
    if forfeits > 0 {
        flags.push(format!("{forfeits} hands forfeited after protocol violations"));
    }
    let (samples, plain_samples) = match (pair_samples(records, &corrected)?, pair_samples(records, &plain)?) {
        (Some(c), Some(p)) => (c, p),
        _ => (corrected.clone(), plain.clone()),
    };
    let agents = [
        first.agents[first.first_seat].clone(),
        first.agents[1 - first.first_seat].clone(),
    ];
    let mut report = EvalReport::from_samples(agents, Estimator::Aivat, records.len() as u64, &samples);
    let (_, plain_var) = mean_variance(&plain_samples);
    report.variance_reduction = (report.variance > 0.0).then(|| plain_var / report.variance);
    report.flags = flags;
    Ok(AivatResult {
        report,
        corrected_mbb: corrected,
        plain_mbb: plain,
    })
}

/// Sum of the corrections along one hand, in chips for seat 0, and the number of observed
/// actions outside the known policy's support.
fn hand_correction(
    rec: &HandHistoryRecord,
    seats: [&dyn Agent; 2],
    known: [bool; 2],
    baseline: &mut dyn Baseline,
    cfg: &AivatConfig,
) -> Result<(f64, usize), EvalError> {
    let seating = rec.first_seat;
    let mut state = HandState::new(rec.game, rec.hand_id, rec.deal.clone())?;
    let mut corr = 0.0;
    let mut off_policy = 0;
    if let Some(root) = baseline.expected_root(&rec.game, rec.hand_id, seats, seating)? {
        corr += root - baseline.value(&state, seats, seating)?;
    }
    let seed = cfg.seed ^ rec.seed;
    let pre = |state: &HandState, action: Action, baseline: &mut dyn Baseline| -> Result<f64, EvalError> {
        let mut v = 0.0;
        for (w, next) in reveal_outcomes(state, action, cfg.max_chance_outcomes, seed)? {
            v += w * baseline.value(&next, seats, seating)?;
        }
        Ok(v)
    };
    for r in &rec.actions {
        let seat = r.seat;
        let taken = pre(&state, r.action, baseline)?;
        if known[seat] {
            let policy = match seats[seat].policy(&state.view(seat)) {
                Ok(p) => p,
                Err(AgentError::Unsupported { .. }) => {
                    return Err(EvalError::Invalid(format!(
                        "{} cannot answer policy queries",
                        seats[seat].name()
                    )))
                }
                Err(e) => return Err(e.into()),
            };
            if policy.prob(r.action) == 0.0 {
                off_policy += 1;
            }
            let mut expected = 0.0;
            for &(action, p) in &policy.actions {
                expected += p * pre(&state, action, baseline)?;
            }
            corr += expected - taken;
        }
        let next = state.apply(r.action)?;
        if next.board().len() > state.board().len() {
            corr += taken - baseline.value(&next, seats, seating)?;
        }
        state = next;
    }
    Ok((corr, off_policy))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leduc_deals_and_reveals_are_uniform() {
        let spec = GameSpec::leduc();
        let deals = private_deals(&spec);
        assert_eq!(deals.len(), 30);
        let mut s = HandState::new(spec, 0, deals[0].clone()).unwrap();
        s.apply_in_place(Action::Check).unwrap();
        let outs = reveal_outcomes(&s, Action::Check, 64, 0).unwrap();
        assert_eq!(outs.len(), 4);
        assert!(outs
            .iter()
            .all(|(w, n)| (*w - 0.25).abs() < 1e-15 && n.board().len() == 1));
        let sampled = reveal_outcomes(&s, Action::Check, 2, 7).unwrap();
        assert_eq!(sampled.len(), 2);
    }

    #[test]
    fn equity_baseline_is_bounded_by_commitments() {
        let spec = GameSpec::hunl();
        let mut b = EquityBaseline { max_boards: 50 };
        let agents = crate::agents::make_rule_agent("CallAgent", &Default::default()).unwrap();
        for seed in 0..20 {
            let s = HandState::new(spec, 0, Deal::from_seed(&spec, seed)).unwrap();
            let v = b.value(&s, [&*agents, &*agents], 0).unwrap();
            assert!(v.abs() <= (s.contribution(0) + s.contribution(1)) as f64);
        }
    }
}
