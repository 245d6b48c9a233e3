use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::matches::deal_seed;
use super::{Estimator, EvalError, EvalReport};
use crate::abstraction::equity::for_each_subset;
use crate::abstraction::{range_equity, BetContext};
use crate::agents::{Agent, AgentError};
use crate::engine::{betting_states, Action, Card, Deal, GameSpec, HandState, PlayerView, Seat};

/// Posterior over the opponent's private holdings.
#[derive(Clone, Debug, PartialEq)]
pub struct BeliefRange {
    pub holdings: Vec<Vec<Card>>,
    pub probs: Vec<f64>,
    /// Set when an update saw zero likelihood everywhere and had to fall back to the floor.
    pub floored: bool,
}

const LIKELIHOOD_FLOOR: f64 = 1e-12;

impl BeliefRange {
    /// Uniform over the holdings that do not use a visible card.
    pub fn uniform(spec: &GameSpec, visible: &[Card]) -> BeliefRange {
        let deck: Vec<Card> = spec.deck().into_iter().filter(|c| !visible.contains(c)).collect();
        let mut holdings = Vec::new();
        for_each_subset(&deck, spec.hole_cards(), &mut |h: &[Card]| holdings.push(h.to_vec()));
        let p = 1.0 / holdings.len() as f64;
        BeliefRange {
            probs: vec![p; holdings.len()],
            holdings,
            floored: false,
        }
    }

    /// Bayes update with the probability of the observed action under each holding.
    pub fn update(&mut self, mut likelihood: impl FnMut(&[Card]) -> Result<f64, EvalError>) -> Result<(), EvalError> {
        let mut post = Vec::with_capacity(self.probs.len());
        for (h, &p) in self.holdings.iter().zip(&self.probs) {
            post.push(if p > 0.0 { p * likelihood(h)? } else { 0.0 });
        }
        let total: f64 = post.iter().sum();
        if total > 0.0 {
            self.probs = post.into_iter().map(|x| x / total).collect();
        } else {
            self.floored = true;
            let floor: Vec<f64> = self.probs.iter().map(|p| p * LIKELIHOOD_FLOOR).collect();
            let t: f64 = floor.iter().sum();
            self.probs = floor.into_iter().map(|x| x / t).collect();
        }
        Ok(())
    }

    /// Zeroes holdings that use a newly visible card.
    pub fn remove_conflicts(&mut self, visible: &[Card]) {
        for (h, p) in self.holdings.iter().zip(self.probs.iter_mut()) {
            if h.iter().any(|c| visible.contains(c)) {
                *p = 0.0;
            }
        }
        let total: f64 = self.probs.iter().sum();
        if total > 0.0 {
            for p in &mut self.probs {
                *p /= total;
            }
        }
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn weighted(&self) -> Vec<(Vec<Card>, f64)> {
        self.holdings
            .iter()
            .zip(&self.probs)
            .filter(|(_, &p)| p > 0.0)
            .map(|(h, &p)| (h.clone(), p))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LbrConfig {
    pub hands: u64,
    pub seed: u64,
    /// Raise candidates as fractions of the pot after calling.
    pub pot_fractions: Vec<f64>,
    pub all_in: bool,
    /// Board completions per equity evaluation before switching to sampling.
    pub max_boards: usize,
}

impl Default for LbrConfig {
    fn default() -> Self {
        LbrConfig {
            hands: 10_000,
            seed: 0,
            pot_fractions: vec![1.0],
            all_in: true,
            max_boards: 200,
        }
    }
}

pub struct LbrResult {
    /// LBR's winnings against the target, an estimate of a lower bound on its exploitability.
    pub report: EvalReport,
    pub lower_bound_mbb: f64,
    /// Hands in which a Bayes update hit the likelihood floor.
    pub floored_hands: u64,
}

/// Plays local best response against `target` for `cfg.hands` hands, alternating seats.
pub fn lbr_evaluate(spec: &GameSpec, target: &mut dyn Agent, cfg: &LbrConfig) -> Result<LbrResult, EvalError> {
    if !target.is_white_box() {
        return Err(AgentError::Unsupported {
            agent: target.name().to_string(),
            capability: "policy queries (required by local best response)",
        }
        .into());
    }
    if cfg.hands == 0 {
        return Err(EvalError::Invalid("local best response needs at least one hand".into()));
    }
    let spec = spec.with_free_fold(spec.allow_free_fold || target.emits_free_fold());
    let mut samples = Vec::with_capacity(cfg.hands as usize);
    let mut floored_hands = 0;
    for t in 0..cfg.hands {
        let me: Seat = (t % 2) as Seat;
        let seed = deal_seed(cfg.seed, t);
        let mut state = HandState::new(spec, t, Deal::from_seed(&spec, seed))?;
        target.reset(t, 1 - me);
        let mut belief = BeliefRange::uniform(&spec, state.private_cards(me));
        let mut seen = 0;
        while let Some(seat) = state.to_act() {
            let action = if seat == me {
                let view = state.view(me);
                catch_up(&mut belief, &*target, &view, &mut seen)?;
                best_local_action(&*target, &view, &belief, cfg, seed)?
            } else {
                target.act(&state.view(seat))?
            };
            state.apply_in_place(action)?;
        }
        if belief.floored {
            floored_hands += 1;
        }
        samples.push(spec.to_mbb(state.settle()?.chips_won[me] as f64));
    }
    let mut report = EvalReport::from_samples(
        ["LBR".into(), target.name().into()],
        Estimator::Lbr,
        cfg.hands,
        &samples,
    );
    if floored_hands > 0 {
        report
            .flags
            .push(format!("{floored_hands} hands hit the Bayes likelihood floor"));
    }
    Ok(LbrResult {
        lower_bound_mbb: report.mean_mbb[0],
        report,
        floored_hands,
    })
}

/// The view `seat` would have at `state` holding `private` with `board` visible.
fn hypothetical(state: &HandState, seat: Seat, hand_id: u64, private: &[Card], board: &[Card]) -> PlayerView {
    let mut v = state.view(seat);
    v.hand_id = hand_id;
    v.private = private.to_vec();
    v.board = board[..state.spec().board_len(state.street())].to_vec();
    v
}

/// Folds the target's actions since the last update into the belief.
fn catch_up(
    belief: &mut BeliefRange,
    target: &dyn Agent,
    view: &PlayerView,
    seen: &mut usize,
) -> Result<(), EvalError> {
    let states = betting_states(&view.spec, &view.history)?;
    let opp = 1 - view.seat;
    let mut visible = view.private.clone();
    visible.extend_from_slice(&view.board);
    belief.remove_conflicts(&visible);
    for i in *seen..view.history.len() {
        let rec = view.history[i];
        if rec.seat != opp {
            continue;
        }
        let before = &states[i];
        belief.update(|h| {
            let v = hypothetical(before, opp, view.hand_id, h, &view.board);
            Ok(target.policy(&v)?.prob(rec.action))
        })?;
    }
    *seen = view.history.len();
    Ok(())
}

fn best_local_action(
    target: &dyn Agent,
    view: &PlayerView,
    belief: &BeliefRange,
    cfg: &LbrConfig,
    seed: u64,
) -> Result<Action, EvalError> {
    let spec = &view.spec;
    let legal = *view.legal()?;
    let me = view.seat;
    let opp = 1 - me;
    let half = view.pot as f64 / 2.0;
    let c_me = half + view.committed[me] as f64;
    let c_opp = half + view.committed[opp] as f64;
    let range = belief.weighted();
    let mut rng_seed = ChaCha8Rng::seed_from_u64(seed ^ view.history.len() as u64);
    let equity_vs = |range: &[(Vec<Card>, f64)], rng: &mut ChaCha8Rng| -> Result<f64, EvalError> {
        use rand::Rng;
        Ok(range_equity(
            spec,
            &view.private,
            &view.board,
            range,
            cfg.max_boards,
            rng.gen(),
        )?)
    };
    let eq = equity_vs(&range, &mut rng_seed)?;

    let passive = legal.passive();
    let mut best = (passive, (2.0 * eq - 1.0) * c_opp.max(c_me));

    let mut raises: Vec<i64> = Vec::new();
    if let (Some(r), Some(ctx)) = (legal.raise, BetContext::from_view(view)) {
        for f in &cfg.pot_fractions {
            let to = ctx.bet + (f * ctx.pot_after_call() as f64).round() as i64;
            raises.push(to.clamp(r.min_to, r.max_to));
        }
        if cfg.all_in {
            raises.push(r.max_to);
        }
        raises.sort_unstable();
        raises.dedup();
    }
    let states = betting_states(spec, &view.history)?;
    let now = states.last().expect("betting states include the current one");
    for to in raises {
        let action = Action::RaiseTo(to);
        let after = now.apply(action)?;
        let mut fold_mass = 0.0;
        let mut continuing = Vec::with_capacity(range.len());
        for (h, p) in &range {
            let v = hypothetical(&after, opp, view.hand_id, h, &view.board);
            let pf = target.policy(&v)?.prob(Action::Fold);
            fold_mass += p * pf;
            if pf < 1.0 {
                continuing.push((h.clone(), p * (1.0 - pf)));
            }
        }
        let committed = half + to as f64;
        let mut u = fold_mass * c_opp;
        if !continuing.is_empty() && fold_mass < 1.0 {
            let eq_call = equity_vs(&continuing, &mut rng_seed)?;
            u += (1.0 - fold_mass) * (2.0 * eq_call - 1.0) * committed;
        }
        if u > best.1 {
            best = (action, u);
        }
    }
    if legal.fold && -c_me > best.1 {
        best = (Action::Fold, -c_me);
    }
    Ok(best.0)
}
