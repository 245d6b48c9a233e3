use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::matches::deal_seed;
use super::EvalError;
use crate::abstraction::BetContext;
use crate::agents::Agent;
use crate::engine::{Action, Deal, GameSpec, HandState, PlayerView, Seat};
use crate::protocol::StateMessage;

/// One transition of the best-responder environment.
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    /// The learner's next decision, absent once the hand is over.
    pub observation: Option<StateMessage>,
    /// Chips won by the learner; nonzero only on the terminal step.
    pub reward: f64,
    pub done: bool,
}

/// Wraps a fixed opponent as a single-agent episodic environment: one episode per hand, the
/// learner alternating seats, observations in the wire format.
pub struct BestResponseEnv<A: Agent> {
    spec: GameSpec,
    target: A,
    seed: u64,
    episodes: u64,
    state: Option<HandState>,
    learner: Seat,
}

impl<A: Agent> BestResponseEnv<A> {
    pub fn new(spec: GameSpec, target: A, seed: u64) -> BestResponseEnv<A> {
        let spec = spec.with_free_fold(spec.allow_free_fold || target.emits_free_fold());
        BestResponseEnv {
            spec,
            target,
            seed,
            episodes: 0,
            state: None,
            learner: 0,
        }
    }

    pub fn spec(&self) -> &GameSpec {
        &self.spec
    }

    pub fn learner_seat(&self) -> Seat {
        self.learner
    }

    pub fn episodes(&self) -> u64 {
        self.episodes
    }

    /// Restarts the deal schedule, so that candidate policies can be compared on the same cards.
    pub fn rewind(&mut self) {
        self.episodes = 0;
        self.state = None;
    }

    pub fn state(&self) -> Option<&HandState> {
        self.state.as_ref()
    }

    /// Deals the next hand and advances to the learner's first decision.
    pub fn reset(&mut self) -> Result<Step, EvalError> {
        let t = self.episodes;
        self.episodes += 1;
        self.learner = (t % 2) as Seat;
        let state = HandState::new(self.spec, t, Deal::from_seed(&self.spec, deal_seed(self.seed, t)))?;
        self.target.reset(t, 1 - self.learner);
        self.state = Some(state);
        self.advance()
    }

    pub fn step(&mut self, action: Action) -> Result<Step, EvalError> {
        let state = self
            .state
            .as_mut()
            .ok_or_else(|| EvalError::Invalid("step called before reset".into()))?;
        if state.to_act() != Some(self.learner) {
            return Err(EvalError::Invalid("the episode is over; call reset".into()));
        }
        state.apply_in_place(action)?;
        self.advance()
    }

    fn advance(&mut self) -> Result<Step, EvalError> {
        let state = self.state.as_mut().expect("episode in progress");
        while let Some(seat) = state.to_act() {
            if seat == self.learner {
                let id = format!("br-{:016x}", self.seed);
                return Ok(Step {
                    observation: Some(StateMessage::from_view(&id, &state.view(seat))?),
                    reward: 0.0,
                    done: false,
                });
            }
            let a = self.target.act(&state.view(seat))?;
            state.apply_in_place(a)?;
        }
        Ok(Step {
            observation: None,
            reward: state.settle()?.chips_won[self.learner] as f64,
            done: true,
        })
    }

    /// Mean reward in mbb per hand of `policy` over `episodes` hands.
    /// The policy sees only the learner's view.
    pub fn evaluate(&mut self, episodes: u64, mut policy: impl FnMut(&PlayerView) -> Action) -> Result<f64, EvalError> {
        let mut total = 0.0;
        for _ in 0..episodes {
            let mut step = self.reset()?;
            while step.observation.take().is_some() {
                let view = self.state.as_ref().expect("in progress").view(self.learner);
                let a = policy(&view);
                step = self.step(a)?;
            }
            total += step.reward;
        }
        Ok(self.spec.to_mbb(total / episodes.max(1) as f64))
    }
}

/// Action categories of the searched policy family.
const CATEGORIES: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    /// Softmax logits per round and category (fold, check/call, min raise, pot raise, all-in).
    pub params: Vec<[f64; CATEGORIES]>,
    pub mbb: f64,
    pub evaluations: u64,
}

/// Sample action of the parametric policy; the learner's cards are ignored, so this is a
/// baseline against which real learners can be compared.
pub fn parametric_action(params: &[[f64; CATEGORIES]], view: &PlayerView, rng: &mut impl Rng) -> Action {
    let legal = *view.legal().expect("learner decision");
    let ctx = BetContext::from_view(view).expect("learner decision");
    let options: [Option<Action>; CATEGORIES] = [
        legal.fold.then_some(Action::Fold),
        Some(legal.passive()),
        legal.raise.map(|r| Action::RaiseTo(r.min_to)),
        legal.clamp_raise(ctx.bet + ctx.pot_after_call()),
        legal.raise.map(|r| Action::RaiseTo(r.max_to)),
    ];
    let logits = &params[view.street.min(params.len() - 1)];
    let weights: Vec<f64> = options
        .iter()
        .zip(logits)
        .map(|(o, l)| if o.is_some() { l.exp() } else { 0.0 })
        .collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (o, w) in options.iter().zip(&weights) {
        if let Some(a) = o {
            if u < *w {
                return *a;
            }
            u -= w;
        }
    }
    legal.passive()
}

/// Hill-climbing random search over the parametric policy, scored on common deals.
pub fn random_search<A: Agent>(
    env: &mut BestResponseEnv<A>,
    iterations: u64,
    episodes: u64,
    seed: u64,
) -> Result<SearchResult, EvalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rounds = env.spec().num_rounds();
    let score = |env: &mut BestResponseEnv<A>, params: &[[f64; CATEGORIES]], rng_seed: u64| {
        env.rewind();
        let mut act_rng = ChaCha8Rng::seed_from_u64(rng_seed);
        env.evaluate(episodes, |v| parametric_action(params, v, &mut act_rng))
    };
    let mut best = vec![[0.0; CATEGORIES]; rounds];
    let mut best_mbb = score(env, &best, seed)?;
    for _ in 0..iterations {
        let cand: Vec<[f64; CATEGORIES]> = best
            .iter()
            .map(|row| {
                let mut r = *row;
                for x in &mut r {
                    *x += rng.gen_range(-1.0..1.0);
                }
                r
            })
            .collect();
        let mbb = score(env, &cand, seed)?;
        if mbb > best_mbb {
            best = cand;
            best_mbb = mbb;
        }
    }
    Ok(SearchResult {
        params: best,
        mbb: best_mbb,
        evaluations: iterations + 1,
    })
}
