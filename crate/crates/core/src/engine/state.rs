use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::card::{Card, CardSet};
use super::eval::evaluate_set;
use super::spec::{GameSpec, Variant};
use super::{Chips, EngineError, Seat};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Round {
    Preflop,
    Flop,
    Turn,
    River,
    Showdown,
    Folded,
}

impl Round {
    pub fn betting(street: usize) -> Round {
        [Round::Preflop, Round::Flop, Round::Turn, Round::River][street]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Round::Preflop => "preflop",
            Round::Flop => "flop",
            Round::Turn => "turn",
            Round::River => "river",
            Round::Showdown => "showdown",
            Round::Folded => "folded",
        }
    }

    pub fn parse(s: &str) -> Option<Round> {
        Some(match s {
            "preflop" => Round::Preflop,
            "flop" => Round::Flop,
            "turn" => Round::Turn,
            "river" => Round::River,
            "showdown" => Round::Showdown,
            "folded" => Round::Folded,
            _ => return None,
        })
    }
}

/// A betting action. Raises are expressed as the total committed this round after the raise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "amount", rename_all = "snake_case")]
pub enum Action {
    Fold,
    Check,
    Call,
    RaiseTo(Chips),
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Fold => f.write_str("fold"),
            Action::Check => f.write_str("check"),
            Action::Call => f.write_str("call"),
            Action::RaiseTo(x) => write!(f, "raise to {x}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub seat: Seat,
    /// Betting round index the action was taken in.
    pub street: usize,
    pub action: Action,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RaiseRange {
    pub min_to: Chips,
    pub max_to: Chips,
}

/// The exact legal action set at a decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LegalActions {
    pub fold: bool,
    pub check: bool,
    pub call: bool,
    /// Total this-round commitment after calling (equals the current bet unless all-in short).
    pub call_to: Chips,
    pub raise: Option<RaiseRange>,
}

impl LegalActions {
    pub fn contains(&self, action: Action) -> bool {
        match action {
            Action::Fold => self.fold,
            Action::Check => self.check,
            Action::Call => self.call,
            Action::RaiseTo(x) => self.raise.is_some_and(|r| r.min_to <= x && x <= r.max_to),
        }
    }

    /// Discrete representatives: fold/check/call plus the two raise endpoints.
    pub fn representatives(&self) -> Vec<Action> {
        let mut out = Vec::with_capacity(5);
        if self.fold {
            out.push(Action::Fold);
        }
        if self.check {
            out.push(Action::Check);
        }
        if self.call {
            out.push(Action::Call);
        }
        if let Some(r) = self.raise {
            out.push(Action::RaiseTo(r.min_to));
            if r.max_to != r.min_to {
                out.push(Action::RaiseTo(r.max_to));
            }
        }
        out
    }

    /// Check when free, otherwise call.
    pub fn passive(&self) -> Action {
        if self.check {
            Action::Check
        } else {
            Action::Call
        }
    }

    pub fn clamp_raise(&self, raise_to: Chips) -> Option<Action> {
        self.raise.map(|r| Action::RaiseTo(raise_to.clamp(r.min_to, r.max_to)))
    }
}

/// Cards for one hand: private cards per seat and the full board, revealed as rounds open.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Deal {
    pub hole: [Vec<Card>; 2],
    pub board: Vec<Card>,
}

impl Deal {
    pub fn random<R: rand::Rng + ?Sized>(spec: &GameSpec, rng: &mut R) -> Deal {
        let mut deck = spec.deck();
        deck.shuffle(rng);
        let h = spec.hole_cards();
        let b = spec.total_board_cards();
        Deal {
            hole: [deck[0..h].to_vec(), deck[h..2 * h].to_vec()],
            board: deck[2 * h..2 * h + b].to_vec(),
        }
    }

    pub fn from_seed(spec: &GameSpec, seed: u64) -> Deal {
        Deal::random(spec, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn validate(&self, spec: &GameSpec) -> Result<(), EngineError> {
        let h = spec.hole_cards();
        if self.hole.iter().any(|c| c.len() != h) {
            return Err(EngineError::InvalidInput(format!("each seat needs {h} private cards")));
        }
        if self.board.len() != spec.total_board_cards() {
            return Err(EngineError::InvalidInput(format!(
                "board needs {} cards, got {}",
                spec.total_board_cards(),
                self.board.len()
            )));
        }
        let deck = spec.deck();
        let all: Vec<Card> = self.all_cards().collect();
        if let Some(c) = all.iter().find(|c| !deck.contains(c)) {
            return Err(EngineError::InvalidInput(format!(
                "card {c} is not in the {:?} deck",
                spec.variant
            )));
        }
        CardSet::from_cards(&all)?;
        Ok(())
    }

    pub fn all_cards(&self) -> impl Iterator<Item = Card> + '_ {
        self.hole[0]
            .iter()
            .chain(self.hole[1].iter())
            .chain(self.board.iter())
            .copied()
    }

    pub fn swapped(&self) -> Deal {
        Deal {
            hole: [self.hole[1].clone(), self.hole[0].clone()],
            board: self.board.clone(),
        }
    }
}

pub enum DealSource {
    Seed(u64),
    Fixed(Deal),
}

/// Outcome of a finished hand.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PayoffRecord {
    pub chips_won: [Chips; 2],
    pub mbb: [f64; 2],
}

/// Full public and private state of one hand. Operations return new values.
#[derive(Clone, Debug, PartialEq)]
pub struct HandState {
    spec: GameSpec,
    hand_id: u64,
    deal: Deal,
    round: Round,
    street: usize,
    board_shown: usize,
    pot: Chips,
    committed: [Chips; 2],
    stacks: [Chips; 2],
    to_act: Option<Seat>,
    history: Vec<ActionRecord>,
    last_raise: Chips,
    raises: u32,
    acted: [bool; 2],
    folded: Option<Seat>,
}

/// Deal a new hand: blinds or antes posted, private cards dealt, first actor set.
pub fn new_hand(spec: GameSpec, hand_id: u64, source: DealSource) -> Result<HandState, EngineError> {
    let deal = match source {
        DealSource::Seed(seed) => Deal::from_seed(&spec, seed),
        DealSource::Fixed(deal) => deal,
    };
    HandState::new(spec, hand_id, deal)
}

impl HandState {
    pub fn new(spec: GameSpec, hand_id: u64, deal: Deal) -> Result<HandState, EngineError> {
        spec.validate()?;
        deal.validate(&spec)?;
        let (pot, committed) = if spec.posts_blinds() {
            // P1 (seat 0) posts the big blind, P2 (seat 1) the small blind.
            (0, [spec.big_blind, spec.small_blind])
        } else {
            (2 * spec.ante, [0, 0])
        };
        let stacks = if spec.posts_blinds() {
            [spec.stack - committed[0], spec.stack - committed[1]]
        } else {
            [spec.stack - spec.ante; 2]
        };
        Ok(HandState {
            spec,
            hand_id,
            deal,
            round: Round::Preflop,
            street: 0,
            board_shown: 0,
            pot,
            committed,
            stacks,
            to_act: Some(spec.first_to_act(0)),
            history: Vec::new(),
            last_raise: spec.limit_bet(0).unwrap_or(spec.big_blind),
            raises: 0,
            acted: [false; 2],
            folded: None,
        })
    }

    pub fn spec(&self) -> &GameSpec {
        &self.spec
    }

    pub fn hand_id(&self) -> u64 {
        self.hand_id
    }

    pub fn deal(&self) -> &Deal {
        &self.deal
    }

    pub fn round(&self) -> Round {
        self.round
    }

    /// Current (or last) betting round index.
    pub fn street(&self) -> usize {
        self.street
    }

    pub fn private_cards(&self, seat: Seat) -> &[Card] {
        &self.deal.hole[seat]
    }

    pub fn board(&self) -> &[Card] {
        &self.deal.board[..self.board_shown]
    }

    /// Chips collected from completed rounds (and antes).
    pub fn pot(&self) -> Chips {
        self.pot
    }

    /// Everything in the middle: completed pot plus this round's commitments.
    pub fn total_pot(&self) -> Chips {
        self.pot + self.committed[0] + self.committed[1]
    }

    pub fn committed(&self) -> [Chips; 2] {
        self.committed
    }

    pub fn stacks(&self) -> [Chips; 2] {
        self.stacks
    }

    /// Total chips a seat has put in this hand.
    pub fn contribution(&self, seat: Seat) -> Chips {
        self.spec.stack - self.stacks[seat]
    }

    pub fn to_act(&self) -> Option<Seat> {
        self.to_act
    }

    pub fn history(&self) -> &[ActionRecord] {
        &self.history
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self.round, Round::Showdown | Round::Folded)
    }

    pub fn folded(&self) -> Option<Seat> {
        self.folded
    }

    pub fn raises_this_round(&self) -> u32 {
        self.raises
    }

    /// Number of actions taken so far in the current betting round.
    pub fn actions_this_round(&self) -> usize {
        self.history
            .iter()
            .rev()
            .take_while(|r| r.street == self.street)
            .count()
    }

    pub fn legal_actions(&self) -> Result<LegalActions, EngineError> {
        let Some(me) = self.to_act else {
            return Err(EngineError::State("hand is over".into()));
        };
        let opp = 1 - me;
        let bet = self.committed[0].max(self.committed[1]);
        let to_call = bet - self.committed[me];
        let can_raise = self.stacks[me] > to_call
            && self.stacks[opp] > 0
            && self.spec.raise_cap().is_none_or(|cap| self.raises < cap);
        let raise = can_raise.then(|| {
            let max_to = self.committed[me] + self.stacks[me];
            let min_to = match self.spec.limit_bet(self.street) {
                Some(size) => (bet + size).min(max_to),
                None => (bet + self.last_raise.max(self.spec.min_bet)).min(max_to),
            };
            let max_to = if self.spec.limit_bet(self.street).is_some() {
                min_to
            } else {
                max_to
            };
            RaiseRange { min_to, max_to }
        });
        Ok(LegalActions {
            fold: to_call > 0 || self.spec.allow_free_fold,
            check: to_call == 0,
            call: to_call > 0,
            call_to: self.committed[me] + to_call.min(self.stacks[me]),
            raise,
        })
    }

    pub fn apply(&self, action: Action) -> Result<HandState, EngineError> {
        let mut next = self.clone();
        next.apply_in_place(action)?;
        Ok(next)
    }

    /// Applies a legal action; on error the state is left untouched.
    pub fn apply_in_place(&mut self, action: Action) -> Result<(), EngineError> {
        let legal = self.legal_actions()?;
        if !legal.contains(action) {
            return Err(EngineError::IllegalAction(format!(
                "{action} is not legal here ({legal:?})"
            )));
        }
        let me = self.to_act.expect("checked by legal_actions");
        let opp = 1 - me;
        self.history.push(ActionRecord {
            seat: me,
            street: self.street,
            action,
        });
        match action {
            Action::Fold => {
                self.folded = Some(me);
                self.finish(Round::Folded);
                return Ok(());
            }
            Action::Check => {}
            Action::Call => {
                let target = legal.call_to;
                self.put(me, target - self.committed[me]);
                if self.committed[opp] > self.committed[me] {
                    // Short all-in call: the uncalled part goes back.
                    let excess = self.committed[opp] - self.committed[me];
                    self.committed[opp] -= excess;
                    self.stacks[opp] += excess;
                }
            }
            Action::RaiseTo(x) => {
                let bet = self.committed[0].max(self.committed[1]);
                let size = x - bet;
                if size >= self.last_raise {
                    self.last_raise = size;
                }
                self.put(me, x - self.committed[me]);
                self.raises += 1;
                self.acted[opp] = false;
            }
        }
        self.acted[me] = true;
        let matched = self.committed[0] == self.committed[1];
        let opp_cannot_act = self.stacks[opp] == 0 && self.committed[me] >= self.committed[opp];
        if (matched && self.acted[opp]) || (matched && opp_cannot_act) {
            self.close_round();
        } else {
            self.to_act = Some(opp);
        }
        Ok(())
    }

    fn put(&mut self, seat: Seat, amount: Chips) {
        debug_assert!(amount >= 0 && amount <= self.stacks[seat]);
        self.stacks[seat] -= amount;
        self.committed[seat] += amount;
    }

    fn close_round(&mut self) {
        let last = self.street + 1 == self.spec.num_rounds();
        if last || self.stacks.contains(&0) {
            self.board_shown = self.spec.total_board_cards();
            self.finish(Round::Showdown);
            return;
        }
        self.pot += self.committed[0] + self.committed[1];
        self.committed = [0, 0];
        self.street += 1;
        self.round = Round::betting(self.street);
        self.board_shown = self.spec.board_len(self.street);
        self.acted = [false; 2];
        self.raises = 0;
        self.last_raise = self.spec.limit_bet(self.street).unwrap_or(self.spec.big_blind);
        self.to_act = Some(self.spec.first_to_act(self.street));
    }

    fn finish(&mut self, round: Round) {
        self.pot += self.committed[0] + self.committed[1];
        self.committed = [0, 0];
        self.round = round;
        self.to_act = None;
    }

    /// Ends the hand with `seat` forfeiting, whatever the betting state.
    pub fn forfeit(&self, seat: Seat) -> Result<HandState, EngineError> {
        if self.is_terminal() {
            return Err(EngineError::State("hand is already over".into()));
        }
        let mut next = self.clone();
        next.folded = Some(seat);
        next.finish(Round::Folded);
        Ok(next)
    }

    /// Comparable showdown strength of a seat's hand with the current board.
    pub fn strength(&self, seat: Seat) -> u32 {
        showdown_strength(&self.spec, &self.deal.hole[seat], self.board())
    }

    pub fn settle(&self) -> Result<PayoffRecord, EngineError> {
        let chips_won = match self.round {
            Round::Folded => {
                let loser = self.folded.expect("folded hand records the folder");
                let mut won = [0; 2];
                won[loser] = -self.contribution(loser);
                won[1 - loser] = self.contribution(loser);
                won
            }
            Round::Showdown => {
                let (a, b) = (self.strength(0), self.strength(1));
                let c = [self.contribution(0), self.contribution(1)];
                if a > b {
                    [c[1], -c[1]]
                } else if b > a {
                    [-c[0], c[0]]
                } else {
                    [0, 0]
                }
            }
            _ => return Err(EngineError::State("hand is not over".into())),
        };
        Ok(PayoffRecord {
            chips_won,
            mbb: [
                self.spec.to_mbb(chips_won[0] as f64),
                self.spec.to_mbb(chips_won[1] as f64),
            ],
        })
    }

    /// Replaces the board cards not yet revealed. Used to enumerate chance outcomes.
    pub fn with_unrevealed_board(&self, cards: &[Card]) -> Result<HandState, EngineError> {
        let hidden = self.deal.board.len() - self.board_shown;
        if cards.len() != hidden {
            return Err(EngineError::InvalidInput(format!(
                "expected {hidden} unrevealed board cards, got {}",
                cards.len()
            )));
        }
        let mut next = self.clone();
        next.deal.board.truncate(self.board_shown);
        next.deal.board.extend_from_slice(cards);
        next.deal.validate(&self.spec)?;
        Ok(next)
    }

    /// Cards not visible to anyone yet and not held by either seat.
    pub fn undealt(&self) -> Vec<Card> {
        let used = CardSet::from_cards(
            &self.deal.hole[0]
                .iter()
                .chain(self.deal.hole[1].iter())
                .chain(self.board().iter())
                .copied()
                .collect::<Vec<_>>(),
        )
        .expect("deal validated");
        self.spec.deck().into_iter().filter(|c| !used.contains(*c)).collect()
    }

    pub fn unrevealed_board_len(&self) -> usize {
        self.deal.board.len() - self.board_shown
    }

    pub fn view(&self, seat: Seat) -> PlayerView {
        PlayerView {
            spec: self.spec,
            hand_id: self.hand_id,
            seat,
            round: self.round,
            street: self.street,
            private: self.deal.hole[seat].clone(),
            board: self.board().to_vec(),
            pot: self.pot,
            committed: self.committed,
            stacks: self.stacks,
            history: self.history.clone(),
            to_act: self.to_act,
            legal: self.legal_actions().ok(),
        }
    }

    fn check_invariants(&self) -> Result<(), EngineError> {
        let total = self.pot + self.stacks[0] + self.stacks[1] + self.committed[0] + self.committed[1];
        if total != 2 * self.spec.stack {
            return Err(EngineError::State(format!("chips not conserved: {total}")));
        }
        if self.board().len() != self.expected_board_len() {
            return Err(EngineError::State("board length does not match round".into()));
        }
        Ok(())
    }

    fn expected_board_len(&self) -> usize {
        match self.round {
            Round::Showdown => self.spec.total_board_cards(),
            Round::Folded => self.board_shown,
            _ => self.spec.board_len(self.street),
        }
    }

    /// Conservation and board-length checks; exposed for property tests.
    pub fn assert_invariants(&self) {
        if let Err(e) = self.check_invariants() {
            panic!("{e}: {self:?}");
        }
    }
}

/// Replays a recorded action sequence from the deal.
pub fn replay(spec: GameSpec, hand_id: u64, deal: Deal, actions: &[Action]) -> Result<HandState, EngineError> {
    let mut state = HandState::new(spec, hand_id, deal)?;
    for (i, &a) in actions.iter().enumerate() {
        state
            .apply_in_place(a)
            .map_err(|e| EngineError::IllegalAction(format!("action {i}: {e}")))?;
    }
    Ok(state)
}

/// Showdown strength for any variant; larger is better, equal means split.
pub fn showdown_strength(spec: &GameSpec, private: &[Card], board: &[Card]) -> u32 {
    match spec.variant {
        Variant::Hunl => {
            let mut set = CardSet::default();
            for &c in private.iter().chain(board) {
                set.insert(c);
            }
            evaluate_set(set).value()
        }
        Variant::Kuhn => private[0].rank() as u32,
        Variant::Leduc => {
            let r = private[0].rank() as u32;
            match board.first() {
                Some(b) if b.rank() as u32 == r => 100 + r,
                _ => r,
            }
        }
    }
}

/// What one seat can observe, plus the legal set when it is that seat's turn.
#[derive(Clone, Debug, PartialEq)]
pub struct PlayerView {
    pub spec: GameSpec,
    pub hand_id: u64,
    pub seat: Seat,
    pub round: Round,
    pub street: usize,
    pub private: Vec<Card>,
    pub board: Vec<Card>,
    pub pot: Chips,
    pub committed: [Chips; 2],
    pub stacks: [Chips; 2],
    pub history: Vec<ActionRecord>,
    pub to_act: Option<Seat>,
    pub legal: Option<LegalActions>,
}

impl PlayerView {
    pub fn total_pot(&self) -> Chips {
        self.pot + self.committed[0] + self.committed[1]
    }

    pub fn to_call(&self) -> Chips {
        self.committed[1 - self.seat].max(self.committed[self.seat]) - self.committed[self.seat]
    }

    pub fn facing_bet(&self) -> bool {
        self.to_call() > 0
    }

    /// The same view with different private cards, for range reasoning.
    pub fn with_private(&self, private: Vec<Card>) -> PlayerView {
        PlayerView {
            private,
            ..self.clone()
        }
    }

    pub fn legal(&self) -> Result<&LegalActions, EngineError> {
        self.legal
            .as_ref()
            .filter(|_| self.to_act == Some(self.seat))
            .ok_or_else(|| EngineError::State("not this seat's turn".into()))
    }

    /// Raises made this betting round by the opponent.
    pub fn opponent_raises_this_round(&self) -> usize {
        self.history
            .iter()
            .filter(|r| r.street == self.street && r.seat != self.seat)
            .filter(|r| matches!(r.action, Action::RaiseTo(_)))
            .count()
    }

    pub fn actions_this_round(&self) -> usize {
        self.history.iter().filter(|r| r.street == self.street).count()
    }
}

/// Betting-only replay: the states before each action of `history`, followed by the final
/// state. Cards do not influence betting, so any valid deal works.
pub fn betting_states(spec: &GameSpec, history: &[ActionRecord]) -> Result<Vec<HandState>, EngineError> {
    let mut state = HandState::new(*spec, 0, placeholder_deal(spec))?;
    let mut out = Vec::with_capacity(history.len() + 1);
    for rec in history {
        if state.to_act() != Some(rec.seat) {
            return Err(EngineError::IllegalAction(format!(
                "history has seat {} acting out of turn",
                rec.seat
            )));
        }
        out.push(state.clone());
        state.apply_in_place(rec.action)?;
    }
    out.push(state);
    Ok(out)
}

pub fn placeholder_deal(spec: &GameSpec) -> Deal {
    let deck = spec.deck();
    let h = spec.hole_cards();
    Deal {
        hole: [deck[0..h].to_vec(), deck[h..2 * h].to_vec()],
        board: deck[2 * h..2 * h + spec.total_board_cards()].to_vec(),
    }
}
