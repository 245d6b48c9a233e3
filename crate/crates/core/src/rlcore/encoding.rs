use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::RlError;
use crate::abstraction::BetContext;
use crate::engine::{betting_states, Action, Card, Chips, HandState, PlayerView, Seat};

pub const CARD_CHANNELS: usize = 6;
pub const MAX_ROUNDS: usize = 4;
pub const SLOTS_PER_ROUND: usize = 6;
pub const ACTION_CHANNELS: usize = MAX_ROUNDS * SLOTS_PER_ROUND;
/// Seat 0's action, seat 1's action, their sum, and the legal set.
pub const ACTION_ROWS: usize = 4;
const SUM_ROW: usize = 2;
const LEGAL_ROW: usize = 3;

/// Upper bound on the element count accepted by `read_tensor`.
const MAX_TENSOR_LEN: usize = 1 << 28;

/// Dense binary tensor in channel-major order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tensor {
    pub channels: usize,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<u8>,
}

/// 6 channels × 4 suits × 13 ranks: private, flop, turn, river, whole board, private and board.
pub type CardTensor = Tensor;
/// 24 channels (4 rounds × 6 action slots) × 4 rows × one column per betting option.
pub type ActionTensor = Tensor;

impl Tensor {
    pub fn zeros(channels: usize, rows: usize, cols: usize) -> Tensor {
        Tensor {
            channels,
            rows,
            cols,
            data: vec![0; channels * rows * cols],
        }
    }

    fn offset(&self, c: usize, r: usize, k: usize) -> usize {
        assert!(
            c < self.channels && r < self.rows && k < self.cols,
            "tensor index out of range"
        );
        (c * self.rows + r) * self.cols + k
    }

    pub fn get(&self, c: usize, r: usize, k: usize) -> u8 {
        self.data[self.offset(c, r, k)]
    }

    pub fn set(&mut self, c: usize, r: usize, k: usize, v: u8) {
        let i = self.offset(c, r, k);
        self.data[i] = v;
    }

    pub fn channel(&self, c: usize) -> &[u8] {
        let n = self.rows * self.cols;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_sum(&self, c: usize) -> u32 {
        self.channel(c).iter().map(|&x| x as u32).sum()
    }

    pub fn row(&self, c: usize, r: usize) -> &[u8] {
        let i = self.offset(c, r, 0);
        &self.data[i..i + self.cols]
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&x| x != 0).count()
    }
}

/// Writes `channels`, `rows`, `cols` as little-endian u32 followed by one byte per element.
pub fn write_tensor(w: &mut impl Write, t: &Tensor) -> Result<(), RlError> {
    for d in [t.channels, t.rows, t.cols] {
        let d = u32::try_from(d).map_err(|_| RlError::Format(format!("dimension {d} does not fit u32")))?;
        w.write_all(&d.to_le_bytes())?;
    }
    w.write_all(&t.data)?;
    Ok(())
}

pub fn read_tensor(r: &mut impl Read) -> Result<Tensor, RlError> {
    let mut dims = [0usize; 3];
    for d in &mut dims {
        let mut b = [0u8; 4];
        r.read_exact(&mut b)?;
        *d = u32::from_le_bytes(b) as usize;
    }
    let len = dims[0]
        .checked_mul(dims[1])
        .and_then(|x| x.checked_mul(dims[2]))
        .filter(|&n| n > 0 && n <= MAX_TENSOR_LEN)
        .ok_or_else(|| RlError::Format(format!("bad header {dims:?}")))?;
    let mut data = vec![0u8; len];
    r.read_exact(&mut data)?;
    Ok(Tensor {
        channels: dims[0],
        rows: dims[1],
        cols: dims[2],
        data,
    })
}

/// Betting-option columns: fold, check/call, one per pot fraction, all-in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionMenu {
    pub pot_fractions: Vec<f64>,
}

impl Default for ActionMenu {
    fn default() -> Self {
        ActionMenu {
            pot_fractions: vec![0.25, 0.5, 0.75, 1.0, 1.5, 2.0],
        }
    }
}

impl ActionMenu {
    pub fn n_b(&self) -> usize {
        self.pot_fractions.len() + 3
    }

    pub fn all_in_column(&self) -> usize {
        self.n_b() - 1
    }

    pub fn validate(&self) -> Result<(), RlError> {
        if self.pot_fractions.iter().any(|f| !f.is_finite() || *f <= 0.0) {
            return Err(RlError::Config("pot fractions must be positive and finite".into()));
        }
        if self.pot_fractions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(RlError::Config("pot fractions must be strictly increasing".into()));
        }
        Ok(())
    }

    fn fraction_target(ctx: &BetContext, f: f64) -> Chips {
        ctx.bet + (f * ctx.pot_after_call() as f64).round() as Chips
    }

    /// Which columns are playable at a decision. A fraction column is legal when its raise
    /// lands inside the legal raise range; all-in is legal whenever raising is.
    pub fn legal_row(&self, ctx: &BetContext) -> Vec<bool> {
        let mut row = vec![false; self.n_b()];
        row[0] = ctx.legal.fold;
        row[1] = ctx.legal.check || ctx.legal.call;
        if let Some(r) = ctx.legal.raise {
            for (i, &f) in self.pot_fractions.iter().enumerate() {
                let to = Self::fraction_target(ctx, f);
                row[2 + i] = r.min_to <= to && to <= r.max_to;
            }
            row[self.all_in_column()] = true;
        }
        row
    }

    /// Column of a taken action. Raises go to all-in when they commit everything, otherwise to
    /// the legal column whose raise is nearest in chips (ties to the smaller size).
    pub fn column(&self, ctx: &BetContext, action: Action) -> Result<usize, RlError> {
        if !ctx.legal.contains(action) {
            return Err(RlError::Input(format!("{action} is not legal here")));
        }
        Ok(match action {
            Action::Fold => 0,
            Action::Check | Action::Call => 1,
            Action::RaiseTo(to) => {
                let r = ctx.legal.raise.expect("raise is legal");
                let all_in = self.all_in_column();
                if to == r.max_to {
                    return Ok(all_in);
                }
                let legal = self.legal_row(ctx);
                let mut best = (all_in, (r.max_to - to).abs());
                for (i, &f) in self.pot_fractions.iter().enumerate() {
                    if legal[2 + i] {
                        let d = (Self::fraction_target(ctx, f) - to).abs();
                        if d < best.1 || (d == best.1 && 2 + i < best.0) {
                            best = (2 + i, d);
                        }
                    }
                }
                best.0
            }
        })
    }
}

/// One action slot. `actor` and `column` are absent for the pending decision, which carries
/// only its legal row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlotFeature {
    pub actor: Option<Seat>,
    pub column: Option<usize>,
    pub legal: Vec<bool>,
}

/// Everything the tensors hold, in structured form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateFeatures {
    pub n_b: usize,
    /// Sorted.
    pub private: Vec<Card>,
    /// Flop sorted, then turn and river.
    pub board: Vec<Card>,
    /// One list of at most six slots per round.
    pub rounds: Vec<Vec<SlotFeature>>,
    /// Some round had more than six slots and was truncated.
    pub overflow: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedState {
    pub cards: CardTensor,
    pub actions: ActionTensor,
    pub overflow: bool,
}

impl EncodedState {
    pub fn write_to(&self, w: &mut impl Write) -> Result<(), RlError> {
        write_tensor(w, &self.cards)?;
        write_tensor(w, &self.actions)
    }

    pub fn read_from(r: &mut impl Read) -> Result<EncodedState, RlError> {
        let cards = read_tensor(r)?;
        let actions = read_tensor(r)?;
        if (cards.channels, cards.rows, cards.cols) != (CARD_CHANNELS, 4, 13) {
            return Err(RlError::Format("card tensor must be 6x4x13".into()));
        }
        if (actions.channels, actions.rows) != (ACTION_CHANNELS, ACTION_ROWS) || actions.cols < 3 {
            return Err(RlError::Format("action tensor must be 24x4xn_b".into()));
        }
        Ok(EncodedState {
            cards,
            actions,
            overflow: false,
        })
    }
}

fn canonical_board(board: &[Card]) -> Vec<Card> {
    let split = board.len().min(3);
    let mut out = board[..split].to_vec();
    out.sort_unstable();
    out.extend_from_slice(&board[split..]);
    out
}

impl StateFeatures {
    pub fn from_view(view: &PlayerView, menu: &ActionMenu) -> Result<StateFeatures, RlError> {
        menu.validate()?;
        if view.spec.num_rounds() > MAX_ROUNDS {
            return Err(RlError::Input("more betting rounds than the tensor holds".into()));
        }
        if view.board.len() > 5 {
            return Err(RlError::Input("board has more than five cards".into()));
        }
        let states = betting_states(&view.spec, &view.history)?;
        let mut rounds: Vec<Vec<SlotFeature>> = vec![Vec::new(); MAX_ROUNDS];
        for (rec, state) in view.history.iter().zip(&states) {
            let ctx = context(state)?;
            rounds[rec.street].push(SlotFeature {
                actor: Some(rec.seat),
                column: Some(menu.column(&ctx, rec.action)?),
                legal: menu.legal_row(&ctx),
            });
        }
        let mut pending = None;
        let last = states.last().expect("betting states end with the current state");
        if last.to_act().is_some() {
            pending = Some((last.street(), menu.legal_row(&context(last)?)));
            let (street, legal) = pending.clone().expect("just set");
            rounds[street].push(SlotFeature {
                actor: None,
                column: None,
                legal,
            });
        }
        let mut overflow = false;
        for (street, slots) in rounds.iter_mut().enumerate() {
            if slots.len() <= SLOTS_PER_ROUND {
                continue;
            }
            overflow = true;
            let mut latest = slots
                .iter()
                .rev()
                .find(|s| s.actor.is_some())
                .cloned()
                .expect("an overfull round has actions");
            if let Some((s, legal)) = &pending {
                if *s == street {
                    latest.legal = legal.clone();
                }
            }
            slots.truncate(SLOTS_PER_ROUND - 1);
            slots.push(latest);
        }
        let mut private = view.private.clone();
        private.sort_unstable();
        Ok(StateFeatures {
            n_b: menu.n_b(),
            private,
            board: canonical_board(&view.board),
            rounds,
            overflow,
        })
    }

    pub fn encode(&self) -> EncodedState {
        let mut cards = Tensor::zeros(CARD_CHANNELS, 4, 13);
        let mut put = |ch: usize, c: Card| cards.set(ch, c.suit() as usize, c.rank() as usize, 1);
        for &c in &self.private {
            put(0, c);
            put(5, c);
        }
        for (i, &c) in self.board.iter().enumerate() {
            let ch = match i {
                0..=2 => 1,
                3 => 2,
                _ => 3,
            };
            put(ch, c);
            put(4, c);
            put(5, c);
        }
        let mut actions = Tensor::zeros(ACTION_CHANNELS, ACTION_ROWS, self.n_b);
        for (r, slots) in self.rounds.iter().enumerate() {
            for (j, slot) in slots.iter().enumerate() {
                let ch = r * SLOTS_PER_ROUND + j;
                if let (Some(seat), Some(col)) = (slot.actor, slot.column) {
                    actions.set(ch, seat, col, 1);
                    actions.set(ch, SUM_ROW, col, 1);
                }
                for (k, &l) in slot.legal.iter().enumerate() {
                    if l {
                        actions.set(ch, LEGAL_ROW, k, 1);
                    }
                }
            }
        }
        EncodedState {
            cards,
            actions,
            overflow: self.overflow,
        }
    }
}

fn context(state: &HandState) -> Result<BetContext, RlError> {
    BetContext::from_state(state).ok_or_else(|| RlError::Input("no decision at a recorded action".into()))
}

/// Card and action tensors for the seat that owns `view`. Only that seat's private cards are
/// used, so hidden information cannot leak into the encoding.
pub fn encode_state(view: &PlayerView, menu: &ActionMenu) -> Result<EncodedState, RlError> {
    Ok(StateFeatures::from_view(view, menu)?.encode())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{parse_cards, Deal, GameSpec};

    fn hunl_with(p0: &str, p1: &str) -> HandState {
        let spec = GameSpec::hunl();
        let hole = [parse_cards(p0).unwrap(), parse_cards(p1).unwrap()];
        let used: Vec<Card> = hole.iter().flatten().copied().collect();
        let board: Vec<Card> = spec.deck().into_iter().filter(|c| !used.contains(c)).take(5).collect();
        HandState::new(spec, 0, Deal { hole, board }).unwrap()
    }

    #[test]
    fn as_ac_betting_pot_preflop() {
        let mut s = hunl_with("KdKh", "AsAc");
        s.apply_in_place(Action::RaiseTo(300)).unwrap();
        let e = encode_state(&s.view(1), &ActionMenu::default()).unwrap();

        assert_eq!(e.cards.channel_sum(0), 2);
        assert_eq!(e.cards.get(0, 3, 12), 1);
        assert_eq!(e.cards.get(0, 0, 12), 1);
        for ch in 1..=4 {
            assert_eq!(e.cards.channel_sum(ch), 0);
        }
        assert_eq!(e.cards.channel(5), e.cards.channel(0));

        let a = &e.actions;
        assert_eq!(a.row(0, 0), &[0; 9]);
        assert_eq!(a.row(0, 1), &[0, 0, 0, 0, 0, 1, 0, 0, 0]);
        assert_eq!(a.row(0, 2), a.row(0, 1));
        assert_eq!(a.row(0, 3), &[1, 1, 0, 1, 1, 1, 1, 1, 1]);
        // Seat 0 now faces 300 with 400 in the pot: the fractions raise to 450, 600, 750, 900,
        // 1200 and 1500, and the minimum re-raise is 500.
        assert_eq!(a.row(1, 0), &[0; 9]);
        assert_eq!(a.row(1, 3), &[1, 1, 0, 1, 1, 1, 1, 1, 1]);
        assert_eq!(a.count_ones(), 10 + 8);
        assert!(!e.overflow);
    }

    #[test]
    fn empty_history_marks_only_the_first_legal_row() {
        let s = hunl_with("2c3d", "AsAc");
        let e = encode_state(&s.view(0), &ActionMenu::default()).unwrap();
        for ch in 0..ACTION_CHANNELS {
            for r in 0..ACTION_ROWS {
                let ones = e.actions.row(ch, r).iter().filter(|&&x| x == 1).count();
                assert_eq!(ones > 0, ch == 0 && r == LEGAL_ROW, "channel {ch} row {r}");
            }
        }
    }

    #[test]
    fn long_rounds_keep_the_first_five_and_the_latest() {
        let mut s = hunl_with("2c3d", "AsAc");
        let mut to = 100;
        for _ in 0..7 {
            let legal = s.legal_actions().unwrap();
            to = legal.raise.unwrap().min_to.max(to);
            s.apply_in_place(Action::RaiseTo(to)).unwrap();
        }
        let menu = ActionMenu::default();
        let f = StateFeatures::from_view(&s.view(0), &menu).unwrap();
        assert!(f.overflow);
        assert_eq!(f.rounds[0].len(), SLOTS_PER_ROUND);
        let latest = f.rounds[0].last().unwrap();
        assert_eq!(latest.actor, Some(s.history().last().unwrap().seat));
        assert_eq!(latest.legal, menu.legal_row(&BetContext::from_state(&s).unwrap()));
    }

    #[test]
    fn tensor_dump_round_trips() {
        let s = hunl_with("2c3d", "AsAc");
        let e = encode_state(&s.view(1), &ActionMenu::default()).unwrap();
        let mut buf = Vec::new();
        e.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..12], &[6, 0, 0, 0, 4, 0, 0, 0, 13, 0, 0, 0]);
        assert_eq!(buf.len(), 12 + 312 + 12 + 24 * 4 * 9);
        assert_eq!(EncodedState::read_from(&mut buf.as_slice()).unwrap(), e);
        buf[0] = 0;
        assert!(EncodedState::read_from(&mut buf.as_slice()).is_err());
    }

    #[test]
    fn menu_validation() {
        assert!(ActionMenu {
            pot_fractions: vec![1.0, 0.5]
        }
        .validate()
        .is_err());
        assert!(ActionMenu {
            pot_fractions: vec![-1.0]
        }
        .validate()
        .is_err());
        assert_eq!(ActionMenu::default().n_b(), 9);
    }
}
