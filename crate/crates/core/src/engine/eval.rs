//! Hand strength for 5 to 7 cards.
//!
//! Ranks are computed directly from per-suit rank masks rather than by scanning the
//! 21 five-card subsets; the result is identical to the best five-card hand.

use std::cmp::Ordering;
use std::fmt;

use super::card::{Card, CardSet, RANK_CHARS};
use super::EngineError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HandCategory {
    HighCard = 0,
    Pair = 1,
    TwoPair = 2,
    ThreeOfAKind = 3,
    Straight = 4,
    Flush = 5,
    FullHouse = 6,
    FourOfAKind = 7,
    StraightFlush = 8,
}

impl HandCategory {
    pub const ALL: [HandCategory; 9] = [
        HandCategory::HighCard,
        HandCategory::Pair,
        HandCategory::TwoPair,
        HandCategory::ThreeOfAKind,
        HandCategory::Straight,
        HandCategory::Flush,
        HandCategory::FullHouse,
        HandCategory::FourOfAKind,
        HandCategory::StraightFlush,
    ];

    fn from_u32(v: u32) -> HandCategory {
        HandCategory::ALL[v as usize]
    }
}

/// Total-order hand strength: category in the high bits, then up to five tiebreak ranks
/// (most significant first) packed four bits each.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct HandRank(u32);

impl HandRank {
    pub fn new(category: HandCategory, tiebreak: &[u8]) -> HandRank {
        assert!(tiebreak.len() <= 5);
        let mut v = (category as u32) << 20;
        for (i, &r) in tiebreak.iter().enumerate() {
            v |= (r as u32) << (16 - 4 * i);
        }
        HandRank(v)
    }

    pub fn category(self) -> HandCategory {
        HandCategory::from_u32(self.0 >> 20)
    }

    /// Significant tiebreak ranks (0 = deuce .. 12 = ace), most significant first.
    pub fn tiebreak(self) -> Vec<u8> {
        let n = match self.category() {
            HandCategory::StraightFlush | HandCategory::Straight => 1,
            HandCategory::FourOfAKind | HandCategory::FullHouse => 2,
            HandCategory::ThreeOfAKind | HandCategory::TwoPair => 3,
            HandCategory::Pair => 4,
            HandCategory::Flush | HandCategory::HighCard => 5,
        };
        (0..n).map(|i| ((self.0 >> (16 - 4 * i)) & 0xf) as u8).collect()
    }

    pub fn value(self) -> u32 {
        self.0
    }
}

impl PartialOrd for HandRank {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HandRank {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0)
    }
}

impl fmt::Debug for HandRank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ranks: String = self.tiebreak().iter().map(|&r| RANK_CHARS[r as usize]).collect();
        write!(f, "{:?}({})", self.category(), ranks)
    }
}

/// Best hand over all 5-card subsets of `cards` (5 to 7 distinct cards).
pub fn evaluate(cards: &[Card]) -> Result<HandRank, EngineError> {
    if !(5..=7).contains(&cards.len()) {
        return Err(EngineError::InvalidInput(format!(
            "hand evaluation needs 5 to 7 cards, got {}",
            cards.len()
        )));
    }
    let set = CardSet::from_cards(cards)?;
    Ok(evaluate_set(set))
}

/// Seven-card evaluation entry point; rejects anything other than 7 distinct cards.
pub fn evaluate7(cards: &[Card]) -> Result<HandRank, EngineError> {
    if cards.len() != 7 {
        return Err(EngineError::InvalidInput(format!(
            "evaluate7 needs 7 cards, got {}",
            cards.len()
        )));
    }
    evaluate(cards)
}

/// Highest straight in a 13-bit rank mask, as the rank of its top card.
fn straight_high(mask: u16) -> Option<u8> {
    // Ace also plays low: bit 0 of the extended mask is the ace below the deuce.
    let ext = ((mask as u32) << 1) | ((mask as u32 >> 12) & 1);
    for high in (4..=13u32).rev() {
        let run = 0b11111u32 << (high - 4);
        if ext & run == run {
            return Some((high - 1) as u8);
        }
    }
    None
}

fn top_bits(mut mask: u16, n: usize) -> ([u8; 5], usize) {
    let mut out = [0u8; 5];
    let mut k = 0;
    while mask != 0 && k < n {
        let r = 15 - mask.leading_zeros() as u8;
        out[k] = r;
        k += 1;
        mask &= !(1 << r);
    }
    (out, k)
}

/// Infallible evaluation of a mask holding 5 to 7 cards.
pub fn evaluate_set(set: CardSet) -> HandRank {
    let bits = set.0;
    let mut suits = [0u16; 4];
    let mut counts = [0u8; 13];
    for r in 0..13 {
        let nib = (bits >> (r * 4)) & 0xf;
        suits[0] |= ((nib & 1) as u16) << r;
        suits[1] |= (((nib >> 1) & 1) as u16) << r;
        suits[2] |= (((nib >> 2) & 1) as u16) << r;
        suits[3] |= (((nib >> 3) & 1) as u16) << r;
        counts[r] = nib.count_ones() as u8;
    }

    for &m in &suits {
        if m.count_ones() >= 5 {
            if let Some(h) = straight_high(m) {
                return HandRank::new(HandCategory::StraightFlush, &[h]);
            }
            // Quads or a full house cannot coexist with five suited cards among seven.
            let (top, _) = top_bits(m, 5);
            return HandRank::new(HandCategory::Flush, &top);
        }
    }

    let all = suits[0] | suits[1] | suits[2] | suits[3];

    let mut quads = None;
    let mut trips = [0u8; 2];
    let mut n_trips = 0;
    let mut pairs = [0u8; 3];
    let mut n_pairs = 0;
    for r in (0..13u8).rev() {
        match counts[r as usize] {
            4 => quads = Some(r),
            3 => {
                trips[n_trips] = r;
                n_trips += 1;
            }
            2 => {
                pairs[n_pairs] = r;
                n_pairs += 1;
            }
            _ => {}
        }
    }

    if let Some(q) = quads {
        let (k, _) = top_bits(all & !(1 << q), 1);
        return HandRank::new(HandCategory::FourOfAKind, &[q, k[0]]);
    }
    if n_trips >= 1 && (n_trips >= 2 || n_pairs >= 1) {
        let t = trips[0];
        let p = if n_trips >= 2 && (n_pairs == 0 || trips[1] > pairs[0]) {
            trips[1]
        } else {
            pairs[0]
        };
        return HandRank::new(HandCategory::FullHouse, &[t, p]);
    }
    if let Some(h) = straight_high(all) {
        return HandRank::new(HandCategory::Straight, &[h]);
    }
    if n_trips == 1 {
        let t = trips[0];
        let (k, _) = top_bits(all & !(1 << t), 2);
        return HandRank::new(HandCategory::ThreeOfAKind, &[t, k[0], k[1]]);
    }
    if n_pairs >= 2 {
        let (a, b) = (pairs[0], pairs[1]);
        let (k, _) = top_bits(all & !(1 << a) & !(1 << b), 1);
        return HandRank::new(HandCategory::TwoPair, &[a, b, k[0]]);
    }
    if n_pairs == 1 {
        let p = pairs[0];
        let (k, _) = top_bits(all & !(1 << p), 3);
        return HandRank::new(HandCategory::Pair, &[p, k[0], k[1], k[2]]);
    }
    let (k, _) = top_bits(all, 5);
    HandRank::new(HandCategory::HighCard, &k)
}
