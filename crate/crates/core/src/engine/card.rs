use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::EngineError;

pub const RANK_CHARS: [char; 13] = ['2', '3', '4', '5', '6', '7', '8', '9', 'T', 'J', 'Q', 'K', 'A'];
pub const SUIT_CHARS: [char; 4] = ['c', 'd', 'h', 's'];

/// One of the 52 cards. Stored as `rank * 4 + suit`, rank 0 = deuce, suit order c d h s.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Card(u8);

impl Card {
    pub fn new(rank: u8, suit: u8) -> Card {
        assert!(rank < 13 && suit < 4, "card out of range: rank {rank} suit {suit}");
        Card(rank * 4 + suit)
    }

    pub fn from_index(index: u8) -> Card {
        assert!(index < 52, "card index out of range: {index}");
        Card(index)
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn rank(self) -> u8 {
        self.0 / 4
    }

    pub fn suit(self) -> u8 {
        self.0 % 4
    }

    pub fn mask(self) -> u64 {
        1u64 << self.0
    }
}

impl fmt::Display for Card {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}",
            RANK_CHARS[self.rank() as usize],
            SUIT_CHARS[self.suit() as usize]
        )
    }
}

impl fmt::Debug for Card {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Card {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        let (Some(r), Some(su), None) = (chars.next(), chars.next(), chars.next()) else {
            return Err(EngineError::InvalidInput(format!("bad card text {s:?}")));
        };
        let rank = RANK_CHARS
            .iter()
            .position(|&c| c == r.to_ascii_uppercase())
            .ok_or_else(|| EngineError::InvalidInput(format!("bad rank in {s:?}")))?;
        let suit = SUIT_CHARS
            .iter()
            .position(|&c| c == su.to_ascii_lowercase())
            .ok_or_else(|| EngineError::InvalidInput(format!("bad suit in {s:?}")))?;
        Ok(Card::new(rank as u8, suit as u8))
    }
}

impl Serialize for Card {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Card {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses a run of concatenated card codes such as `"AsKd7c"`. Whitespace and commas are ignored.
pub fn parse_cards(text: &str) -> Result<Vec<Card>, EngineError> {
    let compact: Vec<char> = text.chars().filter(|c| !c.is_whitespace() && *c != ',').collect();
    if compact.len() % 2 != 0 {
        return Err(EngineError::InvalidInput(format!(
            "odd number of characters in card list {text:?}"
        )));
    }
    compact
        .chunks(2)
        .map(|pair| pair.iter().collect::<String>().parse())
        .collect()
}

pub fn format_cards(cards: &[Card]) -> String {
    cards.iter().map(|c| c.to_string()).collect()
}

pub fn full_deck() -> Vec<Card> {
    (0..52).map(Card).collect()
}

/// A set of cards as a 52-bit mask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, Debug)]
pub struct CardSet(pub u64);

impl CardSet {
    pub fn from_cards(cards: &[Card]) -> Result<CardSet, EngineError> {
        let mut set = 0u64;
        for c in cards {
            if set & c.mask() != 0 {
                return Err(EngineError::InvalidInput(format!("duplicate card {c}")));
            }
            set |= c.mask();
        }
        Ok(CardSet(set))
    }

    pub fn contains(self, card: Card) -> bool {
        self.0 & card.mask() != 0
    }

    pub fn insert(&mut self, card: Card) {
        self.0 |= card.mask();
    }

    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: CardSet) -> CardSet {
        CardSet(self.0 | other.0)
    }

    pub fn cards(self) -> impl Iterator<Item = Card> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let i = bits.trailing_zeros() as u8;
            bits &= bits - 1;
            Some(Card(i))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip_covers_the_deck() {
        let deck = full_deck();
        assert_eq!(deck.len(), 52);
        let mut seen = std::collections::HashSet::new();
        for c in &deck {
            let text = c.to_string();
            assert_eq!(text.len(), 2);
            assert_eq!(text.parse::<Card>().unwrap(), *c);
            assert!(seen.insert(text));
        }
        assert_eq!("As".parse::<Card>().unwrap(), Card::new(12, 3));
        assert_eq!("2c".parse::<Card>().unwrap().index(), 0);
    }

    #[test]
    fn rejects_malformed_text() {
        for bad in ["", "A", "Ax", "1s", "Ass"] {
            assert!(bad.parse::<Card>().is_err(), "{bad}");
        }
        assert!(parse_cards("AsK").is_err());
        assert_eq!(parse_cards("As Kd, 7c").unwrap().len(), 3);
    }

    #[test]
    fn card_set_detects_duplicates() {
        let cards = parse_cards("AsAs").unwrap();
        assert!(CardSet::from_cards(&cards).is_err());
        let set = CardSet::from_cards(&parse_cards("AsKd2c").unwrap()).unwrap();
        assert_eq!(set.len(), 3);
        let back: Vec<String> = set.cards().map(|c| c.to_string()).collect();
        assert_eq!(back, ["2c", "Kd", "As"]);
    }
}
