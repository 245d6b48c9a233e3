//! Five-card hand classifier written from the rules, plus the 21-subset maximum for seven cards.

/// (category 0..=8, tiebreak ranks most significant first), with ranks 0 = deuce .. 12 = ace.
pub type Strength = (u8, Vec<u8>);

/// `cards` are (rank, suit) pairs.
pub fn classify5(cards: &[(u8, u8); 5]) -> Strength {
    let mut counts = [0u8; 13];
    for &(r, _) in cards {
        counts[r as usize] += 1;
    }
    let flush = cards.iter().all(|c| c.1 == cards[0].1);
    let mut distinct: Vec<u8> = (0..13u8).rev().filter(|&r| counts[r as usize] > 0).collect();
    let straight_top = if distinct.len() == 5 {
        if distinct[0] - distinct[4] == 4 {
            Some(distinct[0])
        } else if distinct == [12, 3, 2, 1, 0] {
            Some(3)
        } else {
            None
        }
    } else {
        None
    };
    // Group ranks by multiplicity, then by rank.
    distinct.sort_by(|&a, &b| counts[b as usize].cmp(&counts[a as usize]).then(b.cmp(&a)));
    let shape: Vec<u8> = distinct.iter().map(|&r| counts[r as usize]).collect();
    match (straight_top, flush) {
        (Some(t), true) => return (8, vec![t]),
        (Some(t), false) => return (4, vec![t]),
        _ => {}
    }
    let cat = match shape.as_slice() {
        [4, 1] => 7,
        [3, 2] => 6,
        _ if flush => 5,
        [3, 1, 1] => 3,
        [2, 2, 1] => 2,
        [2, 1, 1, 1] => 1,
        _ => 0,
    };
    (cat, distinct)
}

pub fn best_of_seven(cards: &[(u8, u8); 7]) -> Strength {
    let mut best: Option<Strength> = None;
    for skip_a in 0..7 {
        for skip_b in skip_a + 1..7 {
            let five: Vec<(u8, u8)> = (0..7)
                .filter(|&i| i != skip_a && i != skip_b)
                .map(|i| cards[i])
                .collect();
            let s = classify5(&five.try_into().unwrap());
            if best.as_ref().is_none_or(|b| s > *b) {
                best = Some(s);
            }
        }
    }
    best.unwrap()
}

/// Counts of each category over all C(52, 5) hands, from the classifier above.
pub fn five_card_census() -> [u64; 9] {
    let deck: Vec<(u8, u8)> = (0..52u8).map(|i| (i / 4, i % 4)).collect();
    let mut counts = [0u64; 9];
    for a in 0..52 {
        for b in a + 1..52 {
            for c in b + 1..52 {
                for d in c + 1..52 {
                    for e in d + 1..52 {
                        let h = [deck[a], deck[b], deck[c], deck[d], deck[e]];
                        counts[classify5(&h).0 as usize] += 1;
                    }
                }
            }
        }
    }
    counts
}

/// Textbook category counts of five-card poker hands, high card through straight flush.
pub const FIVE_CARD_COUNTS: [u64; 9] = [1_302_540, 1_098_240, 123_552, 54_912, 10_200, 5_108, 3_744, 624, 40];
