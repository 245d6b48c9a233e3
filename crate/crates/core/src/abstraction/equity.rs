use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{showdown_strength, Card, CardSet, EngineError, GameSpec};

/// Exact enumeration is used when the number of (opponent holding, board completion) pairs is
/// at most this.
pub const EXACT_LIMIT: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquityMethod {
    /// Exact when small enough, otherwise Monte Carlo with the given samples and seed.
    Auto {
        samples: usize,
        seed: u64,
    },
    Exact,
    MonteCarlo {
        samples: usize,
        seed: u64,
    },
}

impl Default for EquityMethod {
    fn default() -> Self {
        EquityMethod::Auto { samples: 2000, seed: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Equity {
    /// Probability of winning against a uniformly random opponent holding, ties counting half.
    pub value: f64,
    pub std_error: f64,
    pub exact: bool,
    /// Number of (holding, board) outcomes evaluated.
    pub outcomes: u64,
}

pub(crate) fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r = 1u64;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

fn validate_cards(spec: &GameSpec, private: &[Card], board: &[Card]) -> Result<CardSet, EngineError> {
    if private.len() != spec.hole_cards() {
        return Err(EngineError::InvalidInput(format!(
            "expected {} private cards, got {}",
            spec.hole_cards(),
            private.len()
        )));
    }
    if board.len() > spec.total_board_cards() {
        return Err(EngineError::InvalidInput(format!(
            "board has {} cards, at most {} allowed",
            board.len(),
            spec.total_board_cards()
        )));
    }
    let all: Vec<Card> = private.iter().chain(board).copied().collect();
    let deck = spec.deck();
    if let Some(c) = all.iter().find(|c| !deck.contains(c)) {
        return Err(EngineError::InvalidInput(format!("card {c} not in deck")));
    }
    CardSet::from_cards(&all)
}

/// Visits every k-subset of `items` in lexicographic index order.
pub(crate) fn for_each_subset(items: &[Card], k: usize, f: &mut impl FnMut(&[Card])) {
    let n = items.len();
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    let mut buf: Vec<Card> = idx.iter().map(|&i| items[i]).collect();
    loop {
        f(&buf);
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        let i = i - 1;
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
        for j in i..k {
            buf[j] = items[idx[j]];
        }
    }
}

/// Win probability of `private` against a random opponent holding, given the visible board.
pub fn equity(spec: &GameSpec, private: &[Card], board: &[Card], method: EquityMethod) -> Result<Equity, EngineError> {
    let used = validate_cards(spec, private, board)?;
    let rest: Vec<Card> = spec.deck().into_iter().filter(|c| !used.contains(*c)).collect();
    let h = spec.hole_cards();
    let missing = spec.total_board_cards() - board.len();
    let outcomes = binomial(rest.len() as u64, missing as u64) * binomial((rest.len() - missing) as u64, h as u64);
    match method {
        EquityMethod::Exact => Ok(exact_equity(spec, private, board, &rest)),
        EquityMethod::Auto { .. } if outcomes <= EXACT_LIMIT => Ok(exact_equity(spec, private, board, &rest)),
        EquityMethod::Auto { samples, seed } | EquityMethod::MonteCarlo { samples, seed } => {
            Ok(sampled_equity(spec, private, board, &rest, samples.max(1), seed))
        }
    }
}

fn exact_equity(spec: &GameSpec, private: &[Card], board: &[Card], rest: &[Card]) -> Equity {
    let h = spec.hole_cards();
    let missing = spec.total_board_cards() - board.len();
    let mut total = 0.0;
    let mut count = 0u64;
    let mut full_board = board.to_vec();
    for_each_subset(rest, missing, &mut |extra| {
        full_board.truncate(board.len());
        full_board.extend_from_slice(extra);
        let mine = showdown_strength(spec, private, &full_board);
        let opp_pool: Vec<Card> = rest.iter().filter(|c| !extra.contains(c)).copied().collect();
        for_each_subset(&opp_pool, h, &mut |opp| {
            let theirs = showdown_strength(spec, opp, &full_board);
            total += score(mine, theirs);
            count += 1;
        });
    });
    Equity {
        value: total / count as f64,
        std_error: 0.0,
        exact: true,
        outcomes: count,
    }
}

fn score(mine: u32, theirs: u32) -> f64 {
    match mine.cmp(&theirs) {
        std::cmp::Ordering::Greater => 1.0,
        std::cmp::Ordering::Equal => 0.5,
        std::cmp::Ordering::Less => 0.0,
    }
}

fn sampled_equity(
    spec: &GameSpec,
    private: &[Card],
    board: &[Card],
    rest: &[Card],
    samples: usize,
    seed: u64,
) -> Equity {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = spec.hole_cards();
    let missing = spec.total_board_cards() - board.len();
    let mut full_board = board.to_vec();
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        let picks = sample(&mut rng, rest.len(), missing + h);
        full_board.truncate(board.len());
        let mut opp = Vec::with_capacity(h);
        for (j, i) in picks.iter().enumerate() {
            if j < missing {
                full_board.push(rest[i]);
            } else {
                opp.push(rest[i]);
            }
        }
        let s = score(
            showdown_strength(spec, private, &full_board),
            showdown_strength(spec, &opp, &full_board),
        );
        sum += s;
        sum_sq += s * s;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = if samples > 1 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Equity {
        value: mean,
        std_error: (var / n).sqrt(),
        exact: false,
        outcomes: samples as u64,
    }
}

/// Win probability against a weighted range of opponent holdings (weights need not be
/// normalized). Board completions are enumerated when there are at most `max_boards` of them,
/// otherwise `max_boards` completions are sampled with `seed`.
pub fn range_equity(
    spec: &GameSpec,
    private: &[Card],
    board: &[Card],
    range: &[(Vec<Card>, f64)],
    max_boards: usize,
    seed: u64,
) -> Result<f64, EngineError> {
    let used = validate_cards(spec, private, board)?;
    let rest: Vec<Card> = spec.deck().into_iter().filter(|c| !used.contains(*c)).collect();
    let missing = spec.total_board_cards() - board.len();
    let mut total = 0.0;
    let mut weight = 0.0;
    let mut full_board = board.to_vec();
    let mut visit = |extra: &[Card]| {
        full_board.truncate(board.len());
        full_board.extend_from_slice(extra);
        let mine = showdown_strength(spec, private, &full_board);
        for (opp, w) in range {
            if *w <= 0.0 || opp.iter().any(|c| used.contains(*c) || extra.contains(c)) {
                continue;
            }
            total += w * score(mine, showdown_strength(spec, opp, &full_board));
            weight += w;
        }
    };
    if binomial(rest.len() as u64, missing as u64) <= max_boards as u64 {
        for_each_subset(&rest, missing, &mut visit);
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut extra = Vec::with_capacity(missing);
        for _ in 0..max_boards.max(1) {
            extra.clear();
            extra.extend(sample(&mut rng, rest.len(), missing).iter().map(|i| rest[i]));
            visit(&extra);
        }
    }
    if weight == 0.0 {
        return Err(EngineError::InvalidInput(
            "range has no holding compatible with the visible cards".into(),
        ));
    }
    Ok(total / weight)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::parse_cards;

    #[test]
    fn subsets_are_enumerated_once() {
        let deck = GameSpec::hunl().deck();
        let mut n = 0;
        for_each_subset(&deck[..10], 3, &mut |_| n += 1);
        assert_eq!(n, 120);
        let mut n = 0;
        for_each_subset(&deck[..4], 0, &mut |s| {
            assert!(s.is_empty());
            n += 1
        });
        assert_eq!(n, 1);
    }

    #[test]
    fn nuts_on_the_river_have_full_equity() {
        let spec = GameSpec::hunl();
        let e = equity(
            &spec,
            &parse_cards("AsKs").unwrap(),
            &parse_cards("QsJsTs2c3d").unwrap(),
            EquityMethod::default(),
        )
        .unwrap();
        assert!(e.exact);
        assert_eq!(e.value, 1.0);
        assert_eq!(e.outcomes, 990);
    }

    #[test]
    fn sampling_is_deterministic_under_seed() {
        let spec = GameSpec::hunl();
        let aa = parse_cards("AsAc").unwrap();
        let m = EquityMethod::MonteCarlo {
            samples: 5000,
            seed: 42,
        };
        let a = equity(&spec, &aa, &[], m).unwrap();
        let b = equity(&spec, &aa, &[], m).unwrap();
        assert_eq!(a, b);
        assert!((a.value - 0.852).abs() < 4.0 * a.std_error + 1e-3, "{a:?}");
    }

    #[test]
    fn duplicates_are_rejected() {
        let spec = GameSpec::hunl();
        let r = equity(&spec, &parse_cards("AsAs").unwrap(), &[], EquityMethod::default());
        assert!(r.is_err());
    }

    #[test]
    fn leduc_equity_counts_pairs() {
        let spec = GameSpec::leduc();
        let e = equity(
            &spec,
            &parse_cards("Kh").unwrap(),
            &parse_cards("Ks").unwrap(),
            EquityMethod::Exact,
        )
        .unwrap();
        assert_eq!(e.value, 1.0);
    }
}
