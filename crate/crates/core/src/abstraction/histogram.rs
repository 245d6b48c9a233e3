use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::equity::{equity, for_each_subset, EquityMethod};
use super::AbstractionError;
use crate::engine::{Card, CardSet, GameSpec};

/// Distribution over equally spaced win-probability bins on [0, 1].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquityHistogram {
    pub bins: Vec<f64>,
}

impl EquityHistogram {
    pub fn zeros(n: usize) -> EquityHistogram {
        EquityHistogram { bins: vec![0.0; n] }
    }

    /// All mass in the bin containing `equity`.
    pub fn point(equity: f64, n: usize) -> EquityHistogram {
        let mut h = EquityHistogram::zeros(n);
        h.bins[bin_of(equity, n)] = 1.0;
        h
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn bin_width(&self) -> f64 {
        1.0 / self.bins.len() as f64
    }

    pub fn cdf(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.bins
            .iter()
            .map(|b| {
                acc += b;
                acc
            })
            .collect()
    }

    pub fn from_cdf(cdf: &[f64]) -> EquityHistogram {
        let mut prev = 0.0;
        EquityHistogram {
            bins: cdf
                .iter()
                .map(|&c| {
                    let m = (c - prev).max(0.0);
                    prev = c;
                    m
                })
                .collect(),
        }
    }

    pub fn total(&self) -> f64 {
        self.bins.iter().sum()
    }
}

pub fn bin_of(equity: f64, n: usize) -> usize {
    ((equity * n as f64).floor() as usize).min(n - 1)
}

/// One-dimensional earth mover's distance: the L1 distance between the two CDFs times the bin
/// width.
pub fn emd(a: &EquityHistogram, b: &EquityHistogram) -> Result<f64, AbstractionError> {
    if a.len() != b.len() {
        return Err(AbstractionError::Mismatch(format!(
            "histograms have {} and {} bins",
            a.len(),
            b.len()
        )));
    }
    Ok(emd_unchecked(a, b))
}

pub(crate) fn emd_unchecked(a: &EquityHistogram, b: &EquityHistogram) -> f64 {
    let (mut ca, mut cb, mut total) = (0.0, 0.0, 0.0);
    for (x, y) in a.bins.iter().zip(&b.bins) {
        ca += x;
        cb += y;
        total += (ca - cb).abs();
    }
    total / a.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramConfig {
    pub bins: usize,
    /// Number of next-round card draws to sample; `None` enumerates all of them.
    pub continuations: Option<usize>,
    /// How each continuation's equity is computed.
    pub equity: EquityMethod,
    pub seed: u64,
}

impl Default for HistogramConfig {
    fn default() -> Self {
        HistogramConfig {
            bins: 16,
            continuations: Some(24),
            equity: EquityMethod::Auto { samples: 300, seed: 0 },
            seed: 0,
        }
    }
}

fn reseed(method: EquityMethod, seed: u64) -> EquityMethod {
    match method {
        EquityMethod::Exact => EquityMethod::Exact,
        EquityMethod::Auto { samples, .. } => EquityMethod::Auto { samples, seed },
        EquityMethod::MonteCarlo { samples, .. } => EquityMethod::MonteCarlo { samples, seed },
    }
}

/// Distribution of next-round equity over the cards the next round deals.
pub fn histogram(
    spec: &GameSpec,
    private: &[Card],
    board: &[Card],
    cfg: &HistogramConfig,
) -> Result<EquityHistogram, AbstractionError> {
    if cfg.bins == 0 {
        return Err(AbstractionError::Config("histogram needs at least one bin".into()));
    }
    let street = (0..spec.num_rounds())
        .find(|&s| spec.board_len(s) == board.len())
        .ok_or_else(|| AbstractionError::InvalidInput(format!("board of {} cards", board.len())))?;
    if street + 1 >= spec.num_rounds() {
        return Err(AbstractionError::InvalidInput(
            "no later round to build a histogram over; use scalar equity on the last round".into(),
        ));
    }
    let used = CardSet::from_cards(&private.iter().chain(board).copied().collect::<Vec<_>>())?;
    let rest: Vec<Card> = spec.deck().into_iter().filter(|c| !used.contains(*c)).collect();
    let draw = spec.board_len(street + 1) - board.len();

    let mut conts: Vec<Vec<Card>> = Vec::new();
    match cfg.continuations {
        None => for_each_subset(&rest, draw, &mut |c| conts.push(c.to_vec())),
        Some(n) => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            for _ in 0..n.max(1) {
                conts.push(sample(&mut rng, rest.len(), draw).iter().map(|i| rest[i]).collect());
            }
        }
    }
    let mut h = EquityHistogram::zeros(cfg.bins);
    let mass = 1.0 / conts.len() as f64;
    let mut next_board = board.to_vec();
    for (i, c) in conts.iter().enumerate() {
        next_board.truncate(board.len());
        next_board.extend_from_slice(c);
        let method = reseed(cfg.equity, cfg.seed.wrapping_add(i as u64 + 1));
        let e = equity(spec, private, &next_board, method)?;
        h.bins[bin_of(e.value, cfg.bins)] += mass;
    }
    Ok(h)
}
