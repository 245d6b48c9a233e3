use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cluster::{kmeans, KMeansConfig};
use super::equity::{equity, EquityMethod};
use super::histogram::{emd_unchecked, histogram, EquityHistogram, HistogramConfig};
use super::AbstractionError;
use crate::engine::{format_cards, parse_cards, Card, GameSpec, Variant};
use crate::gametree::CardAbstraction;

pub const PREFLOP_CLASSES: usize = 169;

const FORMAT: &str = "holdem-buckets";
const VERSION: u32 = 1;

/// Strategically distinct starting hand: 13 pairs, then 78 suited and 78 offsuit combinations.
pub fn preflop_class(private: &[Card]) -> Result<usize, AbstractionError> {
    let [a, b] = private else {
        return Err(AbstractionError::InvalidInput(format!(
            "preflop class needs two cards, got {}",
            private.len()
        )));
    };
    if a == b {
        return Err(AbstractionError::InvalidInput(format!("duplicate card {a}")));
    }
    let (hi, lo) = (a.rank().max(b.rank()) as usize, a.rank().min(b.rank()) as usize);
    if hi == lo {
        return Ok(hi);
    }
    let n = hi * (hi - 1) / 2 + lo;
    Ok(if a.suit() == b.suit() { 13 + n } else { 91 + n })
}

/// Conventional name of a preflop class, e.g. "AA", "AKs", "72o".
pub fn preflop_class_label(class: usize) -> Option<String> {
    use crate::engine::card::RANK_CHARS;
    if class < 13 {
        let r = RANK_CHARS[class];
        return Some(format!("{r}{r}"));
    }
    let (n, suffix) = match class {
        13..=90 => (class - 13, 's'),
        91..=168 => (class - 91, 'o'),
        _ => return None,
    };
    let mut hi = 1;
    while (hi + 1) * hi / 2 <= n {
        hi += 1;
    }
    let lo = n - hi * (hi - 1) / 2;
    Some(format!("{}{}{suffix}", RANK_CHARS[hi], RANK_CHARS[lo]))
}

fn permutations(items: &[u8]) -> Vec<Vec<u8>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

/// Suit-isomorphism representative: the lexicographically smallest (sorted private, sorted
/// board) over every relabeling of the suits the game's deck uses.
pub fn canonicalize(spec: &GameSpec, private: &[Card], board: &[Card]) -> (Vec<Card>, Vec<Card>) {
    let mut suits: Vec<u8> = spec.deck().iter().map(|c| c.suit()).collect();
    suits.sort_unstable();
    suits.dedup();
    let mut best: Option<(Vec<Card>, Vec<Card>)> = None;
    for perm in permutations(&suits) {
        let map = |c: &Card| {
            let pos = suits.iter().position(|&s| s == c.suit()).unwrap_or(0);
            Card::new(c.rank(), perm[pos])
        };
        let mut p: Vec<Card> = private.iter().map(map).collect();
        let mut b: Vec<Card> = board.iter().map(map).collect();
        p.sort_unstable();
        b.sort_unstable();
        let cand = (p, b);
        if best.as_ref().is_none_or(|cur| cand < *cur) {
            best = Some(cand);
        }
    }
    best.unwrap_or_default()
}

fn context_key(private: &[Card], board: &[Card]) -> String {
    format!("{}|{}", format_cards(private), format_cards(board))
}

pub(crate) fn fnv1a(text: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BucketConfig {
    /// Bucket count per round. HUNL preflop always uses the 169 lossless classes.
    pub buckets: Vec<usize>,
    pub histogram: HistogramConfig,
    /// Scalar equity on the last round, stored as a point-mass histogram.
    pub last_round_equity: EquityMethod,
    /// Random deals drawn per round to fit the clusters.
    pub samples_per_round: usize,
    pub kmeans: KMeansConfig,
    pub seed: u64,
}

impl BucketConfig {
    pub fn for_game(spec: &GameSpec) -> BucketConfig {
        let buckets = match spec.variant {
            Variant::Hunl => vec![PREFLOP_CLASSES, 50, 50, 50],
            Variant::Leduc => vec![3, 6],
            Variant::Kuhn => vec![3],
        };
        BucketConfig {
            buckets,
            histogram: HistogramConfig {
                equity: EquityMethod::MonteCarlo { samples: 200, seed: 0 },
                ..HistogramConfig::default()
            },
            last_round_equity: EquityMethod::Auto { samples: 1000, seed: 0 },
            samples_per_round: 500,
            kmeans: KMeansConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
struct RoundBuckets {
    centroids: Vec<EquityHistogram>,
    table: BTreeMap<String, u32>,
}

/// Card abstraction fitted by EMD k-means on equity histograms. Contexts seen while fitting
/// are looked up directly; anything else goes to the nearest centroid.
#[derive(Clone, Debug, PartialEq)]
pub struct BucketMap {
    spec: GameSpec,
    config: BucketConfig,
    rounds: Vec<RoundBuckets>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    game: GameSpec,
    config: BucketConfig,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Record {
    Centroid { round: usize, centroid: Vec<f64> },
    Context { round: usize, context: String, bucket: u32 },
}

impl BucketMap {
    pub fn build(spec: &GameSpec, config: BucketConfig) -> Result<BucketMap, AbstractionError> {
        if config.buckets.len() != spec.num_rounds() {
            return Err(AbstractionError::Config(format!(
                "{} bucket counts for a game with {} rounds",
                config.buckets.len(),
                spec.num_rounds()
            )));
        }
        if config.buckets.iter().any(|&k| k == 0) {
            return Err(AbstractionError::Config("bucket counts must be positive".into()));
        }
        let mut map = BucketMap {
            spec: *spec,
            config,
            rounds: vec![RoundBuckets::default(); spec.num_rounds()],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(map.config.seed);
        let deck = spec.deck();
        for round in 0..spec.num_rounds() {
            if map.lossless_preflop(round) {
                continue;
            }
            let mut contexts: BTreeMap<String, EquityHistogram> = BTreeMap::new();
            let mut cards = deck.clone();
            let need = spec.hole_cards() + spec.board_len(round);
            for _ in 0..map.config.samples_per_round {
                let (picked, _) = cards.partial_shuffle(&mut rng, need);
                let (private, board) = picked.split_at(spec.hole_cards());
                let (p, b) = canonicalize(spec, private, board);
                let key = context_key(&p, &b);
                if !contexts.contains_key(&key) {
                    let f = map.features(round, &p, &b, &key)?;
                    contexts.insert(key, f);
                }
            }
            let keys: Vec<String> = contexts.keys().cloned().collect();
            let points: Vec<EquityHistogram> = contexts.into_values().collect();
            let distinct = {
                let mut bits: Vec<Vec<u64>> = points
                    .iter()
                    .map(|p| p.bins.iter().map(|x| x.to_bits()).collect())
                    .collect();
                bits.sort();
                bits.dedup();
                bits.len()
            };
            let k = map.config.buckets[round].min(distinct);
            let kcfg = KMeansConfig {
                k,
                seed: map.config.seed.wrapping_add(round as u64),
                ..map.config.kmeans
            };
            let clustering = kmeans(&points, &kcfg)?;
            let rb = &mut map.rounds[round];
            rb.centroids = clustering.centroids;
            rb.table = keys
                .into_iter()
                .zip(clustering.assignments)
                .map(|(k, a)| (k, a as u32))
                .collect();
        }
        Ok(map)
    }

    fn lossless_preflop(&self, round: usize) -> bool {
        round == 0 && self.spec.variant == Variant::Hunl
    }

    fn is_last_round(&self, round: usize) -> bool {
        round + 1 == self.spec.num_rounds()
    }

    fn features(
        &self,
        round: usize,
        private: &[Card],
        board: &[Card],
        key: &str,
    ) -> Result<EquityHistogram, AbstractionError> {
        let seed = fnv1a(key) ^ self.config.seed;
        let bins = self.config.histogram.bins;
        if self.is_last_round(round) {
            let method = match self.config.last_round_equity {
                EquityMethod::Exact => EquityMethod::Exact,
                EquityMethod::Auto { samples, .. } => EquityMethod::Auto { samples, seed },
                EquityMethod::MonteCarlo { samples, .. } => EquityMethod::MonteCarlo { samples, seed },
            };
            let e = equity(&self.spec, private, board, method)?;
            return Ok(EquityHistogram::point(e.value, bins));
        }
        let cfg = HistogramConfig {
            seed,
            ..self.config.histogram
        };
        histogram(&self.spec, private, board, &cfg)
    }

    pub fn spec(&self) -> &GameSpec {
        &self.spec
    }

    pub fn config(&self) -> &BucketConfig {
        &self.config
    }

    pub fn num_buckets(&self, round: usize) -> usize {
        if self.lossless_preflop(round) {
            PREFLOP_CLASSES
        } else {
            self.rounds.get(round).map_or(0, |r| r.centroids.len())
        }
    }

    pub fn centroids(&self, round: usize) -> &[EquityHistogram] {
        self.rounds.get(round).map_or(&[], |r| &r.centroids)
    }

    /// Number of fitted contexts stored for a round.
    pub fn contexts(&self, round: usize) -> usize {
        self.rounds.get(round).map_or(0, |r| r.table.len())
    }

    pub fn try_bucket(&self, round: usize, private: &[Card], board: &[Card]) -> Result<u32, AbstractionError> {
        if round >= self.spec.num_rounds() || board.len() != self.spec.board_len(round) {
            return Err(AbstractionError::InvalidInput(format!(
                "{} board cards on round {round}",
                board.len()
            )));
        }
        if self.lossless_preflop(round) {
            return Ok(preflop_class(private)? as u32);
        }
        let (p, b) = canonicalize(&self.spec, private, board);
        let key = context_key(&p, &b);
        let rb = &self.rounds[round];
        if let Some(&bucket) = rb.table.get(&key) {
            return Ok(bucket);
        }
        let f = self.features(round, &p, &b, &key)?;
        let mut best = (0u32, f64::INFINITY);
        for (i, c) in rb.centroids.iter().enumerate() {
            let d = emd_unchecked(&f, c);
            if d < best.1 {
                best = (i as u32, d);
            }
        }
        Ok(best.0)
    }

    pub fn write_to(&self, w: impl Write) -> Result<(), AbstractionError> {
        let mut w = BufWriter::new(w);
        let header = Header {
            format: FORMAT.into(),
            version: VERSION,
            game: self.spec,
            config: self.config.clone(),
        };
        line(&mut w, &header)?;
        for (round, rb) in self.rounds.iter().enumerate() {
            for c in &rb.centroids {
                line(
                    &mut w,
                    &Record::Centroid {
                        round,
                        centroid: c.bins.clone(),
                    },
                )?;
            }
            for (context, &bucket) in &rb.table {
                line(
                    &mut w,
                    &Record::Context {
                        round,
                        context: context.clone(),
                        bucket,
                    },
                )?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from(r: impl BufRead) -> Result<BucketMap, AbstractionError> {
        let mut lines = r.lines();
        let first = lines
            .next()
            .ok_or_else(|| AbstractionError::Format("empty file".into()))??;
        let header: Header =
            serde_json::from_str(&first).map_err(|e| AbstractionError::Format(format!("bad header: {e}")))?;
        if header.format != FORMAT {
            return Err(AbstractionError::Format(format!(
                "not a bucket file: {}",
                header.format
            )));
        }
        if header.version != VERSION {
            return Err(AbstractionError::Format(format!(
                "unsupported version {} (expected {VERSION})",
                header.version
            )));
        }
        let spec = header.game;
        let mut rounds = vec![RoundBuckets::default(); spec.num_rounds()];
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: Record =
                serde_json::from_str(&line).map_err(|e| AbstractionError::Format(format!("line {}: {e}", n + 2)))?;
            let round = match &rec {
                Record::Centroid { round, .. } | Record::Context { round, .. } => *round,
            };
            let rb = rounds
                .get_mut(round)
                .ok_or_else(|| AbstractionError::Format(format!("line {}: round {round}", n + 2)))?;
            match rec {
                Record::Centroid { centroid, .. } => rb.centroids.push(EquityHistogram { bins: centroid }),
                Record::Context { context, bucket, .. } => {
                    let mut parts = context.split('|');
                    let ok = parts.next().is_some_and(|p| parse_cards(p).is_ok())
                        && parts.next().is_some_and(|b| b.is_empty() || parse_cards(b).is_ok());
                    if !ok {
                        return Err(AbstractionError::Format(format!("line {}: context {context:?}", n + 2)));
                    }
                    rb.table.insert(context, bucket);
                }
            }
        }
        for (round, rb) in rounds.iter().enumerate() {
            if let Some((ctx, b)) = rb.table.iter().find(|(_, &b)| b as usize >= rb.centroids.len()) {
                return Err(AbstractionError::Format(format!(
                    "round {round}: context {ctx} refers to bucket {b} of {}",
                    rb.centroids.len()
                )));
            }
        }
        Ok(BucketMap {
            spec,
            config: header.config,
            rounds,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), AbstractionError> {
        self.write_to(std::fs::File::create(path)?)
    }

    pub fn load(path: &Path) -> Result<BucketMap, AbstractionError> {
        BucketMap::read_from(BufReader::new(std::fs::File::open(path)?))
    }
}

fn line(w: &mut impl Write, value: &impl Serialize) -> Result<(), AbstractionError> {
    let text = serde_json::to_string(value).map_err(|e| AbstractionError::Format(e.to_string()))?;
    writeln!(w, "{text}")?;
    Ok(())
}

impl CardAbstraction for BucketMap {
    /// Panics on cards the engine would have rejected.
    fn bucket(&self, street: usize, private: &[Card], board: &[Card]) -> u32 {
        self.try_bucket(street, private, board)
            .unwrap_or_else(|e| panic!("bucket lookup on invalid cards: {e}"))
    }
}
