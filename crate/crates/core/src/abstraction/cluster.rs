use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::histogram::{emd_unchecked, EquityHistogram};
use super::AbstractionError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentroidUpdate {
    /// Per-bin mean of the member histograms.
    BinMean,
    /// Per-bin median of the member CDFs, which minimizes summed EMD exactly.
    CdfMedian,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iterations: usize,
    pub seed: u64,
    pub update: CentroidUpdate,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            k: 8,
            max_iterations: 50,
            seed: 0,
            update: CentroidUpdate::BinMean,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Clustering {
    pub assignments: Vec<usize>,
    pub centroids: Vec<EquityHistogram>,
    /// Summed EMD from each point to its centroid, after initialization and after every
    /// iteration.
    pub distortion: Vec<f64>,
    pub iterations: usize,
}

fn nearest(p: &EquityHistogram, centroids: &[EquityHistogram]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = emd_unchecked(p, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn distortion(points: &[EquityHistogram], centroids: &[EquityHistogram], assign: &[usize]) -> f64 {
    points
        .iter()
        .zip(assign)
        .map(|(p, &a)| emd_unchecked(p, &centroids[a]))
        .sum()
}

fn distinct_count(points: &[EquityHistogram]) -> usize {
    let mut keys: Vec<Vec<u64>> = points
        .iter()
        .map(|p| p.bins.iter().map(|x| x.to_bits()).collect())
        .collect();
    keys.sort();
    keys.dedup();
    keys.len()
}

/// k-means++ seeding with squared EMD weights.
fn seed_centroids(points: &[EquityHistogram], k: usize, rng: &mut ChaCha8Rng) -> Vec<EquityHistogram> {
    let mut centroids = vec![points[rng.gen_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| emd_unchecked(p, &centroids[0]).powi(2)).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.gen::<f64>() * total;
            let mut idx = d2.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if u < w {
                    idx = i;
                    break;
                }
                u -= w;
            }
            // Floating-point slack can land on a zero-weight point at the end.
            if d2[idx] == 0.0 {
                d2.iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(i, _)| i)
                    .unwrap_or(idx)
            } else {
                idx
            }
        } else {
            break;
        };
        let c = points[pick].clone();
        for (p, d) in points.iter().zip(d2.iter_mut()) {
            *d = d.min(emd_unchecked(p, &c).powi(2));
        }
        centroids.push(c);
    }
    centroids
}

fn update_centroid(members: &[&EquityHistogram], bins: usize, update: CentroidUpdate) -> EquityHistogram {
    match update {
        CentroidUpdate::BinMean => {
            let mut c = EquityHistogram::zeros(bins);
            for m in members {
                for (a, b) in c.bins.iter_mut().zip(&m.bins) {
                    *a += b;
                }
            }
            let n = members.len() as f64;
            c.bins.iter_mut().for_each(|x| *x /= n);
            c
        }
        CentroidUpdate::CdfMedian => {
            let cdfs: Vec<Vec<f64>> = members.iter().map(|m| m.cdf()).collect();
            let mut median = Vec::with_capacity(bins);
            let mut column = Vec::with_capacity(members.len());
            for b in 0..bins {
                column.clear();
                column.extend(cdfs.iter().map(|c| c[b]));
                column.sort_by(f64::total_cmp);
                median.push(column[(column.len() - 1) / 2]);
            }
            EquityHistogram::from_cdf(&median)
        }
    }
}

/// k-means over equity histograms under EMD. Empty clusters are reseeded with the point
/// farthest from its centroid. With bin-mean updates, an iteration that would raise the
/// distortion is rolled back and the run stops, so the recorded distortion never increases.
pub fn kmeans(points: &[EquityHistogram], cfg: &KMeansConfig) -> Result<Clustering, AbstractionError> {
    if cfg.k == 0 {
        return Err(AbstractionError::Config("k must be at least 1".into()));
    }
    if points.is_empty() {
        return Err(AbstractionError::InvalidInput("no points to cluster".into()));
    }
    let bins = points[0].len();
    if bins == 0 || points.iter().any(|p| p.len() != bins) {
        return Err(AbstractionError::Mismatch("histograms differ in bin count".into()));
    }
    if points.iter().any(|p| p.bins.iter().any(|x| !x.is_finite() || *x < 0.0)) {
        return Err(AbstractionError::InvalidInput(
            "histogram has a negative or non-finite bin".into(),
        ));
    }
    let distinct = distinct_count(points);
    if cfg.k > distinct {
        return Err(AbstractionError::Config(format!(
            "k = {} exceeds the {distinct} distinct points",
            cfg.k
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut centroids = seed_centroids(points, cfg.k, &mut rng);
    let mut assign: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
    let mut history = vec![distortion(points, &centroids, &assign)];
    let mut iterations = 0;

    for _ in 0..cfg.max_iterations {
        iterations += 1;
        let mut members: Vec<Vec<&EquityHistogram>> = vec![Vec::new(); cfg.k];
        for (p, &a) in points.iter().zip(&assign) {
            members[a].push(p);
        }
        let mut next: Vec<EquityHistogram> = members
            .iter()
            .zip(&centroids)
            .map(|(m, old)| {
                if m.is_empty() {
                    old.clone()
                } else {
                    update_centroid(m, bins, cfg.update)
                }
            })
            .collect();
        let moved = distortion(points, &next, &assign);
        if moved > *history.last().unwrap() + 1e-12 {
            break;
        }
        let mut next_assign: Vec<usize> = points.iter().map(|p| nearest(p, &next).0).collect();
        reseed_empty(points, &mut next, &mut next_assign, cfg.k);
        let d = distortion(points, &next, &next_assign);
        let changed = next_assign != assign;
        centroids = next;
        assign = next_assign;
        history.push(d);
        if !changed {
            break;
        }
    }
    Ok(Clustering {
        assignments: assign,
        centroids,
        distortion: history,
        iterations,
    })
}

fn reseed_empty(points: &[EquityHistogram], centroids: &mut [EquityHistogram], assign: &mut [usize], k: usize) {
    loop {
        let mut counts = vec![0usize; k];
        for &a in assign.iter() {
            counts[a] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        // Farthest point among clusters that can spare one.
        let far = points
            .iter()
            .zip(assign.iter())
            .enumerate()
            .filter(|(_, (_, &a))| counts[a] > 1)
            .map(|(i, (p, &a))| (i, emd_unchecked(p, &centroids[a])))
            .max_by(|a, b| a.1.total_cmp(&b.1));
        let Some((i, d)) = far else {
            return;
        };
        if d == 0.0 {
            return;
        }
        centroids[empty] = points[i].clone();
        assign[i] = empty;
    }
}
