//! Head-to-head evaluation: sample-mean and duplicate matches, AIVAT, local best response,
//! exact exploitability on toy games and ELO ratings.

mod adapter;
mod aivat;
mod elo;
mod exact;
mod lbr;
mod matches;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::agents::AgentError;
use crate::engine::EngineError;
use crate::gametree::GameError;
use crate::protocol::ProtocolError;

pub use adapter::{parametric_action, random_search, BestResponseEnv, SearchResult, Step};
pub use aivat::{aivat_estimate, AivatConfig, AivatResult, Baseline, EquityBaseline, ExactTreeBaseline, ZeroBaseline};
pub use elo::{elo_update, expected_score, EloTable, Outcome, DEFAULT_K};
pub use exact::{agent_exploitability, agent_profile, exact_match_value, Exploitability};
pub use lbr::{lbr_evaluate, BeliefRange, LbrConfig, LbrResult};
pub use matches::{
    deal_seed, play_hand, report_from_histories, run_match, run_match_with, HandHistoryRecord, MatchMode, MatchPlan,
    MatchResult,
};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("history record {index}: {message}")]
    History { index: usize, message: String },
    #[error("invalid evaluation input: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    SampleMean,
    Duplicate,
    Aivat,
    Lbr,
}

impl Estimator {
    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::SampleMean => "sample_mean",
            Estimator::Duplicate => "duplicate",
            Estimator::Aivat => "aivat",
            Estimator::Lbr => "lbr",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunningPoint {
    /// Number of samples averaged so far.
    pub index: u64,
    pub mean: f64,
    pub ci_half_width: f64,
}

/// Summary of a set of per-hand (or per-pair) samples, all in mbb for `agents[0]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub agents: [String; 2],
    pub estimator: Estimator,
    pub hands: u64,
    /// Independent samples averaged: hands, or pairs in duplicate mode.
    pub samples: u64,
    pub mean_mbb: [f64; 2],
    /// Unbiased variance of one sample.
    pub variance: f64,
    pub std_error: f64,
    /// 95% interval for `agents[0]`.
    pub ci95: [f64; 2],
    /// Variance of the plain estimator over this estimator's, when both were measured.
    pub variance_reduction: Option<f64>,
    pub flags: Vec<String>,
    pub running: Vec<RunningPoint>,
}

/// Sum with a fixed pairwise grouping, so the result depends only on the sample order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Mean and unbiased variance.
pub fn mean_variance(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    (mean, pairwise_sum(&sq) / (n - 1.0))
}

const Z95: f64 = 1.959_963_984_540_054;
const RUNNING_POINTS: usize = 200;

impl EvalReport {
    pub fn from_samples(agents: [String; 2], estimator: Estimator, hands: u64, samples: &[f64]) -> EvalReport {
        let (mean, variance) = mean_variance(samples);
        let n = samples.len().max(1) as f64;
        let std_error = (variance / n).sqrt();
        let mut running = Vec::new();
        let step = (samples.len() / RUNNING_POINTS).max(1);
        let mut sum = 0.0;
        let mut sq = 0.0;
        for (i, x) in samples.iter().enumerate() {
            sum += x;
            sq += x * x;
            let k = i + 1;
            if k % step == 0 || k == samples.len() {
                let m = sum / k as f64;
                let var = if k > 1 {
                    ((sq - k as f64 * m * m) / (k as f64 - 1.0)).max(0.0)
                } else {
                    0.0
                };
                running.push(RunningPoint {
                    index: k as u64,
                    mean: m,
                    ci_half_width: Z95 * (var / k as f64).sqrt(),
                });
            }
        }
        EvalReport {
            agents,
            estimator,
            hands,
            samples: samples.len() as u64,
            mean_mbb: [mean, -mean],
            variance,
            std_error,
            ci95: [mean - Z95 * std_error, mean + Z95 * std_error],
            variance_reduction: None,
            flags: Vec::new(),
            running,
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "estimator      {}", self.estimator.as_str());
        let _ = writeln!(s, "hands          {}", self.hands);
        let _ = writeln!(s, "samples        {}", self.samples);
        for (name, mean) in self.agents.iter().zip(self.mean_mbb) {
            let _ = writeln!(s, "{name:<14} {mean:.3} mbb/h");
        }
        let _ = writeln!(s, "variance       {:.3}", self.variance);
        let _ = writeln!(s, "std error      {:.3}", self.std_error);
        let _ = writeln!(s, "95% CI         [{:.3}, {:.3}]", self.ci95[0], self.ci95[1]);
        if let Some(r) = self.variance_reduction {
            let _ = writeln!(s, "var reduction  {r:.3}");
        }
        for f in &self.flags {
            let _ = writeln!(s, "flag           {f}");
        }
        s
    }

    /// Plot-ready running estimate: sample index, running mean and CI bounds.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,mean_mbb,ci_low,ci_high\n");
        for p in &self.running {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                p.index,
                p.mean,
                p.mean - p.ci_half_width,
                p.mean + p.ci_half_width
            );
        }
        s
    }
}
