use serde::{Deserialize, Serialize};

use super::RlError;
use crate::engine::{HandState, Seat};

/// A batch of per-sample quantities. All vectors have the same length.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossInputs {
    /// Probability ratio of the current policy over the behavior policy.
    pub ratio: Vec<f64>,
    pub advantage: Vec<f64>,
    /// Discounted return.
    pub returns: Vec<f64>,
    /// Value prediction.
    pub values: Vec<f64>,
    /// Chips the player has committed; `-delta2` is the value of folding.
    pub delta2: Vec<f64>,
    /// Chips the opponent has committed; the value when the opponent folds.
    pub delta3: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClipConfig {
    pub epsilon: f64,
    /// Upper bound on the ratio for negative advantages; must exceed `1 + epsilon`.
    pub delta1: f64,
}

impl Default for ClipConfig {
    fn default() -> Self {
        ClipConfig {
            epsilon: 0.2,
            delta1: 3.0,
        }
    }
}

impl ClipConfig {
    pub fn validate(&self) -> Result<(), RlError> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(RlError::Config(format!("epsilon {} must lie in (0, 1)", self.epsilon)));
        }
        if !(self.delta1.is_finite() && self.delta1 > 1.0 + self.epsilon) {
            return Err(RlError::Config(format!(
                "delta1 {} must be greater than 1 + epsilon = {}",
                self.delta1,
                1.0 + self.epsilon
            )));
        }
        Ok(())
    }
}

pub fn clip(x: f64, lo: f64, hi: f64) -> f64 {
    x.max(lo).min(hi)
}

/// Standard clipped surrogate `min(r·A, clip(r, 1-ε, 1+ε)·A)`.
pub fn ppo_clip_term(r: f64, a: f64, epsilon: f64) -> f64 {
    (r * a).min(clip(r, 1.0 - epsilon, 1.0 + epsilon) * a)
}

/// Trinal-clip surrogate. For negative advantages the ratio is clipped from below by its
/// PPO-clipped value and from above by `delta1`; for the rest it is the standard surrogate.
pub fn trinal_clip_term(r: f64, a: f64, epsilon: f64, delta1: f64) -> f64 {
    if a < 0.0 {
        clip(r, clip(r, 1.0 - epsilon, 1.0 + epsilon), delta1) * a
    } else {
        ppo_clip_term(r, a, epsilon)
    }
}

/// Derivative of `trinal_clip_term` in `r`, taking the right-hand limit at kinks.
fn trinal_clip_term_dr(r: f64, a: f64, epsilon: f64, delta1: f64) -> f64 {
    let active = if a < 0.0 {
        r >= 1.0 - epsilon && r < delta1
    } else {
        r < 1.0 + epsilon
    };
    if active {
        a
    } else {
        0.0
    }
}

fn check_finite(name: &str, xs: &[f64], n: usize) -> Result<(), RlError> {
    if xs.len() != n {
        return Err(RlError::Input(format!("{name} has {} samples, expected {n}", xs.len())));
    }
    if let Some(i) = xs.iter().position(|x| !x.is_finite()) {
        return Err(RlError::Input(format!("{name}[{i}] is not finite")));
    }
    Ok(())
}

impl LossInputs {
    pub fn len(&self) -> usize {
        self.ratio.len().max(self.returns.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn validate_policy(&self) -> Result<usize, RlError> {
        let n = self.ratio.len();
        if n == 0 {
            return Err(RlError::Input("empty batch".into()));
        }
        check_finite("ratio", &self.ratio, n)?;
        check_finite("advantage", &self.advantage, n)?;
        if let Some(i) = self.ratio.iter().position(|r| *r < 0.0) {
            return Err(RlError::Input(format!("ratio[{i}] is negative")));
        }
        Ok(n)
    }

    fn validate_value(&self) -> Result<usize, RlError> {
        let n = self.returns.len();
        if n == 0 {
            return Err(RlError::Input("empty batch".into()));
        }
        check_finite("returns", &self.returns, n)?;
        check_finite("values", &self.values, n)?;
        check_finite("delta2", &self.delta2, n)?;
        check_finite("delta3", &self.delta3, n)?;
        if let Some(i) = (0..n).find(|&i| self.delta2[i] < 0.0 || self.delta3[i] < 0.0) {
            return Err(RlError::Input(format!("delta2/delta3 at {i} are negative")));
        }
        Ok(n)
    }

    /// Value target clamped to the chips either side can lose.
    pub fn clipped_return(&self, i: usize) -> f64 {
        clip(self.returns[i], -self.delta2[i], self.delta3[i])
    }
}

/// Batch mean of the trinal-clip surrogate (an objective; training minimizes its negative).
pub fn trinal_clip_policy_loss(inputs: &LossInputs, cfg: &ClipConfig) -> Result<f64, RlError> {
    cfg.validate()?;
    let n = inputs.validate_policy()?;
    let sum: f64 = (0..n)
        .map(|i| trinal_clip_term(inputs.ratio[i], inputs.advantage[i], cfg.epsilon, cfg.delta1))
        .sum();
    Ok(sum / n as f64)
}

/// Gradient of `trinal_clip_policy_loss` with respect to each ratio.
pub fn trinal_clip_policy_grad(inputs: &LossInputs, cfg: &ClipConfig) -> Result<Vec<f64>, RlError> {
    cfg.validate()?;
    let n = inputs.validate_policy()?;
    Ok((0..n)
        .map(|i| trinal_clip_term_dr(inputs.ratio[i], inputs.advantage[i], cfg.epsilon, cfg.delta1) / n as f64)
        .collect())
}

/// Mean squared error against the clamped return.
pub fn trinal_clip_value_loss(inputs: &LossInputs) -> Result<f64, RlError> {
    let n = inputs.validate_value()?;
    let sum: f64 = (0..n)
        .map(|i| (inputs.clipped_return(i) - inputs.values[i]).powi(2))
        .sum();
    Ok(sum / n as f64)
}

/// Gradient of `trinal_clip_value_loss` with respect to each value prediction.
pub fn trinal_clip_value_grad(inputs: &LossInputs) -> Result<Vec<f64>, RlError> {
    let n = inputs.validate_value()?;
    Ok((0..n)
        .map(|i| -2.0 * (inputs.clipped_return(i) - inputs.values[i]) / n as f64)
        .collect())
}

/// Plain PPO clipped surrogate and unclipped squared-return value loss.
pub fn ppo_reference_losses(inputs: &LossInputs, epsilon: f64) -> Result<(f64, f64), RlError> {
    ClipConfig {
        epsilon,
        delta1: f64::MAX,
    }
    .validate()?;
    let n = inputs.validate_policy()?;
    let p: f64 = (0..n)
        .map(|i| ppo_clip_term(inputs.ratio[i], inputs.advantage[i], epsilon))
        .sum();
    let m = inputs.validate_value()?;
    let v: f64 = (0..m).map(|i| (inputs.returns[i] - inputs.values[i]).powi(2)).sum();
    Ok((p / n as f64, v / m as f64))
}

/// `(delta2, delta3)` for `seat`: the chips it and its opponent have put in over the hand.
/// On a finished hand the interval `[-delta2, delta3]` contains the seat's result.
pub fn value_clip_bounds(state: &HandState, seat: Seat) -> (f64, f64) {
    (state.contribution(seat) as f64, state.contribution(1 - seat) as f64)
}
