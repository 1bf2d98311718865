//! Typing objectives: pairwise ranking of observed over unobserved types,
//! and cross entropy on the masked type.

use std::fmt::Debug;

use crate::error::{KgeError, Result};
use crate::graph::DirectedType;
use crate::registry::Registry;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TypingLossConfig {
    /// Scale `γ_s`.
    pub scale: f64,
    pub margin: f64,
}

impl Default for TypingLossConfig {
    fn default() -> Self {
        Self { scale: 2.0, margin: 0.1 }
    }
}

impl TypingLossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(KgeError::InvalidArgument("typing loss scale must be > 0".into()));
        }
        if !self.margin.is_finite() {
            return Err(KgeError::InvalidArgument("typing loss margin must be finite".into()));
        }
        Ok(())
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log[1 + Σ_{j∈uno} Σ_{i∈obs} exp(γ(s_j − s_i + m))]`, evaluated in the
/// factorized form `softplus(LSE_j γ(s_j+m) + LSE_i(−γ s_i))`.
///
/// `observed` must be non-empty; every index not in it is unobserved.
pub fn ranking_loss(logits: &[f64], observed: &[DirectedType], scale: f64, margin: f64) -> Result<(f64, Vec<f64>)> {
    if observed.is_empty() {
        return Err(KgeError::InvalidArgument("ranking loss needs at least one observed type".into()));
    }
    let mut is_obs = vec![false; logits.len()];
    for &q in observed {
        let slot = is_obs.get_mut(q as usize).ok_or(KgeError::OutOfRange {
            kind: "directed type",
            id: q as u64,
            count: logits.len() as u64,
        })?;
        *slot = true;
    }
    let mut grad = vec![0.0; logits.len()];
    if is_obs.iter().all(|&o| o) {
        return Ok((0.0, grad));
    }
    let uno = (0..logits.len()).filter(|&j| !is_obs[j]).map(|j| scale * (logits[j] + margin));
    let obs = (0..logits.len()).filter(|&i| is_obs[i]).map(|i| -scale * logits[i]);
    let a = log_sum_exp(uno);
    let b = log_sum_exp(obs);
    let x = a + b;
    let loss = softplus(x);
    let sig = sigmoid(x);
    for (j, g) in grad.iter_mut().enumerate() {
        *g = if is_obs[j] {
            -sig * scale * (-scale * logits[j] - b).exp()
        } else {
            sig * scale * (scale * (logits[j] + margin) - a).exp()
        };
    }
    Ok((loss, grad))
}

/// Cross entropy of `softmax(logits)` against `target`.
pub fn softmax_loss(logits: &[f64], target: DirectedType) -> Result<(f64, Vec<f64>)> {
    let t = target as usize;
    if t >= logits.len() {
        return Err(KgeError::OutOfRange {
            kind: "directed type",
            id: target as u64,
            count: logits.len() as u64,
        });
    }
    let lse = log_sum_exp(logits.iter().copied());
    let mut grad: Vec<f64> = logits.iter().map(|&v| (v - lse).exp()).collect();
    grad[t] -= 1.0;
    Ok((lse - logits[t], grad))
}

/// Supervision for one masked example.
#[derive(Clone, Copy, Debug)]
pub struct TypingTarget<'a> {
    /// Sorted observed directed types of the target.
    pub observed: &'a [DirectedType],
    pub masked: DirectedType,
}

pub trait TypingLoss: Send + Sync + Debug {
    fn name(&self) -> &'static str;

    /// Loss and `∂loss/∂logits`.
    fn evaluate(&self, logits: &[f64], target: TypingTarget<'_>) -> Result<(f64, Vec<f64>)>;
}

#[derive(Debug)]
pub struct RankingLoss {
    pub config: TypingLossConfig,
}

impl TypingLoss for RankingLoss {
    fn name(&self) -> &'static str {
        "ranking"
    }

    fn evaluate(&self, logits: &[f64], target: TypingTarget<'_>) -> Result<(f64, Vec<f64>)> {
        ranking_loss(logits, target.observed, self.config.scale, self.config.margin)
    }
}

#[derive(Debug)]
pub struct SoftmaxLoss;

impl TypingLoss for SoftmaxLoss {
    fn name(&self) -> &'static str {
        "softmax"
    }

    fn evaluate(&self, logits: &[f64], target: TypingTarget<'_>) -> Result<(f64, Vec<f64>)> {
        softmax_loss(logits, target.masked)
    }
}

pub fn typing_loss_registry() -> Registry<dyn TypingLoss, TypingLossConfig> {
    let mut reg = Registry::new("typing loss");
    reg.register("ranking", |c: &TypingLossConfig| Box::new(RankingLoss { config: *c }) as Box<dyn TypingLoss>);
    reg.register("softmax", |_: &TypingLossConfig| Box::new(SoftmaxLoss) as Box<dyn TypingLoss>);
    reg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_unobserved_is_zero() {
        let (l, g) = ranking_loss(&[0.3, -1.0], &[0, 1], 2.0, 0.1).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn one_pair_equal_logits_is_log_two() {
        let (l, _) = ranking_loss(&[0.7, 0.7], &[0], 1.0, 0.0).unwrap();
        assert!((l - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn uniform_softmax_is_log_c() {
        let (l, _) = softmax_loss(&[0.25; 7], 3).unwrap();
        assert!((l - 7f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn saturated_softmax_goes_to_zero() {
        let (l, _) = softmax_loss(&[0.0, 60.0, 0.0], 1).unwrap();
        assert!(l < 1e-20);
    }

    #[test]
    fn large_logits_stay_finite() {
        let (l, g) = ranking_loss(&[1e3, -1e3, 5e2], &[1], 2.0, 0.1).unwrap();
        assert!(l.is_finite() && g.iter().all(|v| v.is_finite()));
        assert!(l > 1e3);
    }

    #[test]
    fn registry_names() {
        let reg = typing_loss_registry();
        assert_eq!(reg.create("Ranking", &TypingLossConfig::default()).unwrap().name(), "ranking");
        assert!(reg.create("hinge", &TypingLossConfig::default()).is_err());
    }
}
