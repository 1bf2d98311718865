use crate::error::{KgeError, Result};

/// `log σ(x)`, stable for large `|x|`.
pub fn log_sigmoid(x: f64) -> f64 {
    -((-x).max(0.0) + (-x.abs()).exp().ln_1p())
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdversarialLoss {
    pub loss: f64,
    pub d_positive: f64,
    pub d_negatives: Vec<f64>,
    /// Softmax weights of the negatives, treated as constants.
    pub weights: Vec<f64>,
}

/// Self-adversarial negative sampling loss
/// `−log σ(s⁺) − Σ_i w_i log σ(−s_i)` with `w = softmax(α·s)` held constant
/// in the gradient. Scores already include any margin offset.
pub fn self_adversarial_loss(positive: f64, negatives: &[f64], temperature: f64) -> Result<AdversarialLoss> {
    if negatives.is_empty() {
        return Err(KgeError::InvalidArgument("self-adversarial loss needs at least one negative".into()));
    }
    if !positive.is_finite() || negatives.iter().any(|s| !s.is_finite()) {
        return Err(KgeError::NonFinite("score passed to self-adversarial loss".into()));
    }
    let max = negatives.iter().map(|&s| temperature * s).fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = negatives.iter().map(|&s| (temperature * s - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    let weights: Vec<f64> = exps.iter().map(|e| e / z).collect();

    let mut loss = -log_sigmoid(positive);
    let d_positive = -sigmoid(-positive);
    let mut d_negatives = Vec::with_capacity(negatives.len());
    for (&s, &w) in negatives.iter().zip(&weights) {
        loss -= w * log_sigmoid(-s);
        d_negatives.push(w * sigmoid(s));
    }
    Ok(AdversarialLoss {
        loss,
        d_positive,
        d_negatives,
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_points() {
        let out = self_adversarial_loss(0.0, &[0.0], 0.0).unwrap();
        assert!((out.loss - 2.0 * std::f64::consts::LN_2).abs() < 1e-15);
        let out = self_adversarial_loss(1.0, &[0.3, -2.0, 5.0, 1.0], 0.0).unwrap();
        assert!(out.weights.iter().all(|&w| (w - 0.25).abs() < 1e-15));
    }

    #[test]
    fn saturates_to_zero() {
        let out = self_adversarial_loss(800.0, &[-800.0, -900.0], 1.0).unwrap();
        assert!(out.loss >= 0.0 && out.loss < 1e-300);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(self_adversarial_loss(f64::INFINITY, &[0.0], 1.0).is_err());
        assert!(self_adversarial_loss(0.0, &[f64::NAN], 1.0).is_err());
        assert!(self_adversarial_loss(0.0, &[], 1.0).is_err());
    }

    #[test]
    fn log_sigmoid_is_stable() {
        assert!((log_sigmoid(0.0) + std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(log_sigmoid(-1000.0), -1000.0);
        assert!(log_sigmoid(1000.0) <= 0.0 && log_sigmoid(1000.0) > -1e-300);
    }
}
