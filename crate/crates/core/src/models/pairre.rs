use super::transe::sign;
use super::{ModelKind, ModelOptions, ScoringFunction};

/// `γ − ‖h ∘ r_H − t ∘ r_T‖₁`. Each relation row stores `r_H` then `r_T`.
#[derive(Debug)]
pub struct PairRE {
    gamma: f64,
}

impl PairRE {
    pub fn new(opts: &ModelOptions) -> Self {
        Self { gamma: opts.gamma }
    }
}

impl ScoringFunction for PairRE {
    fn kind(&self) -> ModelKind {
        ModelKind::PairRE
    }

    fn relation_dim(&self, dim: usize) -> usize {
        2 * dim
    }

    fn is_distance(&self) -> bool {
        true
    }

    fn score(&self, h: &[f64], r: &[f64], t: &[f64]) -> f64 {
        let d = h.len();
        let (rh, rt) = r.split_at(d);
        let dist: f64 = (0..d).map(|k| (h[k] * rh[k] - t[k] * rt[k]).abs()).sum();
        self.gamma - dist
    }

    fn accumulate_grad(&self, h: &[f64], r: &[f64], t: &[f64], upstream: f64, gh: &mut [f64], gr: &mut [f64], gt: &mut [f64]) {
        let d = h.len();
        let (rh, rt) = r.split_at(d);
        let (grh, grt) = gr.split_at_mut(d);
        for k in 0..d {
            let s = sign(h[k] * rh[k] - t[k] * rt[k]);
            let g = -upstream * s;
            gh[k] += g * rh[k];
            grh[k] += g * h[k];
            gt[k] -= g * rt[k];
            grt[k] -= g * t[k];
        }
    }
}
