use super::{ModelKind, ModelOptions, ScoringFunction};

/// `γ − ‖h + r − t‖`, with an L1 or L2 norm.
#[derive(Debug)]
pub struct TransE {
    gamma: f64,
    l2: bool,
}

impl TransE {
    pub fn l1(opts: &ModelOptions) -> Self {
        Self { gamma: opts.gamma, l2: false }
    }

    pub fn l2(opts: &ModelOptions) -> Self {
        Self { gamma: opts.gamma, l2: true }
    }
}

impl ScoringFunction for TransE {
    fn kind(&self) -> ModelKind {
        if self.l2 {
            ModelKind::TransEL2
        } else {
            ModelKind::TransE
        }
    }

    fn relation_dim(&self, dim: usize) -> usize {
        dim
    }

    fn is_distance(&self) -> bool {
        true
    }

    fn score(&self, h: &[f64], r: &[f64], t: &[f64]) -> f64 {
        let residual = h.iter().zip(r).zip(t).map(|((h, r), t)| h + r - t);
        let dist = if self.l2 {
            residual.map(|x| x * x).sum::<f64>().sqrt()
        } else {
            residual.map(f64::abs).sum::<f64>()
        };
        self.gamma - dist
    }

    fn accumulate_grad(&self, h: &[f64], r: &[f64], t: &[f64], upstream: f64, gh: &mut [f64], gr: &mut [f64], gt: &mut [f64]) {
        let scale = if self.l2 {
            let norm = h.iter().zip(r).zip(t).map(|((h, r), t)| (h + r - t).powi(2)).sum::<f64>().sqrt();
            if norm == 0.0 {
                return;
            }
            1.0 / norm
        } else {
            1.0
        };
        for k in 0..h.len() {
            let x = h[k] + r[k] - t[k];
            // d dist / d x
            let dx = if self.l2 { x * scale } else { sign(x) };
            let g = -upstream * dx;
            gh[k] += g;
            gr[k] += g;
            gt[k] -= g;
        }
    }
}

pub(super) fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
