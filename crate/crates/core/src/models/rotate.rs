use std::f64::consts::PI;

use super::{ModelKind, ModelOptions, ScoringFunction};

/// `γ − Σ_k |h_k · e^{iθ_k} − t_k|` over interleaved complex entries.
///
/// A relation row stores one raw value per complex coordinate; the phase is
/// `θ = raw · π / (γ/d)`, so the default `[-γ/d, γ/d]` initialization covers
/// the whole circle.
#[derive(Debug)]
pub struct RotatE {
    gamma: f64,
    phase_scale: f64,
}

impl RotatE {
    pub fn new(opts: &ModelOptions) -> Self {
        let range = if opts.gamma > 0.0 { opts.gamma / opts.dim.max(1) as f64 } else { 1.0 };
        Self {
            gamma: opts.gamma,
            phase_scale: PI / range,
        }
    }
}

impl ScoringFunction for RotatE {
    fn kind(&self) -> ModelKind {
        ModelKind::RotatE
    }

    fn relation_dim(&self, dim: usize) -> usize {
        dim / 2
    }

    fn requires_even_dim(&self) -> bool {
        true
    }

    fn is_distance(&self) -> bool {
        true
    }

    fn score(&self, h: &[f64], r: &[f64], t: &[f64]) -> f64 {
        let dist: f64 = r
            .iter()
            .enumerate()
            .map(|(k, &raw)| {
                let (s, c) = (raw * self.phase_scale).sin_cos();
                let (hr, hi, tr, ti) = (h[2 * k], h[2 * k + 1], t[2 * k], t[2 * k + 1]);
                let dre = hr * c - hi * s - tr;
                let dim = hr * s + hi * c - ti;
                dre.hypot(dim)
            })
            .sum();
        self.gamma - dist
    }

    fn accumulate_grad(&self, h: &[f64], r: &[f64], t: &[f64], upstream: f64, gh: &mut [f64], gr: &mut [f64], gt: &mut [f64]) {
        for (k, &raw) in r.iter().enumerate() {
            let (s, c) = (raw * self.phase_scale).sin_cos();
            let (hr, hi, tr, ti) = (h[2 * k], h[2 * k + 1], t[2 * k], t[2 * k + 1]);
            let dre = hr * c - hi * s - tr;
            let dim = hr * s + hi * c - ti;
            let m = dre.hypot(dim);
            if m == 0.0 {
                continue;
            }
            let (ure, uim) = (dre / m, dim / m);
            let g = -upstream;
            gh[2 * k] += g * (ure * c + uim * s);
            gh[2 * k + 1] += g * (-ure * s + uim * c);
            gt[2 * k] -= g * ure;
            gt[2 * k + 1] -= g * uim;
            let dtheta = ure * (-hr * s - hi * c) + uim * (hr * c - hi * s);
            gr[k] += g * dtheta * self.phase_scale;
        }
    }
}
