use super::{ModelKind, ScoringFunction};

/// `Re⟨h, r, conj(t)⟩` over interleaved `(re, im)` pairs.
#[derive(Debug, Default)]
pub struct ComplEx;

impl ScoringFunction for ComplEx {
    fn kind(&self) -> ModelKind {
        ModelKind::ComplEx
    }

    fn relation_dim(&self, dim: usize) -> usize {
        dim
    }

    fn requires_even_dim(&self) -> bool {
        true
    }

    fn is_distance(&self) -> bool {
        false
    }

    fn score(&self, h: &[f64], r: &[f64], t: &[f64]) -> f64 {
        h.chunks_exact(2)
            .zip(r.chunks_exact(2))
            .zip(t.chunks_exact(2))
            .map(|((h, r), t)| {
                let (hr, hi, rr, ri, tr, ti) = (h[0], h[1], r[0], r[1], t[0], t[1]);
                hr * rr * tr + hi * rr * ti + hr * ri * ti - hi * ri * tr
            })
            .sum()
    }

    fn accumulate_grad(&self, h: &[f64], r: &[f64], t: &[f64], upstream: f64, gh: &mut [f64], gr: &mut [f64], gt: &mut [f64]) {
        for k in (0..h.len()).step_by(2) {
            let (hr, hi, rr, ri, tr, ti) = (h[k], h[k + 1], r[k], r[k + 1], t[k], t[k + 1]);
            gh[k] += upstream * (rr * tr + ri * ti);
            gh[k + 1] += upstream * (rr * ti - ri * tr);
            gr[k] += upstream * (hr * tr + hi * ti);
            gr[k + 1] += upstream * (hr * ti - hi * tr);
            gt[k] += upstream * (hr * rr - hi * ri);
            gt[k + 1] += upstream * (hi * rr + hr * ri);
        }
    }
}
