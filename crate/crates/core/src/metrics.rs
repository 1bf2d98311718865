//! Rank bookkeeping shared by typing and link-prediction evaluation.

use std::collections::BTreeMap;

use serde::Serialize;

/// Pessimistic rank of `gold` among `scores`: one plus the number of other
/// admissible entries scoring at least as high. `skip(i)` excludes entry `i`
/// (filtered setting). Higher scores are better.
pub fn pessimistic_rank(scores: &[f64], gold: usize, mut skip: impl FnMut(usize) -> bool) -> u64 {
    let g = scores[gold];
    let mut rank = 1;
    for (i, &s) in scores.iter().enumerate() {
        if i != gold && s >= g && !skip(i) {
            rank += 1;
        }
    }
    rank
}

/// Streaming MRR / Hit@K over ranks, where `None` is a miss.
#[derive(Clone, Debug)]
pub struct RankAccumulator {
    ks: Vec<usize>,
    reciprocal: f64,
    hits: Vec<u64>,
    count: u64,
    misses: u64,
}

impl RankAccumulator {
    pub fn new(ks: &[usize]) -> Self {
        Self {
            ks: ks.to_vec(),
            reciprocal: 0.0,
            hits: vec![0; ks.len()],
            count: 0,
            misses: 0,
        }
    }

    pub fn push(&mut self, rank: Option<u64>) {
        self.count += 1;
        match rank {
            Some(r) => {
                self.reciprocal += 1.0 / r as f64;
                for (k, h) in self.ks.iter().zip(&mut self.hits) {
                    if r <= *k as u64 {
                        *h += 1;
                    }
                }
            }
            None => self.misses += 1,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn misses(&self) -> u64 {
        self.misses
    }

    pub fn mrr(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.reciprocal / self.count as f64
        }
    }

    pub fn hits(&self) -> BTreeMap<usize, f64> {
        self.ks
            .iter()
            .zip(&self.hits)
            .map(|(&k, &h)| (k, if self.count == 0 { 0.0 } else { h as f64 / self.count as f64 }))
            .collect()
    }
}

/// Aggregate link-prediction metrics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankingMetrics {
    pub mode: String,
    pub budget: Option<usize>,
    pub mrr: f64,
    pub hits: BTreeMap<usize, f64>,
    pub mean_query_ms: f64,
    pub mean_candidates: f64,
    pub recall_at_budget: Option<f64>,
    pub queries: u64,
    pub misses: u64,
}

impl RankingMetrics {
    pub fn hits_at(&self, k: usize) -> f64 {
        self.hits.get(&k).copied().unwrap_or(0.0)
    }
}
