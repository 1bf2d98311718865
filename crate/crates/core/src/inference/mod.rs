//! Typing-aware inference: shortlist answers by `p(e)·p(r|e)`, rank only
//! the shortlist with the embedding model, and compare against ranking every
//! entity.

pub mod candidates;
pub mod evaluate;
pub mod query;

#[cfg(test)]
mod tests;

pub use candidates::{
    recall_at_budget, scorer_registry, typing_posterior, CandidateConfig, CandidateGenerator, CandidateScorer, CandidateSet, CandidateSource,
    PoolStrategy, ScorerContext, TypingCache,
};
pub use evaluate::{candidate_sets, evaluate_link_prediction, evaluate_queries, rank_full, rank_query, LinkPredictionReport, QueryOutcome, HITS_AT};
pub use query::{Direction, FilterIndex, Query};
