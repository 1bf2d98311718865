use std::time::Instant;

use rayon::prelude::*;

use super::candidates::{CandidateGenerator, CandidateSet};
use super::query::{FilterIndex, Query};
use crate::error::Result;
use crate::graph::{EntityId, KnowledgeGraph, Split, Triple};
use crate::metrics::{RankAccumulator, RankingMetrics};
use crate::models::PreparedScorer;

pub const HITS_AT: [usize; 3] = [1, 3, 10];

/// Filtered pessimistic rank of `gold` among `candidates`, or `None` when the
/// gold answer is not a candidate. `filter` holds the sorted true answers of
/// the query; those other than `gold` are skipped.
pub fn rank_query(
    scorer: &PreparedScorer<'_>,
    query: &Query,
    gold: EntityId,
    candidates: impl IntoIterator<Item = EntityId> + Clone,
    filter: &[EntityId],
) -> Option<u64> {
    if !candidates.clone().into_iter().any(|c| c == gold) {
        return None;
    }
    let score = |e: EntityId| {
        let t = query.triple(e);
        scorer.score(t.head, t.relation, t.tail)
    };
    let g = score(gold);
    let mut rank = 1;
    for c in candidates {
        if c != gold && filter.binary_search(&c).is_err() && score(c) >= g {
            rank += 1;
        }
    }
    Some(rank)
}

/// Full-traversal rank over every entity.
pub fn rank_full(scorer: &PreparedScorer<'_>, query: &Query, gold: EntityId, filter: &[EntityId]) -> u64 {
    let n = scorer.entity_count() as EntityId;
    rank_query(scorer, query, gold, 0..n, filter).expect("gold is an entity")
}

#[derive(Clone, Debug)]
pub struct QueryOutcome {
    pub query: Query,
    pub gold: EntityId,
    pub rank: Option<u64>,
    pub candidates: usize,
    pub wall_ms: f64,
}

#[derive(Clone, Debug)]
pub struct LinkPredictionReport {
    pub metrics: RankingMetrics,
    /// Tail then head query of every triple, in split order.
    pub outcomes: Vec<QueryOutcome>,
}

/// Filtered link prediction on `triples`, both directions per triple.
///
/// Without a generator every entity is ranked (full traversal). With one,
/// only its candidates are ranked and a missing gold answer counts as
/// reciprocal rank 0. Wall time covers candidate generation and ranking of
/// each query. Queries run on the current rayon pool; install a
/// single-thread pool for timing.
pub fn evaluate_queries(
    scorer: &PreparedScorer<'_>,
    kg: &KnowledgeGraph,
    triples: &[Triple],
    filter: &FilterIndex,
    generator: Option<&CandidateGenerator<'_>>,
) -> Result<LinkPredictionReport> {
    let r = kg.relation_count() as u32;
    let queries: Vec<(Query, EntityId)> = triples.iter().flat_map(Query::pair).collect();
    let outcomes: Vec<QueryOutcome> = queries
        .par_iter()
        .map_init(
            || generator.map(|g| g.scratch()),
            |scratch, &(query, gold)| {
                let start = Instant::now();
                let known = filter.answers(&query, r);
                let (rank, candidates) = match (generator, scratch.as_mut()) {
                    (Some(g), Some(scratch)) => {
                        let set = g.generate_with(&query, scratch)?;
                        (rank_query(scorer, &query, gold, set.candidates.iter().copied(), known), set.len())
                    }
                    _ => (Some(rank_full(scorer, &query, gold, known)), kg.entity_count()),
                };
                Ok(QueryOutcome {
                    query,
                    gold,
                    rank,
                    candidates,
                    wall_ms: start.elapsed().as_secs_f64() * 1e3,
                })
            },
        )
        .collect::<Result<_>>()?;

    let mut acc = RankAccumulator::new(&HITS_AT);
    let (mut ms, mut cands) = (0.0, 0.0);
    for o in &outcomes {
        acc.push(o.rank);
        ms += o.wall_ms;
        cands += o.candidates as f64;
    }
    let n = outcomes.len().max(1) as f64;
    let recall = generator.map(|_| outcomes.iter().filter(|o| o.rank.is_some()).count() as f64 / n);
    Ok(LinkPredictionReport {
        metrics: RankingMetrics {
            mode: if generator.is_some() { "ftai".into() } else { "full".into() },
            budget: generator.map(|g| g.config().budget),
            mrr: acc.mrr(),
            hits: acc.hits(),
            mean_query_ms: ms / n,
            mean_candidates: cands / n,
            recall_at_budget: recall,
            queries: acc.count(),
            misses: acc.misses(),
        },
        outcomes,
    })
}

/// [`evaluate_queries`] on a split with filtering against `filter_splits`.
pub fn evaluate_link_prediction(
    scorer: &PreparedScorer<'_>,
    kg: &KnowledgeGraph,
    split: Split,
    filter_splits: &[Split],
    generator: Option<&CandidateGenerator<'_>>,
) -> Result<LinkPredictionReport> {
    let filter = FilterIndex::build(kg, filter_splits);
    evaluate_queries(scorer, kg, kg.split(split), &filter, generator)
}

/// Candidate sets for both queries of each triple, with gold answers.
pub fn candidate_sets(generator: &CandidateGenerator<'_>, triples: &[Triple]) -> Result<(Vec<CandidateSet>, Vec<EntityId>)> {
    let queries: Vec<(Query, EntityId)> = triples.iter().flat_map(Query::pair).collect();
    let sets = queries
        .par_iter()
        .map_init(|| generator.scratch(), |scratch, (q, _)| generator.generate_with(q, scratch))
        .collect::<Result<Vec<_>>>()?;
    Ok((sets, queries.into_iter().map(|(_, g)| g).collect()))
}
