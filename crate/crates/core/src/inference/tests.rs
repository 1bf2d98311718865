use std::sync::Arc;

use super::*;
use crate::graph::{degree_priors, KnowledgeGraph, Split, Triple, UNBOUNDED};
use crate::models::{ModelKind, ModelSpec, ScoringModel};
use crate::rng::stream;

fn graph() -> KnowledgeGraph {
    let mut train = Vec::new();
    for i in 0..30u32 {
        train.push(Triple::new(i, i % 3, 30 + i % 7));
        train.push(Triple::new(i, 3, (i + 1) % 30));
    }
    let valid = vec![Triple::new(2, 0, 31), Triple::new(4, 1, 33)];
    let test = vec![Triple::new(5, 2, 36), Triple::new(6, 0, 30), Triple::new(7, 3, 9), Triple::new(8, 1, 32)];
    KnowledgeGraph::from_id_triples(37, 4, train, valid, test).unwrap()
}

fn model(kg: &KnowledgeGraph) -> ScoringModel {
    ScoringModel::new(&ModelSpec::new(ModelKind::TransE, 8, 4.0), kg.entity_count(), kg.relation_count(), &mut stream(1, "init")).unwrap()
}

fn uniform_cache(kg: &KnowledgeGraph) -> Arc<TypingCache> {
    let q = kg.directed_type_count();
    Arc::new(TypingCache::from_probs(q, vec![1.0 / q as f32; q * kg.entity_count()]).unwrap())
}

fn generator<'g>(kg: &'g KnowledgeGraph, scorer: &str, config: CandidateConfig) -> CandidateGenerator<'g> {
    let ctx = ScorerContext {
        priors: Arc::new(degree_priors(kg, 1.0).entity),
        typing: Some(uniform_cache(kg)),
    };
    CandidateGenerator::new(kg, config, scorer_registry().create(scorer, &ctx).unwrap()).unwrap()
}

/// Filtered rank computed directly from triple scores.
fn reference_rank(m: &ScoringModel, kg: &KnowledgeGraph, q: &Query, gold: u32) -> u64 {
    let all: Vec<Triple> = kg.train().iter().chain(kg.valid()).chain(kg.test()).copied().collect();
    let g = m.score_triple(q.triple(gold).head, q.relation, q.triple(gold).tail).unwrap();
    let mut rank = 1;
    for e in 0..kg.entity_count() as u32 {
        let t = q.triple(e);
        if e == gold || all.contains(&t) {
            continue;
        }
        if m.score_triple(t.head, t.relation, t.tail).unwrap() >= g {
            rank += 1;
        }
    }
    rank
}

#[test]
fn rank_contract() {
    let kg = graph();
    let m = model(&kg);
    let s = m.prepare();
    let q = Query::tail(0, 0);
    assert_eq!(rank_query(&s, &q, 5, [5u32], &[]), Some(1));
    assert_eq!(rank_query(&s, &q, 5, [1u32, 2], &[]), None);
}

#[test]
fn full_traversal_matches_reference() {
    let kg = graph();
    let m = model(&kg);
    let report = evaluate_link_prediction(&m.prepare(), &kg, Split::Test, &[Split::Train, Split::Valid, Split::Test], None).unwrap();
    for o in &report.outcomes {
        assert_eq!(o.rank, Some(reference_rank(&m, &kg, &o.query, o.gold)));
    }
    assert_eq!(report.metrics.queries, 8);
}

#[test]
fn all_pool_full_budget_reproduces_full_ranks() {
    let kg = graph();
    let m = model(&kg);
    let s = m.prepare();
    let splits = [Split::Train, Split::Valid, Split::Test];
    let full = evaluate_link_prediction(&s, &kg, Split::Test, &splits, None).unwrap();
    for scorer in ["typing", "degree"] {
        let g = generator(
            &kg,
            scorer,
            CandidateConfig {
                budget: kg.entity_count(),
                pool: PoolStrategy::All,
                ..CandidateConfig::default()
            },
        );
        let ftai = evaluate_link_prediction(&s, &kg, Split::Test, &splits, Some(&g)).unwrap();
        let a: Vec<_> = full.outcomes.iter().map(|o| o.rank).collect();
        let b: Vec<_> = ftai.outcomes.iter().map(|o| o.rank).collect();
        assert_eq!(a, b);
        assert_eq!(full.metrics.mrr, ftai.metrics.mrr);
        assert_eq!(full.metrics.hits, ftai.metrics.hits);
        assert_eq!(ftai.metrics.recall_at_budget, Some(1.0));
    }
}

#[test]
fn shortlist_ranks_never_exceed_full_ranks() {
    let kg = graph();
    let m = model(&kg);
    let s = m.prepare();
    let splits = [Split::Train, Split::Valid, Split::Test];
    let full = evaluate_link_prediction(&s, &kg, Split::Test, &splits, None).unwrap();
    let g = generator(&kg, "typing", CandidateConfig { budget: 6, ..CandidateConfig::default() });
    let ftai = evaluate_link_prediction(&s, &kg, Split::Test, &splits, Some(&g)).unwrap();
    for (f, c) in full.outcomes.iter().zip(&ftai.outcomes) {
        if let Some(rc) = c.rank {
            assert!(rc <= f.rank.unwrap());
        }
        assert!(c.candidates <= 6);
    }
}

#[test]
fn filtered_ranks_never_exceed_raw_ranks() {
    let kg = graph();
    let m = model(&kg);
    let s = m.prepare();
    let raw = evaluate_link_prediction(&s, &kg, Split::Test, &[], None).unwrap();
    let filtered = evaluate_link_prediction(&s, &kg, Split::Test, &[Split::Train, Split::Valid, Split::Test], None).unwrap();
    for (a, b) in raw.outcomes.iter().zip(&filtered.outcomes) {
        assert!(b.rank <= a.rank);
    }
}

#[test]
fn candidates_are_unique_and_within_budget() {
    let kg = graph();
    for budget in [1, 3, 10, 100] {
        let g = generator(&kg, "typing", CandidateConfig { budget, ..CandidateConfig::default() });
        for e in 0..kg.entity_count() as u32 {
            let set = g.generate(&Query::tail(e, 1)).unwrap();
            assert!(set.len() <= budget);
            let mut c = set.candidates.clone();
            c.sort_unstable();
            c.dedup();
            assert_eq!(c.len(), set.len());
        }
    }
}

#[test]
fn large_budget_keeps_whole_pool() {
    let kg = graph();
    let g = generator(&kg, "degree", CandidateConfig { budget: 1000, ..CandidateConfig::default() });
    let q = Query::tail(0, 1);
    let set = g.generate(&q).unwrap();
    let mut pool = kg.k_hop_neighborhood(0, 2, UNBOUNDED).unwrap();
    pool.extend_from_slice(kg.type_targets(q.query_type(4)));
    pool.sort_unstable();
    pool.dedup();
    let mut got = set.candidates.clone();
    got.sort_unstable();
    assert_eq!(got, pool);
}

#[test]
fn budget_one_keeps_unique_typed_neighbor() {
    // 0 -r0-> 1 is the only r0 edge; entity 2 is a 1-hop neighbor of another type
    let kg = KnowledgeGraph::from_id_triples(3, 2, vec![Triple::new(0, 0, 1), Triple::new(0, 1, 2)], vec![], vec![]).unwrap();
    // p(q|e): entity 1 carries the reverse r0 type
    let mut probs = vec![0.0f32; 3 * 4];
    probs[4 + 2] = 1.0;
    probs[2 * 4 + 3] = 1.0;
    let ctx = ScorerContext {
        priors: Arc::new(vec![1.0 / 3.0; 3]),
        typing: Some(Arc::new(TypingCache::from_probs(4, probs).unwrap())),
    };
    let cfg = CandidateConfig {
        budget: 1,
        pool: PoolStrategy::Neighborhood,
        hops: 1,
        ..CandidateConfig::default()
    };
    let g = CandidateGenerator::new(&kg, cfg, scorer_registry().create("typing", &ctx).unwrap()).unwrap();
    assert_eq!(g.generate(&Query::tail(0, 0)).unwrap().candidates, vec![1]);
}

#[test]
fn posterior_with_uniform_priors_follows_typing() {
    let cache = TypingCache::from_probs(2, vec![0.2, 0.8, 0.7, 0.3, 0.5, 0.5]).unwrap();
    let post = typing_posterior(&cache, &[1.0 / 3.0; 3], &[0, 1, 2], 1);
    assert!(post[0] > post[2] && post[2] > post[1]);
    assert!(typing_posterior(&cache, &[1.0], &[0], 0)[0] > 0.0);
}

#[test]
fn recall_examples() {
    let kg = graph();
    let g = generator(&kg, "degree", CandidateConfig { budget: 2, ..CandidateConfig::default() });
    let set = g.generate(&Query::tail(0, 0)).unwrap();
    let inside = set.candidates[0];
    let outside = (0..37).find(|e| !set.contains(*e)).unwrap();
    let sets = vec![set.clone(), set];
    assert_eq!(recall_at_budget(&sets, &[inside, inside]).unwrap(), 1.0);
    assert_eq!(recall_at_budget(&sets, &[outside, outside]).unwrap(), 0.0);
    assert_eq!(recall_at_budget(&sets, &[inside, outside]).unwrap(), 0.5);
    assert!(recall_at_budget(&sets, &[inside]).is_err());
}

#[test]
fn recall_grows_with_budget_and_included_ranks_only_worsen() {
    let kg = graph();
    let m = model(&kg);
    let s = m.prepare();
    let splits = [Split::Train, Split::Valid, Split::Test];
    let mut last_recall = 0.0;
    let mut last_ranks: Vec<Option<u64>> = Vec::new();
    for budget in [1, 2, 4, 8, 16, 37] {
        let g = generator(&kg, "typing", CandidateConfig { budget, ..CandidateConfig::default() });
        let (sets, gold) = candidate_sets(&g, kg.test()).unwrap();
        let recall = recall_at_budget(&sets, &gold).unwrap();
        assert!(recall >= last_recall);
        last_recall = recall;
        let ranks: Vec<Option<u64>> = evaluate_link_prediction(&s, &kg, Split::Test, &splits, Some(&g))
            .unwrap()
            .outcomes
            .iter()
            .map(|o| o.rank)
            .collect();
        for (old, new) in last_ranks.iter().zip(&ranks) {
            if let Some(o) = old {
                assert!(new.unwrap() >= *o);
            }
        }
        last_ranks = ranks;
    }
}

#[test]
fn typing_scorer_requires_cache() {
    let kg = graph();
    let ctx = ScorerContext {
        priors: Arc::new(vec![0.0; kg.entity_count()]),
        typing: None,
    };
    let scorer = scorer_registry().create("typing", &ctx).unwrap();
    assert!(CandidateGenerator::new(&kg, CandidateConfig::default(), scorer).is_err());
}

#[test]
fn head_queries_use_reverse_type() {
    let q = Query::head(3, 1);
    assert_eq!(q.query_type(4), 5);
    assert_eq!(q.answer_type(4), 1);
    assert_eq!(q.triple(9), Triple::new(9, 1, 3));
    assert_eq!(Query::tail(3, 1).answer_type(4), 5);
}
