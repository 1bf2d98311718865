use std::collections::BTreeSet;
use std::sync::Arc;

use kge_core::graph::{degree_priors, load_knowledge_graph, save_split, save_vocabulary, DatasetPaths, KnowledgeGraph, LoadOptions, Triple, Vocabulary, UNBOUNDED};
use kge_core::inference::{candidate_sets, recall_at_budget, scorer_registry, CandidateConfig, CandidateGenerator, ScorerContext, TypingCache};
use kge_core::models::{ModelKind, ModelSpec, ScoringModel};
use kge_core::rng::stream;
use kge_core::training::{read_checkpoint, write_checkpoint};
use kge_core::typing::{apply_relation_mask, extract_relational_subgraph, MaskOutcome, SubgraphConfig, TypingArchitecture, TypingNetwork};
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn arb_graph() -> impl Strategy<Value = KnowledgeGraph> {
    (3usize..25, 1usize..5).prop_flat_map(|(n, r)| {
        let triple = (0..n as u32, 0..r as u32, 0..n as u32).prop_map(|(h, r, t)| Triple::new(h, r, t));
        (Just(n), Just(r), prop::collection::vec(triple.clone(), 1..60), prop::collection::vec(triple, 0..6))
            .prop_map(|(n, r, train, test)| KnowledgeGraph::from_id_triples(n, r, train, vec![], test).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn adjacency_is_consistent(kg in arb_graph()) {
        let mut total = 0;
        for e in 0..kg.entity_count() as u32 {
            total += kg.incident(e).len();
        }
        prop_assert_eq!(total, 2 * kg.train().len());
        for t in kg.train() {
            prop_assert!(kg.out_edges(t.head).iter().any(|i| i.dtype == t.relation && i.neighbor == t.tail));
            let rev = kg.twin(t.relation);
            prop_assert!(kg.in_edges(t.tail).iter().any(|i| i.dtype == rev && i.neighbor == t.head));
            prop_assert!(kg.type_targets(t.relation).contains(&t.tail));
        }
        let degree_sum: u32 = kg.entity_degree().iter().sum();
        prop_assert_eq!(degree_sum as usize, 2 * kg.train().len());
    }

    #[test]
    fn priors_sum_to_one(kg in arb_graph(), smoothing in 0.0f64..3.0) {
        let p = degree_priors(&kg, smoothing);
        prop_assert!((p.entity.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!((p.relation.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(p.entity.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn neighborhoods_grow_with_hops(kg in arb_graph(), e in 0u32..3) {
        let mut last: BTreeSet<u32> = BTreeSet::new();
        for hops in 0..4 {
            let n: BTreeSet<u32> = kg.k_hop_neighborhood(e, hops, UNBOUNDED).unwrap().into_iter().collect();
            prop_assert!(last.is_subset(&n));
            prop_assert!(!n.contains(&e));
            last = n;
        }
    }

    #[test]
    fn dataset_files_round_trip(kg in arb_graph()) {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        save_split(&kg, kg.train(), &d.join("train.txt")).unwrap();
        save_split(&kg, kg.valid(), &d.join("valid.txt")).unwrap();
        save_split(&kg, kg.test(), &d.join("test.txt")).unwrap();
        save_vocabulary(kg.entities(), &d.join("entities.dict")).unwrap();
        save_vocabulary(kg.relations(), &d.join("relations.dict")).unwrap();
        let back = load_knowledge_graph(&DatasetPaths::from_dir(d), LoadOptions::default()).unwrap();
        prop_assert_eq!(back.train(), kg.train());
        prop_assert_eq!(back.entity_count(), kg.entity_count());
        // test triples touching entities unseen in train are skipped on load
        prop_assert!(back.test().len() <= kg.test().len());
    }

    #[test]
    fn param_count_formula(n in 1usize..5000, nr in 1usize..300, half in 1usize..64, rank in 0usize..64, kind in 0u8..5) {
        let kind = ModelKind::from_code(kind).unwrap();
        let d = 2 * half;
        let rel = match kind {
            ModelKind::PairRE => 2 * d,
            ModelKind::RotatE => d / 2,
            _ => d,
        };
        let mut spec = ModelSpec::new(kind, d, 6.0);
        let entity = if rank > 0 && rank < d {
            spec = spec.with_rank(rank);
            n * rank + rank * d
        } else {
            n * d
        };
        prop_assert_eq!(spec.param_count(n, nr).unwrap(), (entity + nr * rel) as u64);
    }

    #[test]
    fn checkpoints_round_trip_bitwise(kind in 0u8..5, half in 1usize..8, rank in 0usize..4, seed in 0u64..1000) {
        let kind = ModelKind::from_code(kind).unwrap();
        let d = 2 * half;
        let mut spec = ModelSpec::new(kind, d, 5.0);
        if rank > 0 && rank < d {
            spec = spec.with_rank(rank);
        }
        let m = ScoringModel::new(&spec, 7, 3, &mut stream(seed, "init")).unwrap();
        let bytes = write_checkpoint(&m);
        prop_assert_eq!(write_checkpoint(&read_checkpoint(&bytes).unwrap()), bytes);
    }

    #[test]
    fn masked_type_never_touches_the_target(kg in arb_graph(), seed in 0u64..100) {
        let cfg = SubgraphConfig { hops: 2, per_type_cap: 2, expand_cap: 8 };
        for e in 0..kg.entity_count() as u32 {
            let sub = extract_relational_subgraph(&kg, e, &cfg, &mut stream(seed, "s")).unwrap();
            // reverse pairing
            for edge in &sub.edges {
                let twin = kg.twin(edge.dtype);
                prop_assert!(sub.edges.iter().any(|x| x.src == edge.dst && x.dst == edge.src && x.dtype == twin));
            }
            if let MaskOutcome::Masked(ex) = apply_relation_mask(&sub, &kg, &mut stream(seed, "m")) {
                prop_assert!(ex.subgraph.mask_holds());
                prop_assert!(ex.subgraph.masked_types.contains(&ex.masked_type));
                prop_assert!(ex.observed.binary_search(&ex.masked_type).is_ok());
            }
        }
    }

    #[test]
    fn typing_is_inductive_under_relabeling(kg in arb_graph(), seed in 0u64..100) {
        let n = kg.entity_count();
        let mut perm: Vec<u32> = (0..n as u32).collect();
        perm.shuffle(&mut stream(seed, "perm"));
        let relabel: Vec<Triple> = kg.train().iter().map(|t| Triple::new(perm[t.head as usize], t.relation, perm[t.tail as usize])).collect();
        let kg2 = KnowledgeGraph::from_id_triples(n, kg.relation_count(), relabel, vec![], vec![]).unwrap();
        let net = TypingNetwork::new(TypingArchitecture::new(2, 4, kg.relation_count()), &mut stream(seed, "net")).unwrap();
        // no sampling, so both subgraphs are complete
        let cfg = SubgraphConfig { hops: 2, per_type_cap: usize::MAX, expand_cap: usize::MAX };
        for e in 0..n as u32 {
            let a = net.infer(&extract_relational_subgraph(&kg, e, &cfg, &mut stream(0, "s")).unwrap()).unwrap();
            let b = net.infer(&extract_relational_subgraph(&kg2, perm[e as usize], &cfg, &mut stream(0, "s")).unwrap()).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
            }
        }
    }

    #[test]
    fn edge_permutation_leaves_logits_unchanged(kg in arb_graph(), seed in 0u64..100) {
        let net = TypingNetwork::new(TypingArchitecture::new(3, 4, kg.relation_count()), &mut stream(seed, "net")).unwrap();
        for e in 0..kg.entity_count() as u32 {
            let sub = extract_relational_subgraph(&kg, e, &SubgraphConfig::default(), &mut stream(seed, "s")).unwrap();
            let mut shuffled = sub.clone();
            shuffled.edges.shuffle(&mut stream(seed, "p"));
            let a = net.infer(&sub).unwrap();
            let b = net.infer(&shuffled).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-6 * (1.0 + x.abs()));
            }
            // re-sorting restores the canonical order, and with it bit equality
            shuffled.edges.sort_unstable();
            prop_assert_eq!(net.infer(&shuffled).unwrap(), a);
        }
    }

    #[test]
    fn recall_is_monotone_in_budget(kg in arb_graph()) {
        prop_assume!(!kg.test().is_empty());
        let q = kg.directed_type_count();
        let cache = TypingCache::from_probs(q, (0..q * kg.entity_count()).map(|i| ((i * 7919) % 97) as f32 / 97.0).collect()).unwrap();
        let ctx = ScorerContext { priors: Arc::new(degree_priors(&kg, 1.0).entity), typing: Some(Arc::new(cache)) };
        let mut last = 0.0;
        for budget in 1..=kg.entity_count() + 1 {
            let g = CandidateGenerator::new(&kg, CandidateConfig { budget, ..CandidateConfig::default() }, scorer_registry().create("typing", &ctx).unwrap()).unwrap();
            let (sets, gold) = candidate_sets(&g, kg.test()).unwrap();
            let recall = recall_at_budget(&sets, &gold).unwrap();
            prop_assert!(recall >= last);
            last = recall;
        }
    }
}

#[test]
fn vocabulary_labels_survive_round_trip() {
    let vocab = Vocabulary::from_labels(vec!["/m/01".into(), "/m/02 x".into()]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("v.dict");
    save_vocabulary(&vocab, &p).unwrap();
    assert!(std::fs::read_to_string(&p).unwrap().contains("1\t/m/02 x"));
}
