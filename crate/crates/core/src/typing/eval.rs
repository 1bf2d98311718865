use rayon::prelude::*;
use serde::Serialize;

use super::network::TypingNetwork;
use super::subgraph::{extract_relational_subgraph, SubgraphConfig};
use crate::error::Result;
use crate::graph::{KnowledgeGraph, Split, Triple};
use crate::metrics::{pessimistic_rank, RankAccumulator};
use crate::rng::{streams, substream};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TypingMetrics {
    pub mrr: f64,
    pub hits_at_1: f64,
    pub hits_at_5: f64,
    pub queries: u64,
}

/// Filtered rank of the directed type of `triple.relation` at its head,
/// with that type masked out of the head's subgraph.
pub fn typing_rank(network: &TypingNetwork, kg: &KnowledgeGraph, triple: &Triple, subgraph: &SubgraphConfig, seed: u64, index: u64) -> Result<u64> {
    let mut rng = substream(seed, streams::SUBGRAPH, index);
    let mut sub = extract_relational_subgraph(kg, triple.head, subgraph, &mut rng)?;
    let gold = triple.relation;
    sub.remove_target_type(gold);
    let logits = network.infer(&sub)?;
    let observed = kg.observed_types(triple.head);
    Ok(pessimistic_rank(logits.as_slice().expect("contiguous"), gold as usize, |q| {
        observed.binary_search(&(q as u32)).is_ok()
    }))
}

/// MRR and Hit@{1,5} of typing on a split. Queries run in parallel; each
/// draws its subgraph from its own sub-stream, so results do not depend on
/// the thread count.
pub fn evaluate_typing(network: &TypingNetwork, kg: &KnowledgeGraph, split: Split, subgraph: &SubgraphConfig, seed: u64) -> Result<TypingMetrics> {
    let triples = kg.split(split);
    let ranks: Vec<u64> = triples
        .par_iter()
        .enumerate()
        .map(|(i, t)| typing_rank(network, kg, t, subgraph, seed, i as u64))
        .collect::<Result<_>>()?;
    let mut acc = RankAccumulator::new(&[1, 5]);
    ranks.into_iter().for_each(|r| acc.push(Some(r)));
    let hits = acc.hits();
    Ok(TypingMetrics {
        mrr: acc.mrr(),
        hits_at_1: hits[&1],
        hits_at_5: hits[&5],
        queries: acc.count(),
    })
}
