use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::{EntityId, KnowledgeGraph, Triple};

/// Which slot of a positive triple is replaced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorruptionMode {
    Head,
    Tail,
}

impl CorruptionMode {
    pub fn corrupt(self, t: &Triple, e: EntityId) -> Triple {
        match self {
            CorruptionMode::Head => Triple::new(e, t.relation, t.tail),
            CorruptionMode::Tail => Triple::new(t.head, t.relation, e),
        }
    }

    pub fn is_observed(self, kg: &KnowledgeGraph, t: &Triple, e: EntityId) -> bool {
        match self {
            CorruptionMode::Tail => kg.incidence().contains(t.head, t.relation, e),
            CorruptionMode::Head => kg.incidence().contains(e, t.relation, t.tail),
        }
    }
}

/// Draws `count` uniform entity ids for the corrupted slot of `positive`.
///
/// With `filtered`, corruptions that reproduce an observed train triple are
/// rejected and redrawn. If no entity yields an unobserved corruption, the
/// filter is dropped.
pub fn sample_negatives(
    kg: &KnowledgeGraph,
    positive: &Triple,
    count: usize,
    mode: CorruptionMode,
    filtered: bool,
    rng: &mut impl Rng,
) -> Vec<EntityId> {
    let n = kg.entity_count() as EntityId;
    let mut out = Vec::with_capacity(count);
    if !filtered {
        out.extend((0..count).map(|_| rng.gen_range(0..n)));
        return out;
    }
    let budget = 32 * count + 64;
    let mut tries = 0;
    while out.len() < count && tries < budget {
        tries += 1;
        let e = rng.gen_range(0..n);
        if !mode.is_observed(kg, positive, e) {
            out.push(e);
        }
    }
    if out.len() < count {
        let allowed: Vec<EntityId> = (0..n).filter(|&e| !mode.is_observed(kg, positive, e)).collect();
        if allowed.is_empty() {
            log::debug!("no unobserved corruption for {positive:?}; sampling unfiltered");
            out.extend((out.len()..count).map(|_| rng.gen_range(0..n)));
        } else {
            while out.len() < count {
                out.push(*allowed.choose(rng).expect("non-empty"));
            }
        }
    }
    out
}
