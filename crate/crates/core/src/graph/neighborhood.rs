use super::{EntityId, KnowledgeGraph};
use crate::error::Result;

pub const UNBOUNDED: usize = usize::MAX;

/// Reusable visit marks for repeated neighborhood queries.
#[derive(Debug, Default)]
pub struct NeighborhoodScratch {
    stamp: Vec<u32>,
    epoch: u32,
}

impl NeighborhoodScratch {
    pub fn new(entity_count: usize) -> Self {
        Self {
            stamp: vec![0; entity_count],
            epoch: 0,
        }
    }

    fn begin(&mut self, entity_count: usize) {
        if self.stamp.len() != entity_count {
            self.stamp = vec![0; entity_count];
            self.epoch = 0;
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
    }

    fn visit(&mut self, e: EntityId) -> bool {
        let slot = &mut self.stamp[e as usize];
        if *slot == self.epoch {
            false
        } else {
            *slot = self.epoch;
            true
        }
    }
}

/// Breadth-first expansion over the undirected train adjacency.
///
/// The query entity is excluded. When a new frontier would push the result
/// past `cap`, the frontier is cut to fit by ascending degree, then id, and
/// the expansion stops. The result is sorted by id.
pub fn k_hop_neighborhood(kg: &KnowledgeGraph, entity: EntityId, hops: usize, cap: usize) -> Result<Vec<EntityId>> {
    let mut scratch = NeighborhoodScratch::new(kg.entity_count());
    k_hop_neighborhood_with(kg, entity, hops, cap, &mut scratch)
}

pub(crate) fn k_hop_neighborhood_with(
    kg: &KnowledgeGraph,
    entity: EntityId,
    hops: usize,
    cap: usize,
    scratch: &mut NeighborhoodScratch,
) -> Result<Vec<EntityId>> {
    kg.check_entity(entity)?;
    scratch.begin(kg.entity_count());
    scratch.visit(entity);
    let degree = kg.entity_degree();

    let mut result: Vec<EntityId> = Vec::new();
    let mut frontier = vec![entity];
    for _ in 0..hops {
        let mut next = Vec::new();
        for &v in &frontier {
            for inc in kg.incident(v) {
                if scratch.visit(inc.neighbor) {
                    next.push(inc.neighbor);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        let room = cap.saturating_sub(result.len());
        if next.len() > room {
            next.sort_unstable_by_key(|&e| (degree[e as usize], e));
            next.truncate(room);
            result.extend_from_slice(&next);
            break;
        }
        result.extend_from_slice(&next);
        frontier = next;
    }
    result.sort_unstable();
    Ok(result)
}

impl KnowledgeGraph {
    pub fn k_hop_neighborhood(&self, entity: EntityId, hops: usize, cap: usize) -> Result<Vec<EntityId>> {
        k_hop_neighborhood(self, entity, hops, cap)
    }
}
