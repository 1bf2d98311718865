use std::collections::HashMap;

use rand::seq::index;
use rand::Rng;

use crate::error::Result;
use crate::graph::{twin_type, DirectedType, EntityId, KnowledgeGraph};

/// Directed edge between local node indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubgraphEdge {
    pub src: u32,
    pub dst: u32,
    pub dtype: DirectedType,
}

/// Edge-labelled neighborhood of `target`. Node 0 is the target; every edge
/// `(u, v, ρ)` is paired with its reverse `(v, u, twin(ρ))`. Edges are kept
/// sorted, which fixes the summation order of message aggregation.
#[derive(Clone, Debug, PartialEq)]
pub struct RelationalSubgraph {
    pub target: EntityId,
    pub nodes: Vec<EntityId>,
    pub edges: Vec<SubgraphEdge>,
    /// Directed types removed at the target.
    pub masked_types: Vec<DirectedType>,
    pub relation_count: u32,
}

#[derive(Clone, Copy, Debug)]
pub struct SubgraphConfig {
    pub hops: usize,
    /// Edges sampled per directed type at each expanded node.
    pub per_type_cap: usize,
    /// Nodes expanded per hop beyond the target (sampled when exceeded).
    pub expand_cap: usize,
}

impl Default for SubgraphConfig {
    fn default() -> Self {
        Self {
            hops: 2,
            per_type_cap: 10,
            expand_cap: 64,
        }
    }
}

impl RelationalSubgraph {
    /// Builds a subgraph from explicit global-id edges; reverse edges are
    /// added automatically.
    pub fn from_edges(target: EntityId, relation_count: u32, edges: &[(EntityId, EntityId, DirectedType)]) -> Self {
        let mut local: HashMap<EntityId, u32> = HashMap::new();
        let mut nodes = vec![target];
        local.insert(target, 0);
        let mut out = Vec::with_capacity(2 * edges.len());
        for &(u, v, q) in edges {
            let mut id = |e: EntityId| {
                *local.entry(e).or_insert_with(|| {
                    nodes.push(e);
                    (nodes.len() - 1) as u32
                })
            };
            let (lu, lv) = (id(u), id(v));
            out.push(SubgraphEdge { src: lu, dst: lv, dtype: q });
            out.push(SubgraphEdge {
                src: lv,
                dst: lu,
                dtype: twin_type(q, relation_count),
            });
        }
        out.sort_unstable();
        out.dedup();
        Self {
            target,
            nodes,
            edges: out,
            masked_types: Vec::new(),
            relation_count,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Distinct directed types on edges leaving the target.
    pub fn target_types(&self) -> Vec<DirectedType> {
        let mut types: Vec<DirectedType> = self.edges.iter().filter(|e| e.src == 0).map(|e| e.dtype).collect();
        types.sort_unstable();
        types.dedup();
        types
    }

    /// Removes every target-incident edge carrying `dtype`, together with its
    /// reverse twin, so the target keeps no edge of that type in either
    /// direction.
    pub fn remove_target_type(&mut self, dtype: DirectedType) {
        let twin = twin_type(dtype, self.relation_count);
        self.edges
            .retain(|e| !((e.src == 0 || e.dst == 0) && (e.dtype == dtype || e.dtype == twin)));
        for q in [dtype, twin] {
            if let Err(pos) = self.masked_types.binary_search(&q) {
                self.masked_types.insert(pos, q);
            }
        }
    }

    /// True when no edge incident to the target carries a masked type.
    pub fn mask_holds(&self) -> bool {
        self.edges
            .iter()
            .all(|e| !((e.src == 0 || e.dst == 0) && self.masked_types.binary_search(&e.dtype).is_ok()))
    }
}

/// Breadth-first relational neighborhood of `entity`.
///
/// At every expanded node, incident edges are grouped by directed type and
/// at most `per_type_cap` are sampled per group, so every incident type
/// survives sampling.
pub fn extract_relational_subgraph(
    kg: &KnowledgeGraph,
    entity: EntityId,
    config: &SubgraphConfig,
    rng: &mut impl Rng,
) -> Result<RelationalSubgraph> {
    kg.check_entity(entity)?;
    let r = kg.relation_count() as u32;
    let mut local: HashMap<EntityId, u32> = HashMap::new();
    local.insert(entity, 0);
    let mut nodes = vec![entity];
    let mut edges = Vec::new();
    let mut frontier = vec![entity];
    let cap = config.per_type_cap.max(1);

    for depth in 0..config.hops {
        if depth > 0 && frontier.len() > config.expand_cap {
            let mut picked: Vec<usize> = index::sample(rng, frontier.len(), config.expand_cap).into_vec();
            picked.sort_unstable();
            frontier = picked.into_iter().map(|i| frontier[i]).collect();
        }
        let mut next = Vec::new();
        for &v in &frontier {
            let lv = local[&v];
            for group in kg.incidence().type_groups(v) {
                let mut take = |inc: &crate::graph::Incidence| {
                    let lu = *local.entry(inc.neighbor).or_insert_with(|| {
                        nodes.push(inc.neighbor);
                        next.push(inc.neighbor);
                        (nodes.len() - 1) as u32
                    });
                    edges.push(SubgraphEdge {
                        src: lv,
                        dst: lu,
                        dtype: inc.dtype,
                    });
                    edges.push(SubgraphEdge {
                        src: lu,
                        dst: lv,
                        dtype: twin_type(inc.dtype, r),
                    });
                };
                if group.len() <= cap {
                    group.iter().for_each(&mut take);
                } else {
                    let mut picked: Vec<usize> = index::sample(rng, group.len(), cap).into_vec();
                    picked.sort_unstable();
                    picked.into_iter().for_each(|i| take(&group[i]));
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    edges.sort_unstable();
    edges.dedup();
    Ok(RelationalSubgraph {
        target: entity,
        nodes,
        edges,
        masked_types: Vec::new(),
        relation_count: r,
    })
}

/// Result of masking one directed type at the target.
#[derive(Clone, Debug)]
pub enum MaskOutcome {
    Masked(MaskedExample),
    /// The target has fewer than two distinct incident types.
    Skip,
}

#[derive(Clone, Debug)]
pub struct MaskedExample {
    pub subgraph: RelationalSubgraph,
    /// All directed types of the target in the train graph, masked one
    /// included. Sorted.
    pub observed: Vec<DirectedType>,
    pub masked_type: DirectedType,
}

/// Masks one directed type drawn uniformly from the target's train types.
pub fn apply_relation_mask(subgraph: &RelationalSubgraph, kg: &KnowledgeGraph, rng: &mut impl Rng) -> MaskOutcome {
    let observed = kg.observed_types(subgraph.target);
    if observed.len() < 2 {
        return MaskOutcome::Skip;
    }
    let masked_type = observed[rng.gen_range(0..observed.len())];
    let mut masked = subgraph.clone();
    masked.remove_target_type(masked_type);
    MaskOutcome::Masked(MaskedExample {
        subgraph: masked,
        observed,
        masked_type,
    })
}

/// Complement of `observed` in `[0, type_count)`.
pub fn unobserved_types(observed: &[DirectedType], type_count: usize) -> Vec<DirectedType> {
    (0..type_count as DirectedType).filter(|q| observed.binary_search(q).is_err()).collect()
}
