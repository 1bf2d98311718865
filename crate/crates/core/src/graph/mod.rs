//! Immutable triple store: dense vocabularies, train/valid/test splits, a
//! typed incidence index over the train split, and degree statistics.

mod csr;
mod io;
pub(crate) mod neighborhood;
mod priors;

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{KgeError, Result};

pub use csr::{Incidence, IncidenceIndex};
pub use io::{load_knowledge_graph, save_split, save_vocabulary, DatasetPaths, LoadOptions, UnknownPolicy};
pub use neighborhood::{k_hop_neighborhood, NeighborhoodScratch, UNBOUNDED};
pub use priors::{degree_priors, normalize_degrees, DegreePriors};

pub type EntityId = u32;
pub type RelationId = u32;
/// Relation type after reverse augmentation: `ρ` for a forward edge and
/// `ρ + |R|` for its reverse, so the space is `[0, 2|R|)`.
pub type DirectedType = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
}

impl Triple {
    pub const fn new(head: EntityId, relation: RelationId, tail: EntityId) -> Self {
        Self { head, relation, tail }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = KgeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "valid" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            other => Err(KgeError::InvalidArgument(format!("unknown split `{other}`"))),
        }
    }
}

/// Dense label ↔ id mapping.
#[derive(Clone, Debug, Default)]
pub struct Vocabulary {
    labels: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Vocabulary with synthetic labels `{prefix}{id}`.
    pub fn numbered(prefix: &str, count: usize) -> Self {
        let mut v = Self::new();
        for i in 0..count {
            v.intern(&format!("{prefix}{i}"));
        }
        v
    }

    pub fn from_labels(labels: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            if index.insert(label.clone(), i as u32).is_some() {
                return Err(KgeError::InvalidArgument(format!("duplicate vocabulary label `{label}`")));
            }
        }
        Ok(Self { labels, index })
    }

    pub fn intern(&mut self, label: &str) -> u32 {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = self.labels.len() as u32;
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), id);
        id
    }

    pub fn get(&self, label: &str) -> Option<u32> {
        self.index.get(label).copied()
    }

    pub fn label(&self, id: u32) -> &str {
        &self.labels[id as usize]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

#[derive(Clone, Debug)]
pub struct KnowledgeGraph {
    entities: Vocabulary,
    relations: Vocabulary,
    train: Vec<Triple>,
    valid: Vec<Triple>,
    test: Vec<Triple>,
    incidence: IncidenceIndex,
    entity_degree: Vec<u32>,
    relation_degree: Vec<u32>,
    /// Per directed type `q`: entities reached by some `q`-edge, by degree
    /// descending then id ascending.
    type_targets: Vec<Vec<EntityId>>,
    duplicates_removed: usize,
}

impl KnowledgeGraph {
    /// Builds a graph from id-level splits. Train duplicates are removed;
    /// valid and test are kept verbatim.
    pub fn from_triples(
        entities: Vocabulary,
        relations: Vocabulary,
        train: Vec<Triple>,
        valid: Vec<Triple>,
        test: Vec<Triple>,
    ) -> Result<Self> {
        let n_e = entities.len();
        let n_r = relations.len();
        for (split, triples) in [("train", &train), ("valid", &valid), ("test", &test)] {
            for t in triples.iter() {
                check_triple(t, n_e, n_r).map_err(|e| KgeError::InvalidArgument(format!("{split}: {e}")))?;
            }
        }

        let before = train.len();
        let mut seen = HashSet::with_capacity(train.len());
        let train: Vec<Triple> = train.into_iter().filter(|t| seen.insert(*t)).collect();
        let duplicates_removed = before - train.len();
        if duplicates_removed > 0 {
            log::warn!("removed {duplicates_removed} duplicate train triples");
        }

        let incidence = IncidenceIndex::build(n_e, n_r, &train);
        let mut entity_degree = vec![0u32; n_e];
        let mut relation_degree = vec![0u32; n_r];
        for t in &train {
            entity_degree[t.head as usize] += 1;
            entity_degree[t.tail as usize] += 1;
            relation_degree[t.relation as usize] += 1;
        }

        let mut type_targets = vec![Vec::new(); 2 * n_r];
        for e in 0..n_e as u32 {
            for q in incidence.distinct_types(e) {
                type_targets[twin_type(q, n_r as u32) as usize].push(e);
            }
        }
        for pool in &mut type_targets {
            pool.sort_by(|&a, &b| entity_degree[b as usize].cmp(&entity_degree[a as usize]).then(a.cmp(&b)));
        }

        Ok(Self {
            entities,
            relations,
            train,
            valid,
            test,
            incidence,
            entity_degree,
            relation_degree,
            type_targets,
            duplicates_removed,
        })
    }

    /// Id-level graph with generated labels.
    pub fn from_id_triples(
        entity_count: usize,
        relation_count: usize,
        train: Vec<Triple>,
        valid: Vec<Triple>,
        test: Vec<Triple>,
    ) -> Result<Self> {
        Self::from_triples(
            Vocabulary::numbered("e", entity_count),
            Vocabulary::numbered("r", relation_count),
            train,
            valid,
            test,
        )
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    /// Size of the directed type space, `2|R|`.
    pub fn directed_type_count(&self) -> usize {
        2 * self.relations.len()
    }

    pub fn entities(&self) -> &Vocabulary {
        &self.entities
    }

    pub fn relations(&self) -> &Vocabulary {
        &self.relations
    }

    pub fn train(&self) -> &[Triple] {
        &self.train
    }

    pub fn valid(&self) -> &[Triple] {
        &self.valid
    }

    pub fn test(&self) -> &[Triple] {
        &self.test
    }

    pub fn split(&self, split: Split) -> &[Triple] {
        match split {
            Split::Train => &self.train,
            Split::Valid => &self.valid,
            Split::Test => &self.test,
        }
    }

    pub fn duplicates_removed(&self) -> usize {
        self.duplicates_removed
    }

    pub fn incidence(&self) -> &IncidenceIndex {
        &self.incidence
    }

    /// Train edges with `entity` as head: `(relation, tail)`.
    pub fn out_edges(&self, entity: EntityId) -> &[Incidence] {
        self.incidence.outgoing(entity)
    }

    /// Train edges with `entity` as tail; `dtype` holds the reverse type
    /// `relation + |R|` and `neighbor` the head.
    pub fn in_edges(&self, entity: EntityId) -> &[Incidence] {
        self.incidence.incoming(entity)
    }

    /// All typed incidences of `entity`, sorted by (directed type, neighbor).
    pub fn incident(&self, entity: EntityId) -> &[Incidence] {
        self.incidence.row(entity)
    }

    /// Distinct directed types observed at `entity` in the train split.
    pub fn observed_types(&self, entity: EntityId) -> Vec<DirectedType> {
        self.incidence.distinct_types(entity).collect()
    }

    pub fn entity_degree(&self) -> &[u32] {
        &self.entity_degree
    }

    pub fn relation_degree(&self) -> &[u32] {
        &self.relation_degree
    }

    /// Entities that appear as the target of some edge of directed type `q`,
    /// sorted by degree descending then id ascending.
    pub fn type_targets(&self, q: DirectedType) -> &[EntityId] {
        &self.type_targets[q as usize]
    }

    pub fn twin(&self, q: DirectedType) -> DirectedType {
        twin_type(q, self.relations.len() as u32)
    }

    pub fn check_entity(&self, e: EntityId) -> Result<()> {
        if (e as usize) < self.entity_count() {
            Ok(())
        } else {
            Err(KgeError::OutOfRange {
                kind: "entity",
                id: u64::from(e),
                count: self.entity_count() as u64,
            })
        }
    }

    pub fn check_relation(&self, r: RelationId) -> Result<()> {
        if (r as usize) < self.relation_count() {
            Ok(())
        } else {
            Err(KgeError::OutOfRange {
                kind: "relation",
                id: u64::from(r),
                count: self.relation_count() as u64,
            })
        }
    }

    /// Histogram of train degrees in power-of-two buckets: bucket `k` counts
    /// entities with degree in `[2^(k-1), 2^k)`, bucket 0 holds degree 0.
    pub fn degree_histogram(&self) -> Vec<(u32, u32, usize)> {
        let mut buckets: Vec<usize> = Vec::new();
        for &d in &self.entity_degree {
            let k = if d == 0 { 0 } else { 32 - d.leading_zeros() as usize };
            if buckets.len() <= k {
                buckets.resize(k + 1, 0);
            }
            buckets[k] += 1;
        }
        buckets
            .into_iter()
            .enumerate()
            .map(|(k, n)| {
                if k == 0 {
                    (0, 0, n)
                } else {
                    (1u32 << (k - 1), (1u64 << k).saturating_sub(1).min(u32::MAX as u64) as u32, n)
                }
            })
            .collect()
    }
}

pub const fn twin_type(q: DirectedType, relation_count: u32) -> DirectedType {
    if q < relation_count {
        q + relation_count
    } else {
        q - relation_count
    }
}

fn check_triple(t: &Triple, n_e: usize, n_r: usize) -> Result<()> {
    if t.head as usize >= n_e || t.tail as usize >= n_e {
        return Err(KgeError::OutOfRange {
            kind: "entity",
            id: u64::from(t.head.max(t.tail)),
            count: n_e as u64,
        });
    }
    if t.relation as usize >= n_r {
        return Err(KgeError::OutOfRange {
            kind: "relation",
            id: u64::from(t.relation),
            count: n_r as u64,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(h: u32, r: u32, tl: u32) -> Triple {
        Triple::new(h, r, tl)
    }

    #[test]
    fn degrees_and_adjacency_agree() {
        let kg = KnowledgeGraph::from_id_triples(4, 2, vec![t(0, 0, 1), t(1, 0, 2), t(0, 1, 2), t(3, 1, 3)], vec![], vec![]).unwrap();
        let deg = kg.entity_degree();
        assert_eq!(deg, &[2, 2, 2, 2]);
        assert_eq!(deg.iter().map(|&d| d as usize).sum::<usize>(), 2 * kg.train().len());
        for e in 0..4 {
            assert_eq!(kg.incident(e).len(), deg[e as usize] as usize);
        }
        assert_eq!(kg.relation_degree(), &[2, 2]);
        assert_eq!(kg.observed_types(0), vec![0, 1]);
        assert_eq!(kg.observed_types(2), vec![2, 3]);
        // self loop contributes both directions
        assert_eq!(kg.observed_types(3), vec![1, 3]);
    }

    #[test]
    fn duplicates_are_removed_from_train_only() {
        let kg = KnowledgeGraph::from_id_triples(2, 1, vec![t(0, 0, 1), t(0, 0, 1)], vec![t(0, 0, 1), t(0, 0, 1)], vec![]).unwrap();
        assert_eq!(kg.train().len(), 1);
        assert_eq!(kg.duplicates_removed(), 1);
        assert_eq!(kg.valid().len(), 2);
    }

    #[test]
    fn type_targets_are_degree_sorted() {
        // relation 0: 0->1, 2->1, 0->3 ; entity 1 has degree 2, 3 has degree 1
        let kg = KnowledgeGraph::from_id_triples(4, 1, vec![t(0, 0, 1), t(2, 0, 1), t(0, 0, 3)], vec![], vec![]).unwrap();
        assert_eq!(kg.type_targets(0), &[1, 3]);
        assert_eq!(kg.type_targets(1), &[0, 2]);
    }

    #[test]
    fn out_of_range_ids_are_rejected() {
        let err = KnowledgeGraph::from_id_triples(2, 1, vec![t(0, 0, 2)], vec![], vec![]).unwrap_err();
        assert!(err.to_string().contains("out of range"));
    }

    #[test]
    fn histogram_covers_every_entity() {
        let kg = KnowledgeGraph::from_id_triples(5, 1, vec![t(0, 0, 1), t(0, 0, 2), t(0, 0, 3)], vec![], vec![]).unwrap();
        let hist = kg.degree_histogram();
        assert_eq!(hist.iter().map(|b| b.2).sum::<usize>(), 5);
        assert_eq!(hist[0], (0, 0, 1));
        assert_eq!(hist[1], (1, 1, 3));
        assert_eq!(hist[2], (2, 3, 1));
    }
}
