use std::collections::HashMap;
use std::str::FromStr;

use crate::error::{KgeError, Result};
use crate::graph::{twin_type, DirectedType, EntityId, KnowledgeGraph, RelationId, Split, Triple};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    /// `(h, r, ?)`
    Tail,
    /// `(?, r, t)`
    Head,
}

impl FromStr for Direction {
    type Err = KgeError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tail" | "t" | "tail-prediction" => Ok(Direction::Tail),
            "head" | "h" | "head-prediction" => Ok(Direction::Head),
            other => Err(KgeError::InvalidArgument(format!("unknown query direction {other:?} (expected head or tail)"))),
        }
    }
}

/// A link-prediction query. Head prediction is handled as tail prediction
/// over the reverse directed type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Query {
    pub known: EntityId,
    pub relation: RelationId,
    pub direction: Direction,
}

impl Query {
    pub fn tail(head: EntityId, relation: RelationId) -> Self {
        Self {
            known: head,
            relation,
            direction: Direction::Tail,
        }
    }

    pub fn head(tail: EntityId, relation: RelationId) -> Self {
        Self {
            known: tail,
            relation,
            direction: Direction::Head,
        }
    }

    /// Both queries of a triple with their gold answers.
    pub fn pair(t: &Triple) -> [(Query, EntityId); 2] {
        [(Query::tail(t.head, t.relation), t.tail), (Query::head(t.tail, t.relation), t.head)]
    }

    /// Directed type of the query edge as seen from the known entity.
    pub fn query_type(&self, relation_count: u32) -> DirectedType {
        match self.direction {
            Direction::Tail => self.relation,
            Direction::Head => self.relation + relation_count,
        }
    }

    /// Directed type an answer must carry.
    pub fn answer_type(&self, relation_count: u32) -> DirectedType {
        twin_type(self.query_type(relation_count), relation_count)
    }

    /// Orients a candidate answer into a `(head, relation, tail)` triple.
    pub fn triple(&self, answer: EntityId) -> Triple {
        match self.direction {
            Direction::Tail => Triple::new(self.known, self.relation, answer),
            Direction::Head => Triple::new(answer, self.relation, self.known),
        }
    }
}

/// Known true answers per `(known entity, query type)` over chosen splits.
#[derive(Clone, Debug, Default)]
pub struct FilterIndex {
    answers: HashMap<(EntityId, DirectedType), Vec<EntityId>>,
}

impl FilterIndex {
    pub fn build(kg: &KnowledgeGraph, splits: &[Split]) -> Self {
        let r = kg.relation_count() as u32;
        let mut answers: HashMap<(EntityId, DirectedType), Vec<EntityId>> = HashMap::new();
        for &split in splits {
            for t in kg.split(split) {
                answers.entry((t.head, t.relation)).or_default().push(t.tail);
                answers.entry((t.tail, t.relation + r)).or_default().push(t.head);
            }
        }
        for v in answers.values_mut() {
            v.sort_unstable();
            v.dedup();
        }
        Self { answers }
    }

    /// Sorted true answers of `query`.
    pub fn answers(&self, query: &Query, relation_count: u32) -> &[EntityId] {
        self.answers
            .get(&(query.known, query.query_type(relation_count)))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}
