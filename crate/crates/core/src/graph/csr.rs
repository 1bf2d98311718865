use super::{DirectedType, EntityId, Triple};

/// One typed incidence: an edge leaving the row entity with directed type
/// `dtype`, arriving at `neighbor`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Incidence {
    pub dtype: DirectedType,
    pub neighbor: EntityId,
}

/// Compressed sparse rows over train edges, indexed by entity.
///
/// Each row holds the forward edges of the entity (`dtype < |R|`, entity is
/// head) followed by its reverse edges (`dtype ≥ |R|`, entity is tail). Rows
/// are sorted by `(dtype, neighbor)`, so the head-indexed and tail-indexed
/// adjacency are the prefix and suffix of the row.
#[derive(Debug, Clone)]
pub struct IncidenceIndex {
    offsets: Vec<usize>,
    forward_len: Vec<u32>,
    entries: Vec<Incidence>,
}

impl IncidenceIndex {
    pub fn build(entity_count: usize, relation_count: usize, train: &[Triple]) -> Self {
        let r = relation_count as u32;
        let mut counts = vec![0usize; entity_count + 1];
        for t in train {
            counts[t.head as usize + 1] += 1;
            counts[t.tail as usize + 1] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let offsets = counts.clone();
        let mut cursor = counts;
        let mut entries = vec![Incidence { dtype: 0, neighbor: 0 }; 2 * train.len()];
        for t in train {
            let h = t.head as usize;
            entries[cursor[h]] = Incidence {
                dtype: t.relation,
                neighbor: t.tail,
            };
            cursor[h] += 1;
            let tl = t.tail as usize;
            entries[cursor[tl]] = Incidence {
                dtype: t.relation + r,
                neighbor: t.head,
            };
            cursor[tl] += 1;
        }
        let mut forward_len = vec![0u32; entity_count];
        for e in 0..entity_count {
            let row = &mut entries[offsets[e]..offsets[e + 1]];
            row.sort_unstable();
            forward_len[e] = row.partition_point(|inc| inc.dtype < r) as u32;
        }
        Self {
            offsets,
            forward_len,
            entries,
        }
    }

    pub fn row(&self, e: EntityId) -> &[Incidence] {
        let e = e as usize;
        &self.entries[self.offsets[e]..self.offsets[e + 1]]
    }

    pub fn outgoing(&self, e: EntityId) -> &[Incidence] {
        &self.row(e)[..self.forward_len[e as usize] as usize]
    }

    pub fn incoming(&self, e: EntityId) -> &[Incidence] {
        &self.row(e)[self.forward_len[e as usize] as usize..]
    }

    pub fn degree(&self, e: EntityId) -> usize {
        let e = e as usize;
        self.offsets[e + 1] - self.offsets[e]
    }

    pub fn distinct_types(&self, e: EntityId) -> impl Iterator<Item = DirectedType> + '_ {
        let row = self.row(e);
        row.iter()
            .enumerate()
            .filter(move |(i, inc)| *i == 0 || row[i - 1].dtype != inc.dtype)
            .map(|(_, inc)| inc.dtype)
    }

    /// Contiguous runs of equal directed type within the row of `e`.
    pub fn type_groups(&self, e: EntityId) -> impl Iterator<Item = &[Incidence]> + '_ {
        self.row(e).chunk_by(|a, b| a.dtype == b.dtype)
    }

    pub fn contains(&self, e: EntityId, dtype: DirectedType, neighbor: EntityId) -> bool {
        self.row(e).binary_search(&Incidence { dtype, neighbor }).is_ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_split_into_forward_and_reverse() {
        let train = [Triple::new(0, 1, 1), Triple::new(2, 0, 0), Triple::new(0, 0, 2)];
        let idx = IncidenceIndex::build(3, 2, &train);
        assert_eq!(
            idx.outgoing(0),
            &[Incidence { dtype: 0, neighbor: 2 }, Incidence { dtype: 1, neighbor: 1 }]
        );
        assert_eq!(idx.incoming(0), &[Incidence { dtype: 2, neighbor: 2 }]);
        assert_eq!(idx.degree(0), 3);
        assert!(idx.contains(1, 3, 0));
        assert!(!idx.contains(1, 1, 0));
        let groups: Vec<usize> = idx.type_groups(0).map(|g| g.len()).collect();
        assert_eq!(groups, vec![1, 1, 1]);
        assert_eq!(idx.distinct_types(2).collect::<Vec<_>>(), vec![0, 2]);
    }
}
