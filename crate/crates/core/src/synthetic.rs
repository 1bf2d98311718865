//! Typed synthetic knowledge graphs.
//!
//! Every entity has a latent type and a latent cluster. Each relation links a
//! domain type to a range type and maps head clusters to tail clusters by a
//! fixed shift; tails inside a cluster follow a Zipf popularity law. The
//! structure gives embedding models something to learn, makes relation-type
//! participation predictable from an entity's neighborhood, and produces the
//! long-tailed degree profile of real graphs.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{KgeError, Result};
use crate::graph::{EntityId, KnowledgeGraph, Triple, Vocabulary};
use crate::rng::{stream, streams};

#[derive(Clone, Debug)]
pub struct SyntheticConfig {
    pub entities: usize,
    pub types: usize,
    pub relations: usize,
    pub clusters: usize,
    /// Probability that an entity of a relation's domain type uses it.
    pub participation: f64,
    /// Mean tails per participating head (at least one).
    pub mean_tails: f64,
    /// Probability that a tail comes from the relation's mapped cluster.
    pub fidelity: f64,
    pub zipf_exponent: f64,
    pub valid_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            entities: 2000,
            types: 8,
            relations: 24,
            clusters: 8,
            participation: 0.9,
            mean_tails: 3.0,
            fidelity: 0.85,
            zipf_exponent: 1.1,
            valid_fraction: 0.05,
            test_fraction: 0.05,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticGraph {
    pub graph: KnowledgeGraph,
    pub entity_type: Vec<usize>,
    pub entity_cluster: Vec<usize>,
    /// `(domain, range)` per relation.
    pub signature: Vec<(usize, usize)>,
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(KgeError::InvalidArgument(format!("synthetic: {m}")));
        if self.types == 0 || self.relations == 0 || self.clusters == 0 {
            return bad("types, relations and clusters must be ≥ 1");
        }
        if self.entities < self.types * self.clusters {
            return bad("need at least one entity per (type, cluster)");
        }
        if !(0.0..=1.0).contains(&self.participation) || !(0.0..=1.0).contains(&self.fidelity) {
            return bad("participation and fidelity must lie in [0, 1]");
        }
        if !(self.mean_tails >= 1.0) || !(self.zipf_exponent >= 0.0) {
            return bad("mean_tails must be ≥ 1 and zipf_exponent ≥ 0");
        }
        if !(self.valid_fraction >= 0.0 && self.test_fraction >= 0.0 && self.valid_fraction + self.test_fraction < 1.0) {
            return bad("valid_fraction + test_fraction must be in [0, 1)");
        }
        Ok(())
    }
}

pub fn generate(config: &SyntheticConfig) -> Result<SyntheticGraph> {
    config.validate()?;
    let mut rng = stream(config.seed, streams::SYNTHETIC);
    let (n, k, c) = (config.entities, config.types, config.clusters);

    let entity_type: Vec<usize> = (0..n).map(|e| e % k).collect();
    let entity_cluster: Vec<usize> = (0..n).map(|e| (e / k) % c).collect();
    // members[type][cluster], in a random popularity order
    let mut members = vec![vec![Vec::new(); c]; k];
    for e in 0..n {
        members[entity_type[e]][entity_cluster[e]].push(e as EntityId);
    }
    for group in members.iter_mut().flatten() {
        group.shuffle(&mut rng);
    }
    let zipf = |len: usize| WeightedIndex::new((1..=len).map(|i| 1.0 / (i as f64).powf(config.zipf_exponent))).expect("non-empty");

    let signature: Vec<(usize, usize)> = (0..config.relations).map(|r| (r % k, rng.gen_range(0..k))).collect();
    let shift: Vec<usize> = (0..config.relations).map(|_| rng.gen_range(0..c)).collect();
    // heads are popular too, so degrees are long-tailed on both sides
    let extra = config.mean_tails - 1.0;

    let mut triples = Vec::new();
    for (r, &(domain, range)) in signature.iter().enumerate() {
        for cluster in 0..c {
            for &h in &members[domain][cluster] {
                if !rng.gen_bool(config.participation) {
                    continue;
                }
                let mut count = 1;
                while rng.gen_bool(extra / (1.0 + extra)) {
                    count += 1;
                }
                for _ in 0..count {
                    let tc = if rng.gen_bool(config.fidelity) {
                        (cluster + shift[r]) % c
                    } else {
                        rng.gen_range(0..c)
                    };
                    let pool = &members[range][tc];
                    let t = pool[zipf(pool.len()).sample(&mut rng)];
                    triples.push(Triple::new(h, r as u32, t));
                }
            }
        }
    }
    triples.sort_unstable();
    triples.dedup();
    triples.shuffle(&mut rng);

    let n_valid = (triples.len() as f64 * config.valid_fraction) as usize;
    let n_test = (triples.len() as f64 * config.test_fraction) as usize;
    let held = triples.split_off(triples.len() - n_valid - n_test);
    let train = triples;
    // held-out triples must not introduce unseen entities or relations
    let mut seen_e = vec![false; n];
    let mut seen_r = vec![false; config.relations];
    for t in &train {
        seen_e[t.head as usize] = true;
        seen_e[t.tail as usize] = true;
        seen_r[t.relation as usize] = true;
    }
    let known = |t: &&Triple| seen_e[t.head as usize] && seen_e[t.tail as usize] && seen_r[t.relation as usize];
    let valid: Vec<Triple> = held[..n_valid].iter().filter(known).copied().collect();
    let test: Vec<Triple> = held[n_valid..].iter().filter(known).copied().collect();

    let graph = KnowledgeGraph::from_triples(Vocabulary::numbered("e", n), Vocabulary::numbered("r", config.relations), train, valid, test)?;
    Ok(SyntheticGraph {
        graph,
        entity_type,
        entity_cluster,
        signature,
    })
}
