//! Candidate generation: build a pool around the query, score it by
//! `p(e)·p(r|e)` (or an ablation), keep the best `budget`.

use std::fmt::Debug;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use super::query::Query;
use crate::error::{KgeError, Result};
use crate::graph::neighborhood::{k_hop_neighborhood_with, NeighborhoodScratch, UNBOUNDED};
use crate::graph::{DirectedType, EntityId, KnowledgeGraph};
use crate::registry::Registry;
use crate::rng::{streams, substream};
use crate::typing::{extract_relational_subgraph, softmax, SubgraphConfig, TypingNetwork};

/// `p(·|e)` for every entity, from its unmasked subgraph.
#[derive(Clone, Debug)]
pub struct TypingCache {
    type_count: usize,
    probs: Vec<f32>,
}

impl TypingCache {
    /// Runs the typing network once per entity (in parallel). Each entity
    /// samples its subgraph from its own sub-stream.
    pub fn build(network: &TypingNetwork, kg: &KnowledgeGraph, subgraph: &SubgraphConfig, seed: u64) -> Result<Self> {
        let type_count = network.type_count();
        if type_count != kg.directed_type_count() {
            return Err(KgeError::InvalidArgument(format!(
                "typing network has {type_count} directed types, graph has {}",
                kg.directed_type_count()
            )));
        }
        let rows: Vec<Vec<f32>> = (0..kg.entity_count() as EntityId)
            .into_par_iter()
            .map(|e| {
                let mut rng = substream(seed, streams::SUBGRAPH, u64::from(e));
                let sub = extract_relational_subgraph(kg, e, subgraph, &mut rng)?;
                let logits = network.infer(&sub)?;
                Ok(softmax(logits.as_slice().expect("contiguous")).into_iter().map(|p| p as f32).collect())
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            type_count,
            probs: rows.concat(),
        })
    }

    /// Wraps explicit per-entity distributions (`entities × type_count`).
    pub fn from_probs(type_count: usize, probs: Vec<f32>) -> Result<Self> {
        if type_count == 0 || !probs.len().is_multiple_of(type_count) {
            return Err(KgeError::InvalidArgument("typing cache size is not a multiple of the type count".into()));
        }
        Ok(Self { type_count, probs })
    }

    pub fn entity_count(&self) -> usize {
        self.probs.len() / self.type_count
    }

    /// `p(q|e)`.
    pub fn prob(&self, e: EntityId, q: DirectedType) -> f64 {
        f64::from(self.probs[e as usize * self.type_count + q as usize])
    }

    pub fn distribution(&self, e: EntityId) -> &[f32] {
        let i = e as usize * self.type_count;
        &self.probs[i..i + self.type_count]
    }
}

/// `p(e)·p(q|e)` for each candidate.
pub fn typing_posterior(cache: &TypingCache, priors: &[f64], candidates: &[EntityId], q: DirectedType) -> Vec<f64> {
    candidates.iter().map(|&e| priors[e as usize] * cache.prob(e, q)).collect()
}

/// Inputs available to candidate scorers.
#[derive(Clone, Debug)]
pub struct ScorerContext {
    pub priors: Arc<Vec<f64>>,
    pub typing: Option<Arc<TypingCache>>,
}

/// Scores a candidate answer carrying directed type `q`. Higher is better.
pub trait CandidateScorer: Send + Sync + Debug {
    fn name(&self) -> &'static str;

    fn validate(&self, kg: &KnowledgeGraph) -> Result<()>;

    fn score(&self, e: EntityId, q: DirectedType) -> f64;
}

#[derive(Debug)]
pub struct TypingScorer {
    ctx: ScorerContext,
}

impl CandidateScorer for TypingScorer {
    fn name(&self) -> &'static str {
        "typing"
    }

    fn validate(&self, kg: &KnowledgeGraph) -> Result<()> {
        match &self.ctx.typing {
            None => Err(KgeError::InvalidArgument("typing candidate scorer needs a typing network".into())),
            Some(c) if c.entity_count() != kg.entity_count() => Err(KgeError::InvalidArgument(format!(
                "typing cache covers {} entities, graph has {}",
                c.entity_count(),
                kg.entity_count()
            ))),
            _ => check_priors(&self.ctx, kg),
        }
    }

    fn score(&self, e: EntityId, q: DirectedType) -> f64 {
        let cache = self.ctx.typing.as_ref().expect("validated");
        self.ctx.priors[e as usize] * cache.prob(e, q)
    }
}

/// Degree-only ablation: `p(e)`.
#[derive(Debug)]
pub struct DegreeScorer {
    ctx: ScorerContext,
}

impl CandidateScorer for DegreeScorer {
    fn name(&self) -> &'static str {
        "degree"
    }

    fn validate(&self, kg: &KnowledgeGraph) -> Result<()> {
        check_priors(&self.ctx, kg)
    }

    fn score(&self, e: EntityId, _q: DirectedType) -> f64 {
        self.ctx.priors[e as usize]
    }
}

fn check_priors(ctx: &ScorerContext, kg: &KnowledgeGraph) -> Result<()> {
    if ctx.priors.len() != kg.entity_count() {
        return Err(KgeError::InvalidArgument(format!(
            "priors cover {} entities, graph has {}",
            ctx.priors.len(),
            kg.entity_count()
        )));
    }
    Ok(())
}

pub fn scorer_registry() -> Registry<dyn CandidateScorer, ScorerContext> {
    let mut reg = Registry::new("candidate scorer");
    reg.register("typing", |c: &ScorerContext| Box::new(TypingScorer { ctx: c.clone() }) as Box<dyn CandidateScorer>);
    reg.register("degree", |c: &ScorerContext| Box::new(DegreeScorer { ctx: c.clone() }) as Box<dyn CandidateScorer>);
    reg
}

/// Where the candidate pool comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoolStrategy {
    /// k-hop neighborhood ∪ entities observed with the answer type.
    Union,
    Neighborhood,
    Global,
    /// Every entity (equivalence oracle).
    All,
}

impl PoolStrategy {
    pub fn name(self) -> &'static str {
        match self {
            PoolStrategy::Union => "union",
            PoolStrategy::Neighborhood => "neighborhood",
            PoolStrategy::Global => "global",
            PoolStrategy::All => "all",
        }
    }
}

impl FromStr for PoolStrategy {
    type Err = KgeError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "union" => Ok(PoolStrategy::Union),
            "neighborhood" => Ok(PoolStrategy::Neighborhood),
            "global" => Ok(PoolStrategy::Global),
            "all" => Ok(PoolStrategy::All),
            other => Err(KgeError::InvalidArgument(format!(
                "unknown pool strategy {other:?} (expected union, neighborhood, global or all)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CandidateSource {
    Neighborhood,
    GlobalFallback,
}

#[derive(Clone, Debug)]
pub struct CandidateSet {
    pub query: Query,
    /// Unique, best first.
    pub candidates: Vec<EntityId>,
    pub scores: Vec<f64>,
    pub sources: Vec<CandidateSource>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn contains(&self, e: EntityId) -> bool {
        self.candidates.contains(&e)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CandidateConfig {
    pub budget: usize,
    pub pool: PoolStrategy,
    pub hops: usize,
    /// Cap on the neighborhood part of the pool.
    pub neighborhood_cap: usize,
}

impl Default for CandidateConfig {
    fn default() -> Self {
        Self {
            budget: 2000,
            pool: PoolStrategy::Union,
            hops: 2,
            neighborhood_cap: UNBOUNDED,
        }
    }
}

/// Shortlists answers for queries against one graph.
#[derive(Debug)]
pub struct CandidateGenerator<'g> {
    kg: &'g KnowledgeGraph,
    config: CandidateConfig,
    scorer: Box<dyn CandidateScorer>,
}

impl<'g> CandidateGenerator<'g> {
    pub fn new(kg: &'g KnowledgeGraph, config: CandidateConfig, scorer: Box<dyn CandidateScorer>) -> Result<Self> {
        if config.budget == 0 {
            return Err(KgeError::InvalidArgument("candidate budget must be ≥ 1".into()));
        }
        scorer.validate(kg)?;
        Ok(Self { kg, config, scorer })
    }

    pub fn config(&self) -> &CandidateConfig {
        &self.config
    }

    pub fn scorer_name(&self) -> &'static str {
        self.scorer.name()
    }

    pub fn scratch(&self) -> NeighborhoodScratch {
        NeighborhoodScratch::new(self.kg.entity_count())
    }

    pub fn generate(&self, query: &Query) -> Result<CandidateSet> {
        self.generate_with(query, &mut self.scratch())
    }

    /// Pool, score, keep the top `budget` (score descending, id ascending).
    /// The gold answer is never injected.
    pub fn generate_with(&self, query: &Query, scratch: &mut NeighborhoodScratch) -> Result<CandidateSet> {
        let kg = self.kg;
        kg.check_entity(query.known)?;
        kg.check_relation(query.relation)?;
        let r = kg.relation_count() as u32;
        let answer_type = query.answer_type(r);
        let hood = match self.config.pool {
            PoolStrategy::Union | PoolStrategy::Neighborhood => {
                k_hop_neighborhood_with(kg, query.known, self.config.hops, self.config.neighborhood_cap, scratch)?
            }
            _ => Vec::new(),
        };
        let mut pool: Vec<(EntityId, CandidateSource)> = match self.config.pool {
            PoolStrategy::All => (0..kg.entity_count() as EntityId).map(|e| (e, CandidateSource::GlobalFallback)).collect(),
            PoolStrategy::Neighborhood => hood.iter().map(|&e| (e, CandidateSource::Neighborhood)).collect(),
            PoolStrategy::Global | PoolStrategy::Union => {
                let mut pool: Vec<(EntityId, CandidateSource)> = hood.iter().map(|&e| (e, CandidateSource::Neighborhood)).collect();
                for &e in kg.type_targets(query.query_type(r)) {
                    if hood.binary_search(&e).is_err() {
                        pool.push((e, CandidateSource::GlobalFallback));
                    }
                }
                pool
            }
        };
        let mut scored: Vec<(f64, EntityId, CandidateSource)> = pool.drain(..).map(|(e, s)| (self.scorer.score(e, answer_type), e, s)).collect();
        let by_rank = |a: &(f64, EntityId, CandidateSource), b: &(f64, EntityId, CandidateSource)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
        if scored.len() > self.config.budget {
            scored.select_nth_unstable_by(self.config.budget - 1, by_rank);
            scored.truncate(self.config.budget);
        }
        scored.sort_unstable_by(by_rank);
        Ok(CandidateSet {
            query: *query,
            candidates: scored.iter().map(|s| s.1).collect(),
            scores: scored.iter().map(|s| s.0).collect(),
            sources: scored.iter().map(|s| s.2).collect(),
        })
    }
}

/// Fraction of queries whose gold answer is among its candidates.
pub fn recall_at_budget(sets: &[CandidateSet], gold: &[EntityId]) -> Result<f64> {
    if sets.len() != gold.len() {
        return Err(KgeError::InvalidArgument(format!("{} candidate sets for {} gold answers", sets.len(), gold.len())));
    }
    if sets.is_empty() {
        return Ok(0.0);
    }
    let hit = sets.iter().zip(gold).filter(|(s, &g)| s.contains(g)).count();
    Ok(hit as f64 / sets.len() as f64)
}
