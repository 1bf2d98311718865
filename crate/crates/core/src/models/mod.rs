//! Scoring models `f_r(h, t)` over full or low-rank entity tables.
//!
//! Each model kind implements [`ScoringFunction`] on materialized `f64` rows
//! and is registered by name in [`model_registry`].

mod complex;
mod pairre;
mod rotate;
mod transe;

use std::collections::{BTreeMap, HashMap};
use std::fmt::Debug;
use std::str::FromStr;

use rand::Rng;

pub use complex::ComplEx;
pub use pairre::PairRE;
pub use rotate::RotatE;
pub use transe::TransE;

use crate::embedding::EmbeddingTable;
use crate::error::{KgeError, Result};
use crate::graph::{EntityId, RelationId, Triple};
use crate::registry::Registry;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// TransE with the L1 distance.
    TransE,
    ComplEx,
    PairRE,
    RotatE,
    /// TransE with the L2 distance.
    TransEL2,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [ModelKind::TransE, ModelKind::ComplEx, ModelKind::PairRE, ModelKind::RotatE, ModelKind::TransEL2];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::TransE => "transe",
            ModelKind::ComplEx => "complex",
            ModelKind::PairRE => "pairre",
            ModelKind::RotatE => "rotate",
            ModelKind::TransEL2 => "transe-l2",
        }
    }

    /// Byte stored in checkpoints.
    pub fn code(self) -> u8 {
        match self {
            ModelKind::TransE => 0,
            ModelKind::ComplEx => 1,
            ModelKind::PairRE => 2,
            ModelKind::RotatE => 3,
            ModelKind::TransEL2 => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.code() == code)
    }
}

impl FromStr for ModelKind {
    type Err = KgeError;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Self::ALL.into_iter().find(|k| k.name() == lower).ok_or_else(|| KgeError::UnknownStrategy {
            family: "model",
            name: s.to_string(),
            available: Self::ALL.map(|k| k.name()).join(", "),
        })
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ModelOptions {
    pub dim: usize,
    pub gamma: f64,
}

/// A triple scoring function. Higher is more plausible; distance-based
/// kinds return `γ − distance`.
pub trait ScoringFunction: Send + Sync + Debug {
    fn kind(&self) -> ModelKind;

    /// Width of a relation row for entity dimension `dim`.
    fn relation_dim(&self, dim: usize) -> usize;

    fn requires_even_dim(&self) -> bool {
        false
    }

    fn is_distance(&self) -> bool;

    fn score(&self, h: &[f64], r: &[f64], t: &[f64]) -> f64;

    /// Adds `upstream · ∂score/∂{h,r,t}` into the gradient buffers.
    #[allow(clippy::too_many_arguments)]
    fn accumulate_grad(&self, h: &[f64], r: &[f64], t: &[f64], upstream: f64, gh: &mut [f64], gr: &mut [f64], gt: &mut [f64]);
}

pub fn model_registry() -> Registry<dyn ScoringFunction, ModelOptions> {
    let mut reg: Registry<dyn ScoringFunction, ModelOptions> = Registry::new("model");
    reg.register("transe", |o| Box::new(TransE::l1(o)))
        .register("transe-l2", |o| Box::new(TransE::l2(o)))
        .register("complex", |_| Box::new(ComplEx))
        .register("pairre", |o| Box::new(PairRE::new(o)))
        .register("rotate", |o| Box::new(RotatE::new(o)));
    reg
}

/// Construction parameters of a [`ScoringModel`].
#[derive(Clone, Copy, Debug)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub dim: usize,
    /// `None` for a full table.
    pub rank: Option<usize>,
    pub gamma: f64,
    /// Allows `rank == dim` for low-rank tables.
    pub allow_full_rank: bool,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, dim: usize, gamma: f64) -> Self {
        Self {
            kind,
            dim,
            rank: None,
            gamma,
            allow_full_rank: false,
        }
    }

    pub fn with_rank(mut self, rank: usize) -> Self {
        self.rank = Some(rank);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let f = model_registry().create(self.kind.name(), &self.options())?;
        if self.dim == 0 {
            return Err(KgeError::InvalidArgument("dim must be positive".into()));
        }
        if f.requires_even_dim() && !self.dim.is_multiple_of(2) {
            return Err(KgeError::InvalidArgument(format!("{} requires an even dim, got {}", self.kind, self.dim)));
        }
        if self.kind == ModelKind::RotatE && self.gamma <= 0.0 {
            return Err(KgeError::InvalidArgument("rotate requires gamma > 0".into()));
        }
        if let Some(r) = self.rank {
            if r == 0 || r > self.dim || (r == self.dim && !self.allow_full_rank) {
                return Err(KgeError::InvalidArgument(format!(
                    "low-rank factorization requires rank < dim (rank {r}, dim {})",
                    self.dim
                )));
            }
        }
        Ok(())
    }

    fn options(&self) -> ModelOptions {
        ModelOptions {
            dim: self.dim,
            gamma: self.gamma,
        }
    }

    /// `|E|·d` (full) or `|E|·r + r·d` (low-rank), plus `|R|·d_rel`.
    pub fn param_count(&self, entity_count: usize, relation_count: usize) -> Result<u64> {
        let f = model_registry().create(self.kind.name(), &self.options())?;
        let (e, d, r) = (entity_count as u64, self.dim as u64, self.rank.map(|r| r as u64));
        let entity = match r {
            None => e * d,
            Some(r) => e * r + r * d,
        };
        Ok(entity + relation_count as u64 * f.relation_dim(self.dim) as u64)
    }
}

pub struct ScoringModel {
    function: Box<dyn ScoringFunction>,
    entities: EmbeddingTable,
    /// `|R| × relation_dim`, row-major.
    relations: Vec<f32>,
    relation_count: usize,
    gamma: f64,
}

impl Debug for ScoringModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScoringModel")
            .field("kind", &self.kind())
            .field("dim", &self.dim())
            .field("rank", &self.entities.rank())
            .field("entities", &self.entity_count())
            .field("relations", &self.relation_count)
            .field("gamma", &self.gamma)
            .finish()
    }
}

impl Clone for ScoringModel {
    fn clone(&self) -> Self {
        Self::from_parts(self.kind(), self.gamma, self.entities.clone(), self.relations.clone(), self.relation_count)
            .expect("cloning a valid model")
    }
}

impl ScoringModel {
    /// Randomly initialized model; entries uniform in `[-γ/d, γ/d]`.
    pub fn new(spec: &ModelSpec, entity_count: usize, relation_count: usize, rng: &mut impl Rng) -> Result<Self> {
        spec.validate()?;
        let function = model_registry().create(spec.kind.name(), &spec.options())?;
        let bound = if spec.gamma > 0.0 { spec.gamma / spec.dim as f64 } else { 1.0 / spec.dim as f64 };
        let entities = EmbeddingTable::random(entity_count, spec.dim, spec.rank, bound, spec.allow_full_rank, rng)?;
        let rel_dim = function.relation_dim(spec.dim);
        let relations = (0..relation_count * rel_dim).map(|_| rng.gen_range(-bound..=bound) as f32).collect();
        Ok(Self {
            function,
            entities,
            relations,
            relation_count,
            gamma: spec.gamma,
        })
    }

    pub fn from_parts(kind: ModelKind, gamma: f64, entities: EmbeddingTable, relations: Vec<f32>, relation_count: usize) -> Result<Self> {
        let dim = entities.dim();
        let function = model_registry().create(kind.name(), &ModelOptions { dim, gamma })?;
        if function.requires_even_dim() && !dim.is_multiple_of(2) {
            return Err(KgeError::InvalidArgument(format!("{kind} requires an even dim, got {dim}")));
        }
        let rel_dim = function.relation_dim(dim);
        if relations.len() != relation_count * rel_dim {
            return Err(KgeError::InvalidArgument(format!(
                "relation parameters: expected {}, got {}",
                relation_count * rel_dim,
                relations.len()
            )));
        }
        Ok(Self {
            function,
            entities,
            relations,
            relation_count,
            gamma,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.function.kind()
    }

    pub fn function(&self) -> &dyn ScoringFunction {
        self.function.as_ref()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn dim(&self) -> usize {
        self.entities.dim()
    }

    pub fn relation_dim(&self) -> usize {
        self.function.relation_dim(self.dim())
    }

    pub fn entity_count(&self) -> usize {
        self.entities.entity_count()
    }

    pub fn relation_count(&self) -> usize {
        self.relation_count
    }

    pub fn entity_table(&self) -> &EmbeddingTable {
        &self.entities
    }

    pub fn entity_table_mut(&mut self) -> &mut EmbeddingTable {
        &mut self.entities
    }

    pub fn relations(&self) -> &[f32] {
        &self.relations
    }

    pub fn relation_row(&self, r: RelationId) -> &[f32] {
        let w = self.relation_dim();
        &self.relations[r as usize * w..(r as usize + 1) * w]
    }

    pub fn relation_row_mut(&mut self, r: RelationId) -> &mut [f32] {
        let w = self.relation_dim();
        &mut self.relations[r as usize * w..(r as usize + 1) * w]
    }

    fn relation_f64(&self, r: RelationId) -> Vec<f64> {
        self.relation_row(r).iter().map(|&v| f64::from(v)).collect()
    }

    pub fn param_count(&self) -> usize {
        self.entities.param_count() + self.relations.len()
    }

    pub fn materialize_entity(&self, id: EntityId) -> Result<Vec<f64>> {
        self.entities.materialize(id)
    }

    fn check_relation(&self, r: RelationId) -> Result<()> {
        if (r as usize) < self.relation_count {
            Ok(())
        } else {
            Err(KgeError::OutOfRange {
                kind: "relation",
                id: u64::from(r),
                count: self.relation_count as u64,
            })
        }
    }

    pub fn score_triple(&self, h: EntityId, r: RelationId, t: EntityId) -> Result<f64> {
        self.check_relation(r)?;
        let hv = self.entities.materialize(h)?;
        let tv = self.entities.materialize(t)?;
        Ok(self.function.score(&hv, &self.relation_f64(r), &tv))
    }

    /// Analytic gradients of `Σ_i weights[i] · score(batch[i])` with respect
    /// to every touched stored parameter.
    pub fn score_gradients(&self, batch: &[Triple], weights: &[f64]) -> Result<ModelGradients> {
        if batch.len() != weights.len() {
            return Err(KgeError::InvalidArgument("batch and weights differ in length".into()));
        }
        if batch.is_empty() {
            return Err(KgeError::InvalidArgument("empty batch".into()));
        }
        let mut cache = RowCache::new(self);
        for (t, &w) in batch.iter().zip(weights) {
            self.entities.check(t.head)?;
            self.entities.check(t.tail)?;
            self.check_relation(t.relation)?;
            let (h, r, tl) = (cache.entity_slot(t.head), cache.relation_slot(t.relation), cache.entity_slot(t.tail));
            cache.accumulate(h, r, tl, w);
        }
        Ok(cache.finish())
    }

    /// Materializes every entity once for repeated scoring.
    pub fn prepare(&self) -> PreparedScorer<'_> {
        PreparedScorer {
            function: self.function.as_ref(),
            entities: self.entities.materialize_all(),
            relations: self.relations.iter().map(|&v| f64::from(v)).collect(),
            dim: self.dim(),
            relation_dim: self.relation_dim(),
        }
    }
}

/// Gradients keyed by stored row. Entity rows have width `d` for a full
/// table and `r` for a low-rank one; `basis` is the gradient of `W`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModelGradients {
    pub entity_rows: BTreeMap<EntityId, Vec<f64>>,
    pub relation_rows: BTreeMap<RelationId, Vec<f64>>,
    pub basis: Option<Vec<f64>>,
}

/// Materialized rows and their gradient buffers for one batch.
pub(crate) struct RowCache<'m> {
    model: &'m ScoringModel,
    entity_slots: HashMap<EntityId, usize>,
    entity_ids: Vec<EntityId>,
    entity_values: Vec<f64>,
    entity_grads: Vec<f64>,
    relation_slots: HashMap<RelationId, usize>,
    relation_ids: Vec<RelationId>,
    relation_values: Vec<f64>,
    relation_grads: Vec<f64>,
}

impl<'m> RowCache<'m> {
    pub(crate) fn new(model: &'m ScoringModel) -> Self {
        Self {
            model,
            entity_slots: HashMap::new(),
            entity_ids: Vec::new(),
            entity_values: Vec::new(),
            entity_grads: Vec::new(),
            relation_slots: HashMap::new(),
            relation_ids: Vec::new(),
            relation_values: Vec::new(),
            relation_grads: Vec::new(),
        }
    }

    pub(crate) fn entity_slot(&mut self, id: EntityId) -> usize {
        if let Some(&s) = self.entity_slots.get(&id) {
            return s;
        }
        let d = self.model.dim();
        let s = self.entity_ids.len();
        self.entity_ids.push(id);
        self.entity_values.resize((s + 1) * d, 0.0);
        self.entity_grads.resize((s + 1) * d, 0.0);
        self.model.entities.materialize_into(id, &mut self.entity_values[s * d..]);
        self.entity_slots.insert(id, s);
        s
    }

    pub(crate) fn relation_slot(&mut self, id: RelationId) -> usize {
        if let Some(&s) = self.relation_slots.get(&id) {
            return s;
        }
        let w = self.model.relation_dim();
        let s = self.relation_ids.len();
        self.relation_ids.push(id);
        self.relation_values.extend(self.model.relation_row(id).iter().map(|&v| f64::from(v)));
        self.relation_grads.resize((s + 1) * w, 0.0);
        self.relation_slots.insert(id, s);
        s
    }

    fn entity(&self, slot: usize) -> &[f64] {
        let d = self.model.dim();
        &self.entity_values[slot * d..(slot + 1) * d]
    }

    fn relation(&self, slot: usize) -> &[f64] {
        let w = self.model.relation_dim();
        &self.relation_values[slot * w..(slot + 1) * w]
    }

    pub(crate) fn score(&self, h: usize, r: usize, t: usize) -> f64 {
        self.model.function.score(self.entity(h), self.relation(r), self.entity(t))
    }

    /// Adds `weight · ∇score(h, r, t)`.
    pub(crate) fn accumulate(&mut self, h: usize, r: usize, t: usize, weight: f64) {
        let d = self.model.dim();
        let w = self.model.relation_dim();
        let mut gh = vec![0.0; d];
        let mut gt = vec![0.0; d];
        let mut gr = vec![0.0; w];
        self.model
            .function
            .accumulate_grad(self.entity(h), self.relation(r), self.entity(t), weight, &mut gh, &mut gr, &mut gt);
        for (a, b) in self.entity_grads[h * d..(h + 1) * d].iter_mut().zip(&gh) {
            *a += b;
        }
        for (a, b) in self.entity_grads[t * d..(t + 1) * d].iter_mut().zip(&gt) {
            *a += b;
        }
        for (a, b) in self.relation_grads[r * w..(r + 1) * w].iter_mut().zip(&gr) {
            *a += b;
        }
    }

    /// Routes materialized-row gradients through the table; the basis
    /// gradient is summed once over the whole batch.
    pub(crate) fn finish(self) -> ModelGradients {
        let table = &self.model.entities;
        let d = self.model.dim();
        let rw = self.model.relation_dim();
        let width = table.row_width();
        let mut basis = table.basis().map(|b| vec![0.0; b.len()]);
        let mut entity_rows = BTreeMap::new();
        for (slot, &id) in self.entity_ids.iter().enumerate() {
            let mut g = vec![0.0; width];
            table.backprop_row(id, &self.entity_grads[slot * d..(slot + 1) * d], &mut g, basis.as_deref_mut());
            entity_rows.insert(id, g);
        }
        let relation_rows = self
            .relation_ids
            .iter()
            .enumerate()
            .map(|(slot, &id)| (id, self.relation_grads[slot * rw..(slot + 1) * rw].to_vec()))
            .collect();
        ModelGradients {
            entity_rows,
            relation_rows,
            basis,
        }
    }
}

/// Model with every entity row materialized in `f64`, for evaluation.
pub struct PreparedScorer<'m> {
    function: &'m dyn ScoringFunction,
    entities: Vec<f64>,
    relations: Vec<f64>,
    dim: usize,
    relation_dim: usize,
}

impl PreparedScorer<'_> {
    pub fn entity_count(&self) -> usize {
        self.entities.len() / self.dim.max(1)
    }

    fn entity(&self, e: EntityId) -> &[f64] {
        let e = e as usize;
        &self.entities[e * self.dim..(e + 1) * self.dim]
    }

    fn relation(&self, r: RelationId) -> &[f64] {
        let r = r as usize;
        &self.relations[r * self.relation_dim..(r + 1) * self.relation_dim]
    }

    pub fn score(&self, h: EntityId, r: RelationId, t: EntityId) -> f64 {
        self.function.score(self.entity(h), self.relation(r), self.entity(t))
    }
}
