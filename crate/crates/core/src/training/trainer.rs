use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use super::loss::{log_sigmoid, self_adversarial_loss};
use super::negatives::CorruptionMode;
use crate::error::{KgeError, Result};
use crate::graph::{EntityId, KnowledgeGraph, Triple};
use crate::models::{ModelGradients, RowCache, ScoringModel};
use crate::optim::{optimizer_registry, Optimizer, OptimizerOptions, RowState};
use crate::rng::{streams, substream};

#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub batch_size: usize,
    /// Negatives drawn per batch and corruption side, shared by the batch.
    pub negatives: usize,
    /// Self-adversarial temperature `α`.
    pub adversarial_temperature: f64,
    pub learning_rate: f64,
    pub optimizer: String,
    pub epochs: usize,
    pub eval_every: usize,
    pub seed: u64,
    pub filtered_negatives: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 512,
            negatives: 64,
            adversarial_temperature: 1.0,
            learning_rate: 0.1,
            optimizer: "adagrad".into(),
            epochs: 100,
            eval_every: 0,
            seed: 0,
            filtered_negatives: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.negatives == 0 {
            return Err(KgeError::InvalidArgument("negatives must be ≥ 1".into()));
        }
        if self.batch_size == 0 {
            return Err(KgeError::InvalidArgument("batch_size must be ≥ 1".into()));
        }
        if !(self.adversarial_temperature >= 0.0) {
            return Err(KgeError::InvalidArgument("adversarial_temperature must be ≥ 0".into()));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(KgeError::InvalidArgument("learning_rate must be a finite value ≥ 0".into()));
        }
        Ok(())
    }
}

/// One line of the training log.
#[derive(Clone, Debug, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub triples_per_sec: f64,
    pub wall_ms: f64,
}

/// Epoch loop with optimizer state that persists across epochs.
///
/// Updates are applied sequentially, once per batch and corruption side, so a
/// fixed seed reproduces parameters bit for bit.
#[derive(Debug)]
pub struct KgeTrainer {
    config: TrainConfig,
    optimizer: Box<dyn Optimizer>,
    entity_state: RowState,
    relation_state: RowState,
    basis_state: Option<RowState>,
    epochs_done: usize,
}

impl KgeTrainer {
    pub fn new(model: &ScoringModel, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let optimizer = optimizer_registry().create(
            &config.optimizer,
            &OptimizerOptions {
                learning_rate: config.learning_rate,
            },
        )?;
        let sw = optimizer.state_width();
        let table = model.entity_table();
        Ok(Self {
            entity_state: RowState::new(model.entity_count(), table.row_width(), sw),
            relation_state: RowState::new(model.relation_count(), model.relation_dim(), sw),
            basis_state: table.basis().map(|b| RowState::new(1, b.len(), sw)),
            optimizer,
            config,
            epochs_done: 0,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn epochs_done(&self) -> usize {
        self.epochs_done
    }

    /// One shuffled pass over the train split, corrupting tails and heads.
    pub fn train_epoch(&mut self, model: &mut ScoringModel, kg: &KnowledgeGraph) -> Result<EpochStats> {
        if model.entity_count() != kg.entity_count() || model.relation_count() != kg.relation_count() {
            return Err(KgeError::InvalidArgument(format!(
                "model has {}/{} entities/relations, graph has {}/{}",
                model.entity_count(),
                model.relation_count(),
                kg.entity_count(),
                kg.relation_count()
            )));
        }
        let start = Instant::now();
        let epoch = self.epochs_done + 1;
        let seed = self.config.seed;
        let train = kg.train();
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut substream(seed, streams::SHUFFLE, epoch as u64));
        let mut rng = substream(seed, streams::SAMPLING, epoch as u64);
        let n = kg.entity_count() as EntityId;

        let mut total = 0.0;
        let mut count = 0usize;
        let mut batch = Vec::with_capacity(self.config.batch_size);
        for chunk in order.chunks(self.config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| train[i]));
            for mode in [CorruptionMode::Tail, CorruptionMode::Head] {
                let negatives: Vec<EntityId> = (0..self.config.negatives).map(|_| rng.gen_range(0..n)).collect();
                let (loss, grads) = self.batch_gradients(model, kg, &batch, mode, &negatives)?;
                if !loss.is_finite() {
                    return Err(KgeError::Diverged {
                        epoch,
                        detail: format!("non-finite batch loss {loss}"),
                    });
                }
                self.apply(model, &grads);
                total += loss * batch.len() as f64;
                count += batch.len();
            }
        }
        self.epochs_done = epoch;
        let secs = start.elapsed().as_secs_f64();
        let loss = if count == 0 { 0.0 } else { total / count as f64 };
        if !loss.is_finite() {
            return Err(KgeError::Diverged {
                epoch,
                detail: format!("mean loss {loss}"),
            });
        }
        Ok(EpochStats {
            epoch,
            loss,
            triples_per_sec: if secs > 0.0 { train.len() as f64 / secs } else { 0.0 },
            wall_ms: secs * 1e3,
        })
    }

    /// Mean batch loss and its gradients.
    fn batch_gradients(
        &self,
        model: &ScoringModel,
        kg: &KnowledgeGraph,
        batch: &[Triple],
        mode: CorruptionMode,
        negatives: &[EntityId],
    ) -> Result<(f64, ModelGradients)> {
        let mut cache = RowCache::new(model);
        let neg_slots: Vec<usize> = negatives.iter().map(|&e| cache.entity_slot(e)).collect();
        let scale = 1.0 / batch.len() as f64;
        let mut loss_sum = 0.0;
        let mut kept: Vec<usize> = Vec::with_capacity(negatives.len());
        let mut scores: Vec<f64> = Vec::with_capacity(negatives.len());
        for t in batch {
            let (h, r, tl) = (cache.entity_slot(t.head), cache.relation_slot(t.relation), cache.entity_slot(t.tail));
            let pos = cache.score(h, r, tl);
            kept.clear();
            scores.clear();
            for (j, &e) in negatives.iter().enumerate() {
                if self.config.filtered_negatives && mode.is_observed(kg, t, e) {
                    continue;
                }
                kept.push(j);
                scores.push(match mode {
                    CorruptionMode::Tail => cache.score(h, r, neg_slots[j]),
                    CorruptionMode::Head => cache.score(neg_slots[j], r, tl),
                });
            }
            if scores.is_empty() {
                if !pos.is_finite() {
                    return Err(KgeError::NonFinite("positive score".into()));
                }
                loss_sum += -log_sigmoid(pos);
                let d = -1.0 / (1.0 + pos.exp());
                cache.accumulate(h, r, tl, d * scale);
                continue;
            }
            let out = self_adversarial_loss(pos, &scores, self.config.adversarial_temperature)?;
            loss_sum += out.loss;
            cache.accumulate(h, r, tl, out.d_positive * scale);
            for (&j, &d) in kept.iter().zip(&out.d_negatives) {
                match mode {
                    CorruptionMode::Tail => cache.accumulate(h, r, neg_slots[j], d * scale),
                    CorruptionMode::Head => cache.accumulate(neg_slots[j], r, tl, d * scale),
                }
            }
        }
        Ok((loss_sum * scale, cache.finish()))
    }

    fn apply(&mut self, model: &mut ScoringModel, grads: &ModelGradients) {
        let opt = self.optimizer.as_ref();
        for (&id, g) in &grads.entity_rows {
            self.entity_state.update_f32(opt, id as usize, model.entity_table_mut().stored_row_mut(id), g);
        }
        for (&id, g) in &grads.relation_rows {
            self.relation_state.update_f32(opt, id as usize, model.relation_row_mut(id), g);
        }
        if let (Some(g), Some(state)) = (&grads.basis, self.basis_state.as_mut()) {
            if let Some(basis) = model.entity_table_mut().basis_mut() {
                state.update_f32(opt, 0, basis, g);
            }
        }
    }
}
