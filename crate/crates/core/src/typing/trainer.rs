use std::time::Instant;

use rand::seq::SliceRandom;
use serde::Serialize;

use super::loss::{typing_loss_registry, TypingLoss, TypingLossConfig, TypingTarget};
use super::network::{TypingGradients, TypingNetwork};
use super::subgraph::{apply_relation_mask, extract_relational_subgraph, MaskOutcome, SubgraphConfig};
use crate::error::{KgeError, Result};
use crate::graph::{EntityId, KnowledgeGraph};
use crate::optim::{optimizer_registry, Optimizer, OptimizerOptions, RowState};
use crate::rng::{streams, substream};

#[derive(Clone, Debug)]
pub struct TypingTrainConfig {
    pub loss: String,
    pub loss_config: TypingLossConfig,
    pub optimizer: String,
    pub learning_rate: f64,
    /// Masked examples per parameter update.
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub subgraph: SubgraphConfig,
}

impl Default for TypingTrainConfig {
    fn default() -> Self {
        Self {
            loss: "ranking".into(),
            loss_config: TypingLossConfig::default(),
            optimizer: "adam".into(),
            learning_rate: 1e-3,
            batch_size: 32,
            epochs: 20,
            seed: 0,
            subgraph: SubgraphConfig::default(),
        }
    }
}

impl TypingTrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.loss_config.validate()?;
        if self.batch_size == 0 {
            return Err(KgeError::InvalidArgument("typing batch_size must be ≥ 1".into()));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(KgeError::InvalidArgument("typing learning_rate must be a finite value ≥ 0".into()));
        }
        if self.subgraph.hops == 0 || self.subgraph.per_type_cap == 0 || self.subgraph.expand_cap == 0 {
            return Err(KgeError::InvalidArgument("hops, per_type_cap and expand_cap must be ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TypingEpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub examples: usize,
    /// Entities with fewer than two distinct directed types.
    pub skipped: usize,
    pub wall_ms: f64,
}

/// Masked-type training loop with persistent optimizer state.
#[derive(Debug)]
pub struct TypingTrainer {
    config: TypingTrainConfig,
    loss: Box<dyn TypingLoss>,
    optimizer: Box<dyn Optimizer>,
    states: Vec<RowState>,
    epochs_done: usize,
}

impl TypingTrainer {
    pub fn new(network: &TypingNetwork, config: TypingTrainConfig) -> Result<Self> {
        config.validate()?;
        let loss = typing_loss_registry().create(&config.loss, &config.loss_config)?;
        let optimizer = optimizer_registry().create(
            &config.optimizer,
            &OptimizerOptions {
                learning_rate: config.learning_rate,
            },
        )?;
        let sw = optimizer.state_width();
        let states = network.blocks().iter().map(|b| RowState::new(1, b.len(), sw)).collect();
        Ok(Self {
            config,
            loss,
            optimizer,
            states,
            epochs_done: 0,
        })
    }

    pub fn config(&self) -> &TypingTrainConfig {
        &self.config
    }

    pub fn epochs_done(&self) -> usize {
        self.epochs_done
    }

    /// One shuffled pass over all entities.
    pub fn train_epoch(&mut self, network: &mut TypingNetwork, kg: &KnowledgeGraph) -> Result<TypingEpochStats> {
        if network.architecture().relation_count != kg.relation_count() {
            return Err(KgeError::InvalidArgument(format!(
                "typing network built for {} relations, graph has {}",
                network.architecture().relation_count,
                kg.relation_count()
            )));
        }
        let start = Instant::now();
        let epoch = self.epochs_done + 1;
        let seed = self.config.seed;
        let mut order: Vec<EntityId> = (0..kg.entity_count() as EntityId).collect();
        order.shuffle(&mut substream(seed, streams::SHUFFLE, epoch as u64));
        let mut sub_rng = substream(seed, streams::SUBGRAPH, epoch as u64);
        let mut mask_rng = substream(seed, streams::MASKING, epoch as u64);

        let mut grads = TypingGradients::zeros(network);
        let mut in_batch = 0usize;
        let mut total = 0.0;
        let mut examples = 0usize;
        let mut skipped = 0usize;
        for &e in &order {
            if kg.incidence().distinct_types(e).nth(1).is_none() {
                skipped += 1;
                continue;
            }
            let sub = extract_relational_subgraph(kg, e, &self.config.subgraph, &mut sub_rng)?;
            let MaskOutcome::Masked(ex) = apply_relation_mask(&sub, kg, &mut mask_rng) else {
                skipped += 1;
                continue;
            };
            let (cache, logits) = network.forward_cached(&ex.subgraph)?;
            let logits = logits.to_vec();
            let (loss, d_logits) = self.loss.evaluate(
                &logits,
                TypingTarget {
                    observed: &ex.observed,
                    masked: ex.masked_type,
                },
            )?;
            if !loss.is_finite() {
                return Err(KgeError::Diverged {
                    epoch,
                    detail: format!("non-finite typing loss at entity {e}"),
                });
            }
            network.backward(&ex.subgraph, &cache, &d_logits, &mut grads);
            total += loss;
            examples += 1;
            in_batch += 1;
            if in_batch == self.config.batch_size {
                self.apply(network, &mut grads, in_batch);
                in_batch = 0;
            }
        }
        if in_batch > 0 {
            self.apply(network, &mut grads, in_batch);
        }
        self.epochs_done = epoch;
        Ok(TypingEpochStats {
            epoch,
            loss: if examples == 0 { 0.0 } else { total / examples as f64 },
            examples,
            skipped,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        })
    }

    /// Mean-gradient step on every block; parameters are kept at f32
    /// precision.
    fn apply(&mut self, network: &mut TypingNetwork, grads: &mut TypingGradients, count: usize) {
        grads.scale(1.0 / count as f64);
        let opt = self.optimizer.as_ref();
        for ((params, g), state) in network.blocks_mut().into_iter().zip(grads.blocks()).zip(&mut self.states) {
            state.update_f64(opt, 0, params, g);
            params.iter_mut().for_each(|p| *p = *p as f32 as f64);
        }
        grads.scale(0.0);
    }
}
