//! Negative sampling, the self-adversarial loss, the epoch loop and model
//! checkpoints for scoring models.

pub mod checkpoint;
mod loss;
mod negatives;
mod trainer;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use loss::{log_sigmoid, self_adversarial_loss, AdversarialLoss};
pub use negatives::{sample_negatives, CorruptionMode};
pub use trainer::{EpochStats, KgeTrainer, TrainConfig};
