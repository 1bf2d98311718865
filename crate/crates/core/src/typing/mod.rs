//! Self-supervised fine-grained entity typing: predict which directed
//! relation types an entity takes part in from its relational neighborhood.

pub mod checkpoint;
pub mod eval;
pub mod loss;
pub mod network;
pub mod subgraph;
pub mod trainer;


pub use checkpoint::{load_typing_checkpoint, read_typing_checkpoint, save_typing_checkpoint, write_typing_checkpoint, TYPING_MAGIC, TYPING_VERSION};
pub use eval::{evaluate_typing, typing_rank, TypingMetrics};
pub use loss::{ranking_loss, softmax_loss, typing_loss_registry, TypingLoss, TypingLossConfig, TypingTarget};
pub use network::{softmax, EdgeLayer, ForwardCache, TypingArchitecture, TypingGradients, TypingNetwork};
pub use subgraph::{
    apply_relation_mask, extract_relational_subgraph, unobserved_types, MaskOutcome, MaskedExample, RelationalSubgraph, SubgraphConfig, SubgraphEdge,
};
pub use trainer::{TypingEpochStats, TypingTrainConfig, TypingTrainer};
