//! Knowledge-graph embedding engine with two efficiency mechanisms:
//!
//! * low-rank entity tables (`Z = Z_d · W`), which cut entity parameters from
//!   `|E|·d` to `|E|·r + r·d`;
//! * typing-aware inference, which learns a distribution over the directed
//!   relation types an entity takes part in and uses it to shortlist answer
//!   candidates before the embedding model ranks them.
//!
//! Interchangeable algorithm families (scoring models, optimizers, typing
//! losses, candidate scorers) live behind traits and are looked up by name
//! through [`registry::Registry`].

// `!(x >= 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod embedding;
pub mod error;
pub mod graph;
pub mod inference;
pub mod metrics;
pub mod models;
pub mod optim;
pub mod registry;
pub mod rng;
pub mod synthetic;
pub mod training;
pub mod typing;

pub use error::{KgeError, Result};
pub use graph::{EntityId, KnowledgeGraph, RelationId, Triple};
