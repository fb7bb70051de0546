//! HeroGCN: higher-order graph clustering.
//!
//! The model fuses a fully connected autoencoder with graph convolutions,
//! maximizes mutual information between node-level and graph-level
//! representations, and trains under a trinary self-supervised objective
//! that includes a modularity constraint on the target distribution.
//!
//! Everything runs on a small reverse-mode differentiation tape over dense
//! matrices ([`tensor`]), so each loss is written in forward form only.

pub mod agcn;
pub mod autoencoder;
pub mod error;
pub mod gradcheck;
pub mod graph;
pub mod infomax;
pub mod metrics;
pub mod model;
pub mod selfsup;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use graph::{normalize, AttributedGraph, NormalizedAdjacency};
pub use model::{GraphInputs, LossSettings, ModelState};
pub use tensor::{Adam, Real, Tape, Tensor, Var};
pub use train::{hard_assign, total_loss, train, Precision, RunReport, TrainConfig};
