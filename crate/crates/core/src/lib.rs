//! Gradient blending for multi-modal late-fusion classifiers.
//!
//! Jointly trained late-fusion networks often lose to their best uni-modal
//! counterpart because modalities overfit and generalize at different rates.
//! This crate measures that imbalance (overfitting-to-generalization ratio),
//! estimates per-head loss weights that minimize it, and trains multi-head
//! fusion models with the re-weighted loss — together with the analytic
//! oracles, baselines, and synthetic datasets needed to verify the scheme at
//! desk scale.

pub mod blend;
pub mod checkpoint;
pub mod datagen;
pub mod error;
pub mod fusion;
pub mod linalg;
pub mod nn;
pub mod ogr;
pub mod oracle;
pub mod presets;
pub mod rng;
pub mod tensor;
pub mod trainer;

pub use error::{Error, Result};
pub use fusion::{ArchSpec, BlendWeights, EncoderSpec, MultiHeadNet};
pub use ogr::{CheckpointRecord, MetricKind, OgrReport};
pub use rng::RngSeed;
pub use tensor::Tensor;
