//! Character-level encoder-decoder transformer trained from scratch, with
//! hand-written backpropagation, Adam, and greedy/beam decoding.

mod checkpoint;
mod decode;
mod float;
mod layers;
mod loss;
mod model;
mod optim;
mod params;
mod train;
mod vocab;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use checkpoint::{Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use decode::{beam_decode, greedy_decode, Hypothesis};
pub use float::Float;
pub use loss::{smoothed_cross_entropy, LossOutput};
pub use model::{Batch, Example, Transformer};
pub use optim::{clip_global_norm, Adam};
pub use params::ParamStore;
pub use train::{examples_from_pairs, train, LogRow, StepStats, TrainReport, Trainer};
pub use vocab::{Vocab, BOS, EOS, PAD};

#[derive(Debug, Error)]
pub enum Seq2SeqError {
    #[error("sequence of {len} tokens exceeds max_len {max}")]
    LengthExceeded { len: usize, max: usize },
    #[error("unknown token {0}")]
    UnknownToken(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite loss at update {update} (epoch {epoch}, last grad norm {grad_norm})")]
    NonFiniteLoss { update: u64, epoch: u64, grad_norm: f64 },
    #[error("empty batch or training set")]
    Empty,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Architecture. Encoder and decoder both have `layers` blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub layers: usize,
    pub heads: usize,
    pub d_model: usize,
    pub d_ff: usize,
    pub dropout: f64,
    /// Longest allowed sequence, counting the appended EOS (and the BOS of
    /// decoder inputs).
    pub max_len: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            layers: 4,
            heads: 4,
            d_model: 256,
            d_ff: 1024,
            dropout: 0.1,
            max_len: 64,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), Seq2SeqError> {
        let bad = |m: &str| Err(Seq2SeqError::Config(m.to_string()));
        if self.layers == 0 || self.heads == 0 || self.d_model == 0 || self.d_ff == 0 {
            return bad("layers, heads, d_model and d_ff must be positive");
        }
        if self.d_model % self.heads != 0 {
            return bad("d_model must be divisible by heads");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must be in [0, 1)");
        }
        if self.max_len < 2 {
            return bad("max_len must be at least 2");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub label_smoothing: f64,
    pub grad_clip_norm: f64,
    pub max_updates: u64,
    pub checkpoint_every_epochs: u64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.98,
            adam_eps: 1e-9,
            label_smoothing: 0.1,
            grad_clip_norm: 1.0,
            max_updates: 10_000,
            checkpoint_every_epochs: 10,
            batch_size: 400,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), Seq2SeqError> {
        let bad = |m: &str| Err(Seq2SeqError::Config(m.to_string()));
        if !(self.lr > 0.0) || !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("lr must be positive and betas in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.label_smoothing) {
            return bad("label_smoothing must be in [0, 1)");
        }
        if !(self.grad_clip_norm > 0.0) || self.batch_size == 0 || self.checkpoint_every_epochs == 0 {
            return bad("grad_clip_norm, batch_size and checkpoint_every_epochs must be positive");
        }
        Ok(())
    }
}
