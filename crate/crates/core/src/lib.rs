//! Frequency-controlled nonce-verb reinflection experiments: data
//! generation, a character-level transformer, and the analysis battery.

pub mod datagen;
pub mod eval;
pub mod fixtures;
pub mod glmm;
pub mod gnm;
pub mod morpho;
pub mod pipeline;
pub mod seq2seq;
pub mod stats;
