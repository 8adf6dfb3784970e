use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::checkpoint::Checkpoint;
use super::model::{Batch, Example, Transformer};
use super::optim::{clip_global_norm, Adam};
use super::vocab::Vocab;
use super::{ModelConfig, Seq2SeqError, TrainConfig};
use crate::datagen::TokenPair;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub loss: f64,
    /// Global gradient norm before clipping.
    pub grad_norm: f64,
}

/// One row of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub update: u64,
    pub epoch: u64,
    pub loss: f64,
    pub grad_norm: f64,
}

pub fn examples_from_pairs(pairs: &[TokenPair], vocab: &Vocab) -> Result<Vec<Example>, Seq2SeqError> {
    pairs
        .iter()
        .map(|p| {
            Ok(Example {
                src: vocab.encode(&p.input)?,
                tgt: vocab.encode(&p.target)?,
            })
        })
        .collect()
}

/// Mutable training state: model, optimizer, RNG and counters.
pub struct Trainer {
    model: Transformer<f32>,
    adam: Adam<f32>,
    tc: TrainConfig,
    rng: ChaCha8Rng,
    update: u64,
    epoch: u64,
}

impl Trainer {
    /// Fresh model; initialization, shuffling and dropout all draw from one
    /// RNG seeded with `tc.seed`.
    pub fn new(mc: ModelConfig, tc: TrainConfig, vocab: Vocab) -> Result<Self, Seq2SeqError> {
        tc.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(tc.seed);
        let model = Transformer::new(mc, vocab, &mut rng)?;
        let adam = Adam::new(model.params(), tc.lr, tc.beta1, tc.beta2, tc.adam_eps);
        Ok(Trainer {
            model,
            adam,
            tc,
            rng,
            update: 0,
            epoch: 0,
        })
    }

    pub fn from_checkpoint(ckpt: Checkpoint) -> Self {
        let adam = ckpt.adam.unwrap_or_else(|| {
            let tc = &ckpt.train_config;
            Adam::new(ckpt.model.params(), tc.lr, tc.beta1, tc.beta2, tc.adam_eps)
        });
        Trainer {
            model: ckpt.model,
            adam,
            tc: ckpt.train_config,
            rng: ckpt.rng,
            update: ckpt.update,
            epoch: ckpt.epoch,
        }
    }

    pub fn model(&self) -> &Transformer<f32> {
        &self.model
    }

    pub fn update_count(&self) -> u64 {
        self.update
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            model: self.model.clone(),
            train_config: self.tc.clone(),
            update: self.update,
            epoch: self.epoch,
            rng: self.rng.clone(),
            adam: Some(self.adam.clone()),
        }
    }

    /// Backpropagation, global-norm clipping, one Adam update.
    pub fn train_step(&mut self, batch: &Batch) -> Result<StepStats, Seq2SeqError> {
        let (loss, mut grads) = self
            .model
            .loss_and_grad(batch, self.tc.label_smoothing, Some(&mut self.rng))?;
        let grad_norm = clip_global_norm(&mut grads, self.tc.grad_clip_norm);
        if !loss.is_finite() || !grad_norm.is_finite() {
            return Err(Seq2SeqError::NonFiniteLoss {
                update: self.update,
                epoch: self.epoch,
                grad_norm,
            });
        }
        self.adam.update(self.model.params_mut(), &grads);
        self.update += 1;
        Ok(StepStats { loss, grad_norm })
    }

    /// Trains until `max_updates`. Each completed epoch divisible by
    /// `checkpoint_every_epochs` and the final state are handed to `sink`.
    pub fn run(
        &mut self,
        examples: &[Example],
        sink: &mut dyn FnMut(&Checkpoint) -> Result<(), Seq2SeqError>,
    ) -> Result<Vec<LogRow>, Seq2SeqError> {
        if examples.is_empty() {
            return Err(Seq2SeqError::Empty);
        }
        let max_len = self.model.config().max_len;
        let mut log = Vec::new();
        'outer: while self.update < self.tc.max_updates {
            // Each epoch shuffles the identity order so a resumed run draws
            // the same permutations as an uninterrupted one.
            let mut order: Vec<usize> = (0..examples.len()).collect();
            order.shuffle(&mut self.rng);
            let n_batches = order.len().div_ceil(self.tc.batch_size);
            for (bi, chunk) in order.chunks(self.tc.batch_size).enumerate() {
                let batch = Batch::new(chunk.iter().map(|&i| &examples[i]), max_len)?;
                let st = self.train_step(&batch)?;
                log.push(LogRow {
                    update: self.update,
                    epoch: self.epoch,
                    loss: st.loss,
                    grad_norm: st.grad_norm,
                });
                if bi + 1 == n_batches {
                    self.epoch += 1;
                    if self.epoch % self.tc.checkpoint_every_epochs == 0 {
                        sink(&self.checkpoint())?;
                    }
                }
                if self.update >= self.tc.max_updates {
                    break 'outer;
                }
            }
        }
        sink(&self.checkpoint())?;
        Ok(log)
    }
}

pub struct TrainReport {
    pub log: Vec<LogRow>,
    pub final_checkpoint: Checkpoint,
}

/// Trains a fresh model on `examples`; periodic and final checkpoints go to
/// `sink`.
pub fn train(
    examples: &[Example],
    vocab: Vocab,
    mc: ModelConfig,
    tc: TrainConfig,
    sink: &mut dyn FnMut(&Checkpoint) -> Result<(), Seq2SeqError>,
) -> Result<TrainReport, Seq2SeqError> {
    let mut trainer = Trainer::new(mc, tc, vocab)?;
    let log = trainer.run(examples, sink)?;
    Ok(TrainReport {
        log,
        final_checkpoint: trainer.checkpoint(),
    })
}
