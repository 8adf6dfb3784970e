//! Checkpoint container:
//!
//! ```text
//! "MLCKPT" | u32 version | u64 header length | JSON header | f32 data
//! ```
//!
//! Integers and floats are little-endian. The header carries both configs,
//! the vocabulary, counters, the RNG state and the ordered tensor index
//! (name and shape). Data holds the parameters in index order, followed by
//! the Adam first and second moments in the same order when present.

use std::io::{Read, Write};
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::Transformer;
use super::optim::Adam;
use super::params::ParamStore;
use super::vocab::Vocab;
use super::{ModelConfig, Seq2SeqError, TrainConfig};

pub const CHECKPOINT_MAGIC: &[u8; 6] = b"MLCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub model: Transformer<f32>,
    pub train_config: TrainConfig,
    pub update: u64,
    pub epoch: u64,
    pub rng: ChaCha8Rng,
    pub adam: Option<Adam<f32>>,
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    model_config: ModelConfig,
    train_config: TrainConfig,
    vocab: Vocab,
    update: u64,
    epoch: u64,
    rng: ChaCha8Rng,
    adam_step: Option<u64>,
    tensors: Vec<TensorEntry>,
}

fn corrupt(msg: impl Into<String>) -> Seq2SeqError {
    Seq2SeqError::Checkpoint(msg.into())
}

impl Checkpoint {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), Seq2SeqError> {
        let p = self.model.params();
        let header = Header {
            model_config: self.model.config().clone(),
            train_config: self.train_config.clone(),
            vocab: self.model.vocab().clone(),
            update: self.update,
            epoch: self.epoch,
            rng: self.rng.clone(),
            adam_step: self.adam.as_ref().map(|a| a.step),
            tensors: (0..p.len())
                .map(|i| TensorEntry {
                    name: p.name(i).to_string(),
                    shape: p.shape(i).to_vec(),
                })
                .collect(),
        };
        let json = serde_json::to_vec(&header).map_err(|e| corrupt(e.to_string()))?;
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        w.write_all(&(json.len() as u64).to_le_bytes())?;
        w.write_all(&json)?;
        let mut stores = vec![p];
        if let Some(a) = &self.adam {
            stores.push(&a.m);
            stores.push(&a.v);
        }
        let mut buf = Vec::new();
        for s in stores {
            for t in &s.data {
                buf.clear();
                buf.extend(t.iter().flat_map(|x| x.to_le_bytes()));
                w.write_all(&buf)?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, Seq2SeqError> {
        let mut magic = [0u8; 6];
        r.read_exact(&mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(corrupt("not a checkpoint file"));
        }
        let mut u32b = [0u8; 4];
        r.read_exact(&mut u32b)?;
        let version = u32::from_le_bytes(u32b);
        if version != CHECKPOINT_VERSION {
            return Err(corrupt(format!("unsupported version {version}")));
        }
        let mut u64b = [0u8; 8];
        r.read_exact(&mut u64b)?;
        let hlen = u64::from_le_bytes(u64b) as usize;
        let mut json = vec![0u8; hlen];
        r.read_exact(&mut json)?;
        let h: Header = serde_json::from_slice(&json).map_err(|e| corrupt(e.to_string()))?;

        let mut read_store = |template: &ParamStore<f32>| -> Result<ParamStore<f32>, Seq2SeqError> {
            let mut s = template.zeros_like();
            for t in &mut s.data {
                let mut bytes = vec![0u8; t.len() * 4];
                r.read_exact(&mut bytes)?;
                for (x, c) in t.iter_mut().zip(bytes.chunks_exact(4)) {
                    *x = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
                }
            }
            Ok(s)
        };
        let template = Transformer::<f32>::zeros(h.model_config.clone(), h.vocab.clone())?;
        let tp = template.params();
        if tp.len() != h.tensors.len()
            || h.tensors
                .iter()
                .enumerate()
                .any(|(i, e)| e.name != tp.name(i) || e.shape != tp.shape(i))
        {
            return Err(corrupt("tensor index does not match the model configuration"));
        }
        let params = read_store(tp)?;
        let adam = match h.adam_step {
            Some(step) => {
                let m = read_store(tp)?;
                let v = read_store(tp)?;
                let tc = &h.train_config;
                Some(Adam {
                    lr: tc.lr,
                    beta1: tc.beta1,
                    beta2: tc.beta2,
                    eps: tc.adam_eps,
                    step,
                    m,
                    v,
                })
            }
            None => None,
        };
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(corrupt(format!("{} trailing bytes", rest.len())));
        }
        Ok(Checkpoint {
            model: Transformer::from_params(h.model_config, h.vocab, params)?,
            train_config: h.train_config,
            update: h.update,
            epoch: h.epoch,
            rng: h.rng,
            adam,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), Seq2SeqError> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, Seq2SeqError> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }

    /// Drops optimizer state, e.g. for smaller files meant only for decoding.
    pub fn without_optimizer(mut self) -> Self {
        self.adam = None;
        self
    }
}
