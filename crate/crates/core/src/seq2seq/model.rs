use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::float::Float;
use super::layers::{
    add_into, dropout, dropout_backward, Attention, AttnCache, AttnShape, FeedForward, FfCache, LayerNorm, Linear,
    LnCache,
};
use super::loss::smoothed_cross_entropy;
use super::params::{Init, ParamStore};
use super::vocab::{Vocab, BOS, EOS, PAD};
use super::{ModelConfig, Seq2SeqError};

/// One training pair as content ids (no specials).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub src: Vec<u32>,
    pub tgt: Vec<u32>,
}

/// Padded batch. Encoder rows are `src + EOS`, decoder inputs `BOS + tgt`,
/// decoder outputs `tgt + EOS`.
#[derive(Debug, Clone)]
pub struct Batch {
    pub size: usize,
    pub src_len: usize,
    pub tgt_len: usize,
    pub src: Vec<u32>,
    pub tgt_in: Vec<u32>,
    pub tgt_out: Vec<u32>,
}

impl Batch {
    pub fn new<'a, I>(examples: I, max_len: usize) -> Result<Self, Seq2SeqError>
    where
        I: IntoIterator<Item = &'a Example>,
    {
        let ex: Vec<&Example> = examples.into_iter().collect();
        if ex.is_empty() {
            return Err(Seq2SeqError::Empty);
        }
        let src_len = ex.iter().map(|e| e.src.len() + 1).max().unwrap_or(1);
        let tgt_len = ex.iter().map(|e| e.tgt.len() + 1).max().unwrap_or(1);
        for len in [src_len, tgt_len] {
            if len > max_len {
                return Err(Seq2SeqError::LengthExceeded { len, max: max_len });
            }
        }
        let mut b = Batch {
            size: ex.len(),
            src_len,
            tgt_len,
            src: vec![PAD; ex.len() * src_len],
            tgt_in: vec![PAD; ex.len() * tgt_len],
            tgt_out: vec![PAD; ex.len() * tgt_len],
        };
        for (i, e) in ex.iter().enumerate() {
            let s = &mut b.src[i * src_len..];
            s[..e.src.len()].copy_from_slice(&e.src);
            s[e.src.len()] = EOS;
            let ti = &mut b.tgt_in[i * tgt_len..];
            ti[0] = BOS;
            ti[1..=e.tgt.len()].copy_from_slice(&e.tgt);
            let to = &mut b.tgt_out[i * tgt_len..];
            to[..e.tgt.len()].copy_from_slice(&e.tgt);
            to[e.tgt.len()] = EOS;
        }
        Ok(b)
    }
}

#[derive(Debug, Clone, Copy)]
struct EncLayer {
    ln1: LayerNorm,
    attn: Attention,
    ln2: LayerNorm,
    ff: FeedForward,
}

#[derive(Debug, Clone, Copy)]
struct DecLayer {
    ln1: LayerNorm,
    self_attn: Attention,
    ln2: LayerNorm,
    cross: Attention,
    ln3: LayerNorm,
    ff: FeedForward,
}

#[derive(Debug, Clone)]
struct Layout {
    emb: usize,
    enc: Vec<EncLayer>,
    enc_ln: LayerNorm,
    dec: Vec<DecLayer>,
    dec_ln: LayerNorm,
    out: Linear,
}

impl Layout {
    fn build<F: Float>(cfg: &ModelConfig, vocab_size: usize, rng: &mut ChaCha8Rng) -> (ParamStore<F>, Layout) {
        let d = cfg.d_model;
        let mut p = ParamStore::default();
        let emb = p.add(
            "embed.weight".into(),
            vec![vocab_size, d],
            Init::Normal((d as f64).powf(-0.5)),
            rng,
        );
        let enc = (0..cfg.layers)
            .map(|l| {
                let n = format!("encoder.{l}");
                EncLayer {
                    ln1: LayerNorm::new(&mut p, &format!("{n}.ln1"), d, rng),
                    attn: Attention::new(&mut p, &format!("{n}.self_attn"), d, cfg.heads, rng),
                    ln2: LayerNorm::new(&mut p, &format!("{n}.ln2"), d, rng),
                    ff: FeedForward::new(&mut p, &format!("{n}.ffn"), d, cfg.d_ff, rng),
                }
            })
            .collect();
        let enc_ln = LayerNorm::new(&mut p, "encoder.ln_final", d, rng);
        let dec = (0..cfg.layers)
            .map(|l| {
                let n = format!("decoder.{l}");
                DecLayer {
                    ln1: LayerNorm::new(&mut p, &format!("{n}.ln1"), d, rng),
                    self_attn: Attention::new(&mut p, &format!("{n}.self_attn"), d, cfg.heads, rng),
                    ln2: LayerNorm::new(&mut p, &format!("{n}.ln2"), d, rng),
                    cross: Attention::new(&mut p, &format!("{n}.cross_attn"), d, cfg.heads, rng),
                    ln3: LayerNorm::new(&mut p, &format!("{n}.ln3"), d, rng),
                    ff: FeedForward::new(&mut p, &format!("{n}.ffn"), d, cfg.d_ff, rng),
                }
            })
            .collect();
        let dec_ln = LayerNorm::new(&mut p, "decoder.ln_final", d, rng);
        let out = Linear::new(&mut p, "output", d, vocab_size, rng);
        (
            p,
            Layout {
                emb,
                enc,
                enc_ln,
                dec,
                dec_ln,
                out,
            },
        )
    }
}

fn sinusoidal<F: Float>(max_len: usize, d: usize) -> Vec<F> {
    let mut pe = vec![F::zero(); max_len * d];
    for pos in 0..max_len {
        for i in 0..d / 2 {
            let angle = pos as f64 / 10000f64.powf(2.0 * i as f64 / d as f64);
            pe[pos * d + 2 * i] = F::of(angle.sin());
            pe[pos * d + 2 * i + 1] = F::of(angle.cos());
        }
        if d % 2 == 1 {
            pe[pos * d + d - 1] = F::of((pos as f64 / 10000f64).sin());
        }
    }
    pe
}

/// Pre-LN encoder-decoder transformer. The token embedding is shared by
/// encoder and decoder; the output projection is separate.
#[derive(Debug, Clone)]
pub struct Transformer<F> {
    cfg: ModelConfig,
    vocab: Vocab,
    params: ParamStore<F>,
    layout: Layout,
    pe: Vec<F>,
}

struct EncLayerCache<F> {
    ln1: LnCache<F>,
    attn: AttnCache<F>,
    m1: Option<Vec<F>>,
    ln2: LnCache<F>,
    ff: FfCache<F>,
    m2: Option<Vec<F>>,
}

struct DecLayerCache<F> {
    ln1: LnCache<F>,
    sa: AttnCache<F>,
    m1: Option<Vec<F>>,
    ln2: LnCache<F>,
    ca: AttnCache<F>,
    m2: Option<Vec<F>>,
    ln3: LnCache<F>,
    ff: FfCache<F>,
    m3: Option<Vec<F>>,
}

pub(crate) struct EncOut<F> {
    pub mem: Vec<F>,
    pub valid: Vec<bool>,
    pub len: usize,
    emb_mask: Option<Vec<F>>,
    layers: Vec<EncLayerCache<F>>,
    ln: LnCache<F>,
}

struct DecOut<F> {
    hidden: Vec<F>,
    emb_mask: Option<Vec<F>>,
    layers: Vec<DecLayerCache<F>>,
    ln: LnCache<F>,
}

impl<F: Float> Transformer<F> {
    /// Randomly initialized model; the draw depends only on `rng`.
    pub fn new(cfg: ModelConfig, vocab: Vocab, rng: &mut ChaCha8Rng) -> Result<Self, Seq2SeqError> {
        cfg.validate()?;
        let (params, layout) = Layout::build(&cfg, vocab.len(), rng);
        let pe = sinusoidal(cfg.max_len, cfg.d_model);
        Ok(Transformer {
            cfg,
            vocab,
            params,
            layout,
            pe,
        })
    }

    /// Every parameter, including layer-norm gains, set to zero.
    pub fn zeros(cfg: ModelConfig, vocab: Vocab) -> Result<Self, Seq2SeqError> {
        let mut m = Self::new(cfg, vocab, &mut ChaCha8Rng::seed_from_u64(0))?;
        m.params.fill(F::zero());
        Ok(m)
    }

    /// Rebuilds a model around existing tensors; names and shapes must match.
    pub fn from_params(cfg: ModelConfig, vocab: Vocab, params: ParamStore<F>) -> Result<Self, Seq2SeqError> {
        let mut m = Self::new(cfg, vocab, &mut ChaCha8Rng::seed_from_u64(0))?;
        if params.len() != m.params.len() {
            return Err(Seq2SeqError::Checkpoint(format!(
                "expected {} tensors, found {}",
                m.params.len(),
                params.len()
            )));
        }
        for i in 0..params.len() {
            if params.name(i) != m.params.name(i) || params.shape(i) != m.params.shape(i) {
                return Err(Seq2SeqError::Checkpoint(format!(
                    "tensor {i}: expected {} {:?}, found {} {:?}",
                    m.params.name(i),
                    m.params.shape(i),
                    params.name(i),
                    params.shape(i)
                )));
            }
        }
        m.params = params;
        Ok(m)
    }

    /// Same model in another precision.
    pub fn cast<G: Float>(&self) -> Transformer<G> {
        Transformer::from_params(self.cfg.clone(), self.vocab.clone(), self.params.cast())
            .expect("layout unchanged by casting")
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn params(&self) -> &ParamStore<F> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<F> {
        &mut self.params
    }

    fn embed(&self, ids: &[u32], t: usize, rng: Option<&mut ChaCha8Rng>) -> (Vec<F>, Option<Vec<F>>) {
        let d = self.cfg.d_model;
        let scale = F::of((d as f64).sqrt());
        let table = &self.params.data[self.layout.emb];
        let mut x = Vec::with_capacity(ids.len() * d);
        for (i, &id) in ids.iter().enumerate() {
            let row = &table[id as usize * d..(id as usize + 1) * d];
            let pe = &self.pe[(i % t) * d..(i % t + 1) * d];
            x.extend(row.iter().zip(pe).map(|(&e, &p)| e * scale + p));
        }
        let mask = dropout(&mut x, self.cfg.dropout, rng);
        (x, mask)
    }

    fn embed_backward(&self, g: &mut ParamStore<F>, ids: &[u32], dx: &[F], mask: &Option<Vec<F>>) {
        let d = self.cfg.d_model;
        let scale = F::of((d as f64).sqrt());
        let dx = dropout_backward(dx, mask);
        let ge = &mut g.data[self.layout.emb];
        for (i, &id) in ids.iter().enumerate() {
            let dst = &mut ge[id as usize * d..(id as usize + 1) * d];
            for (a, &b) in dst.iter_mut().zip(&dx[i * d..(i + 1) * d]) {
                *a += b * scale;
            }
        }
    }

    pub(crate) fn encode(&self, src: &[u32], b: usize, s: usize, mut rng: Option<&mut ChaCha8Rng>) -> EncOut<F> {
        let p = &self.params;
        let rate = self.cfg.dropout;
        let valid: Vec<bool> = src.iter().map(|&t| t != PAD).collect();
        let (mut x, emb_mask) = self.embed(src, s, rng.as_deref_mut());
        let shape = AttnShape {
            batch: b,
            tq: s,
            tk: s,
            key_valid: &valid,
            causal: false,
        };
        let mut layers = Vec::with_capacity(self.layout.enc.len());
        for l in &self.layout.enc {
            let (a, ln1) = l.ln1.forward(p, &x);
            let (mut sa, attn) = l.attn.forward(p, &a, &a, shape);
            let m1 = dropout(&mut sa, rate, rng.as_deref_mut());
            add_into(&mut x, &sa);
            let (c, ln2) = l.ln2.forward(p, &x);
            let (mut f, ff) = l.ff.forward(p, &c, b * s);
            let m2 = dropout(&mut f, rate, rng.as_deref_mut());
            add_into(&mut x, &f);
            layers.push(EncLayerCache {
                ln1,
                attn,
                m1,
                ln2,
                ff,
                m2,
            });
        }
        let (mem, ln) = self.layout.enc_ln.forward(p, &x);
        EncOut {
            mem,
            valid,
            len: s,
            emb_mask,
            layers,
            ln,
        }
    }

    fn decode(
        &self,
        mem: &[F],
        mem_valid: &[bool],
        s: usize,
        tgt_in: &[u32],
        b: usize,
        t: usize,
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> DecOut<F> {
        let p = &self.params;
        let rate = self.cfg.dropout;
        let tgt_valid: Vec<bool> = tgt_in.iter().map(|&x| x != PAD).collect();
        let self_shape = AttnShape {
            batch: b,
            tq: t,
            tk: t,
            key_valid: &tgt_valid,
            causal: true,
        };
        let cross_shape = AttnShape {
            batch: b,
            tq: t,
            tk: s,
            key_valid: mem_valid,
            causal: false,
        };
        let (mut y, emb_mask) = self.embed(tgt_in, t, rng.as_deref_mut());
        let mut layers = Vec::with_capacity(self.layout.dec.len());
        for l in &self.layout.dec {
            let (a, ln1) = l.ln1.forward(p, &y);
            let (mut sa_out, sa) = l.self_attn.forward(p, &a, &a, self_shape);
            let m1 = dropout(&mut sa_out, rate, rng.as_deref_mut());
            add_into(&mut y, &sa_out);
            let (c, ln2) = l.ln2.forward(p, &y);
            let (mut ca_out, ca) = l.cross.forward(p, &c, mem, cross_shape);
            let m2 = dropout(&mut ca_out, rate, rng.as_deref_mut());
            add_into(&mut y, &ca_out);
            let (e, ln3) = l.ln3.forward(p, &y);
            let (mut f, ff) = l.ff.forward(p, &e, b * t);
            let m3 = dropout(&mut f, rate, rng.as_deref_mut());
            add_into(&mut y, &f);
            layers.push(DecLayerCache {
                ln1,
                sa,
                m1,
                ln2,
                ca,
                m2,
                ln3,
                ff,
                m3,
            });
        }
        let (hidden, ln) = self.layout.dec_ln.forward(p, &y);
        DecOut {
            hidden,
            emb_mask,
            layers,
            ln,
        }
    }

    fn check_ids(&self, ids: &[u32]) -> Result<(), Seq2SeqError> {
        self.vocab.check_ids(ids)
    }

    /// Logits for every decoder position: `prefix.len() × vocab` row-major.
    /// `src` holds content ids (EOS is appended); `prefix` is the decoder
    /// input and normally starts with BOS. Dropout is off.
    pub fn forward(&self, src: &[u32], prefix: &[u32]) -> Result<Vec<F>, Seq2SeqError> {
        self.check_ids(src)?;
        self.check_ids(prefix)?;
        let max = self.cfg.max_len;
        if src.len() + 1 > max {
            return Err(Seq2SeqError::LengthExceeded {
                len: src.len() + 1,
                max,
            });
        }
        if prefix.is_empty() || prefix.len() > max {
            return Err(Seq2SeqError::LengthExceeded { len: prefix.len(), max });
        }
        let mut s: Vec<u32> = src.to_vec();
        s.push(EOS);
        let enc = self.encode(&s, 1, s.len(), None);
        let dec = self.decode(&enc.mem, &enc.valid, enc.len, prefix, 1, prefix.len(), None);
        Ok(self.layout.out.forward(&self.params, &dec.hidden, prefix.len()))
    }

    /// Encodes content-id sources (EOS appended, padded to a common length).
    pub(crate) fn encode_sources(&self, srcs: &[&[u32]]) -> Result<EncOut<F>, Seq2SeqError> {
        let s = srcs.iter().map(|x| x.len() + 1).max().ok_or(Seq2SeqError::Empty)?;
        if s > self.cfg.max_len {
            return Err(Seq2SeqError::LengthExceeded {
                len: s,
                max: self.cfg.max_len,
            });
        }
        let mut ids = vec![PAD; srcs.len() * s];
        for (i, x) in srcs.iter().enumerate() {
            self.check_ids(x)?;
            ids[i * s..i * s + x.len()].copy_from_slice(x);
            ids[i * s + x.len()] = EOS;
        }
        Ok(self.encode(&ids, srcs.len(), s, None))
    }

    /// Log-probabilities of the next token after each prefix. Prefix `i`
    /// attends to encoded source `rows[i]`; all prefixes have equal length.
    pub(crate) fn next_log_probs(&self, enc: &EncOut<F>, rows: &[usize], prefixes: &[Vec<u32>]) -> Vec<Vec<f64>> {
        let n = prefixes.len();
        if n == 0 {
            return Vec::new();
        }
        let t = prefixes[0].len();
        let (s, d) = (enc.len, self.cfg.d_model);
        let mut mem = Vec::with_capacity(n * s * d);
        let mut valid = Vec::with_capacity(n * s);
        for &r in rows {
            mem.extend_from_slice(&enc.mem[r * s * d..(r + 1) * s * d]);
            valid.extend_from_slice(&enc.valid[r * s..(r + 1) * s]);
        }
        let ids: Vec<u32> = prefixes.iter().flatten().copied().collect();
        let dec = self.decode(&mem, &valid, s, &ids, n, t, None);
        let mut last = Vec::with_capacity(n * d);
        for i in 0..n {
            last.extend_from_slice(&dec.hidden[(i * t + t - 1) * d..(i * t + t) * d]);
        }
        let logits = self.layout.out.forward(&self.params, &last, n);
        logits
            .chunks_exact(self.vocab.len())
            .map(|row| {
                let mx = row.iter().map(|x| x.f64()).fold(f64::NEG_INFINITY, f64::max);
                let lse = mx + row.iter().map(|x| (x.f64() - mx).exp()).sum::<f64>().ln();
                row.iter().map(|x| x.f64() - lse).collect()
            })
            .collect()
    }

    /// Mean smoothed cross-entropy with dropout off.
    pub fn batch_loss(&self, batch: &Batch, smoothing: f64) -> Result<f64, Seq2SeqError> {
        let (b, s, t) = (batch.size, batch.src_len, batch.tgt_len);
        let enc = self.encode(&batch.src, b, s, None);
        let dec = self.decode(&enc.mem, &enc.valid, s, &batch.tgt_in, b, t, None);
        let logits = self.layout.out.forward(&self.params, &dec.hidden, b * t);
        Ok(smoothed_cross_entropy(&logits, &batch.tgt_out, self.vocab.len(), smoothing)?.loss)
    }

    /// Loss and its gradient with respect to every parameter. Dropout is
    /// applied only when `rng` is given.
    pub fn loss_and_grad(
        &self,
        batch: &Batch,
        smoothing: f64,
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(f64, ParamStore<F>), Seq2SeqError> {
        self.check_ids(&batch.src)?;
        self.check_ids(&batch.tgt_in)?;
        let (b, s, t) = (batch.size, batch.src_len, batch.tgt_len);
        let p = &self.params;
        let d = self.cfg.d_model;
        let enc = self.encode(&batch.src, b, s, rng.as_deref_mut());
        let dec = self.decode(&enc.mem, &enc.valid, s, &batch.tgt_in, b, t, rng);
        let logits = self.layout.out.forward(p, &dec.hidden, b * t);
        let lo = smoothed_cross_entropy(&logits, &batch.tgt_out, self.vocab.len(), smoothing)?;

        let mut g = p.zeros_like();
        let dh = self.layout.out.backward(p, &mut g, &dec.hidden, &lo.dlogits, b * t);
        let mut dy = self.layout.dec_ln.backward(p, &mut g, &dec.ln, &dh);
        let mut dmem = vec![F::zero(); b * s * d];
        let tgt_valid: Vec<bool> = batch.tgt_in.iter().map(|&x| x != PAD).collect();
        let self_shape = AttnShape {
            batch: b,
            tq: t,
            tk: t,
            key_valid: &tgt_valid,
            causal: true,
        };
        let cross_shape = AttnShape {
            batch: b,
            tq: t,
            tk: s,
            key_valid: &enc.valid,
            causal: false,
        };
        for (l, c) in self.layout.dec.iter().zip(&dec.layers).rev() {
            let df = dropout_backward(&dy, &c.m3);
            let de = l.ff.backward(p, &mut g, &c.ff, &df, b * t);
            add_into(&mut dy, &l.ln3.backward(p, &mut g, &c.ln3, &de));

            let dca = dropout_backward(&dy, &c.m2);
            let (dc, dm) = l.cross.backward(p, &mut g, &c.ca, &dca, cross_shape);
            add_into(&mut dmem, &dm);
            add_into(&mut dy, &l.ln2.backward(p, &mut g, &c.ln2, &dc));

            let dsa = dropout_backward(&dy, &c.m1);
            let (mut da, dkv) = l.self_attn.backward(p, &mut g, &c.sa, &dsa, self_shape);
            add_into(&mut da, &dkv);
            add_into(&mut dy, &l.ln1.backward(p, &mut g, &c.ln1, &da));
        }
        self.embed_backward(&mut g, &batch.tgt_in, &dy, &dec.emb_mask);

        let mut dx = self.layout.enc_ln.backward(p, &mut g, &enc.ln, &dmem);
        let enc_shape = AttnShape {
            batch: b,
            tq: s,
            tk: s,
            key_valid: &enc.valid,
            causal: false,
        };
        for (l, c) in self.layout.enc.iter().zip(&enc.layers).rev() {
            let df = dropout_backward(&dx, &c.m2);
            let dc = l.ff.backward(p, &mut g, &c.ff, &df, b * s);
            add_into(&mut dx, &l.ln2.backward(p, &mut g, &c.ln2, &dc));

            let dsa = dropout_backward(&dx, &c.m1);
            let (mut da, dkv) = l.attn.backward(p, &mut g, &c.attn, &dsa, enc_shape);
            add_into(&mut da, &dkv);
            add_into(&mut dx, &l.ln1.backward(p, &mut g, &c.ln1, &da));
        }
        self.embed_backward(&mut g, &batch.src, &dx, &enc.emb_mask);
        Ok((lo.loss, g))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg() -> ModelConfig {
        ModelConfig {
            layers: 2,
            heads: 2,
            d_model: 8,
            d_ff: 16,
            dropout: 0.0,
            max_len: 12,
        }
    }

    fn vocab() -> Vocab {
        Vocab::new(["a", "b", "c", "d"]).unwrap()
    }

    fn examples() -> Vec<Example> {
        vec![
            Example {
                src: vec![3, 4, 5],
                tgt: vec![5, 6],
            },
            Example {
                src: vec![6],
                tgt: vec![3, 3, 4, 6],
            },
            Example {
                src: vec![4, 4, 3, 6, 5],
                tgt: vec![4],
            },
        ]
    }

    #[test]
    fn zero_model_gives_uniform_logits() {
        let m = Transformer::<f32>::zeros(tiny_cfg(), vocab()).unwrap();
        let logits = m.forward(&[3, 4], &[BOS, 5, 6]).unwrap();
        assert_eq!(logits.len(), 3 * 7);
        assert!(logits.iter().all(|&x| x == logits[0]));
    }

    #[test]
    fn eval_forward_is_bit_identical_across_calls() {
        let m = Transformer::<f32>::new(tiny_cfg(), vocab(), &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let a = m.forward(&[3, 4, 5], &[BOS, 6]).unwrap();
        let b = m.forward(&[3, 4, 5], &[BOS, 6]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn forward_rejects_bad_input() {
        let m = Transformer::<f32>::zeros(tiny_cfg(), vocab()).unwrap();
        assert!(matches!(m.forward(&[9], &[BOS]), Err(Seq2SeqError::UnknownToken(_))));
        assert!(matches!(
            m.forward(&[3; 12], &[BOS]),
            Err(Seq2SeqError::LengthExceeded { .. })
        ));
        let mut cfg = tiny_cfg();
        cfg.heads = 3;
        assert!(Transformer::<f32>::zeros(cfg, vocab()).is_err());
    }

    #[test]
    fn padding_does_not_change_a_sequence_loss() {
        let m = Transformer::<f64>::new(tiny_cfg(), vocab(), &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let ex = examples();
        let alone = Batch::new(&ex[..1], 12).unwrap();
        let l_alone = m.batch_loss(&alone, 0.1).unwrap();
        let padded = Batch::new(&ex, 12).unwrap();
        let logits_alone = m.forward(&ex[0].src, &alone.tgt_in).unwrap();
        let enc = m.encode(&padded.src, 3, padded.src_len, None);
        let dec = m.decode(
            &enc.mem,
            &enc.valid,
            padded.src_len,
            &padded.tgt_in,
            3,
            padded.tgt_len,
            None,
        );
        let logits_padded = m.layout.out.forward(&m.params, &dec.hidden, 3 * padded.tgt_len);
        for (a, b) in logits_alone.iter().zip(&logits_padded) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(l_alone.is_finite());
    }

    #[test]
    fn gradients_match_central_differences() {
        let mut m = Transformer::<f64>::new(tiny_cfg(), vocab(), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let batch = Batch::new(&examples(), 12).unwrap();
        let (_, g) = m.loss_and_grad(&batch, 0.1, None).unwrap();
        let h = 1e-5;
        let mut worst = 0.0f64;
        for ti in 0..g.len() {
            for k in (0..g.data[ti].len()).step_by(3) {
                let x = m.params().data[ti][k];
                m.params_mut().data[ti][k] = x + h;
                let up = m.batch_loss(&batch, 0.1).unwrap();
                m.params_mut().data[ti][k] = x - h;
                let down = m.batch_loss(&batch, 0.1).unwrap();
                m.params_mut().data[ti][k] = x;
                let num = (up - down) / (2.0 * h);
                let ana = g.data[ti][k];
                let rel = (num - ana).abs() / num.abs().max(ana.abs()).max(1e-6);
                worst = worst.max(rel);
            }
        }
        assert!(worst < 1e-4, "worst relative error {worst}");
    }
}
