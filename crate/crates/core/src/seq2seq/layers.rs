//! Forward and backward passes of the building blocks. Activations are
//! row-major `(rows × features)` slices; every forward returns the cache its
//! backward needs.

use rand::Rng;

use super::float::{gemm, matmul, Float, View};
use super::params::{Init, ParamStore};

pub(crate) const LN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Linear {
    pub w: usize,
    pub b: usize,
    pub n_in: usize,
    pub n_out: usize,
}

impl Linear {
    pub fn new<F: Float>(p: &mut ParamStore<F>, name: &str, n_in: usize, n_out: usize, rng: &mut impl Rng) -> Self {
        Linear {
            w: p.add(format!("{name}.weight"), vec![n_in, n_out], Init::Xavier, rng),
            b: p.add(format!("{name}.bias"), vec![n_out], Init::Zeros, rng),
            n_in,
            n_out,
        }
    }

    pub fn forward<F: Float>(&self, p: &ParamStore<F>, x: &[F], rows: usize) -> Vec<F> {
        let mut y = Vec::with_capacity(rows * self.n_out);
        for _ in 0..rows {
            y.extend_from_slice(&p.data[self.b]);
        }
        matmul(
            x,
            false,
            &p.data[self.w],
            false,
            &mut y,
            rows,
            self.n_in,
            self.n_out,
            true,
        );
        y
    }

    pub fn backward<F: Float>(
        &self,
        p: &ParamStore<F>,
        g: &mut ParamStore<F>,
        x: &[F],
        dy: &[F],
        rows: usize,
    ) -> Vec<F> {
        matmul(
            x,
            true,
            dy,
            false,
            &mut g.data[self.w],
            self.n_in,
            rows,
            self.n_out,
            true,
        );
        let gb = &mut g.data[self.b];
        for r in dy.chunks_exact(self.n_out) {
            for (a, &d) in gb.iter_mut().zip(r) {
                *a += d;
            }
        }
        let mut dx = vec![F::zero(); rows * self.n_in];
        matmul(
            dy,
            false,
            &p.data[self.w],
            true,
            &mut dx,
            rows,
            self.n_out,
            self.n_in,
            false,
        );
        dx
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LayerNorm {
    pub g: usize,
    pub b: usize,
    pub dim: usize,
}

pub(crate) struct LnCache<F> {
    xhat: Vec<F>,
    rstd: Vec<F>,
}

impl LayerNorm {
    pub fn new<F: Float>(p: &mut ParamStore<F>, name: &str, dim: usize, rng: &mut impl Rng) -> Self {
        LayerNorm {
            g: p.add(format!("{name}.gamma"), vec![dim], Init::Ones, rng),
            b: p.add(format!("{name}.beta"), vec![dim], Init::Zeros, rng),
            dim,
        }
    }

    pub fn forward<F: Float>(&self, p: &ParamStore<F>, x: &[F]) -> (Vec<F>, LnCache<F>) {
        let d = self.dim;
        let nf = F::of(d as f64);
        let eps = F::of(LN_EPS);
        let (gamma, beta) = (&p.data[self.g], &p.data[self.b]);
        let mut y = Vec::with_capacity(x.len());
        let mut xhat = Vec::with_capacity(x.len());
        let mut rstd = Vec::with_capacity(x.len() / d);
        for row in x.chunks_exact(d) {
            let mean = row.iter().copied().sum::<F>() / nf;
            let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<F>() / nf;
            let r = F::one() / (var + eps).sqrt();
            rstd.push(r);
            for j in 0..d {
                let h = (row[j] - mean) * r;
                xhat.push(h);
                y.push(h * gamma[j] + beta[j]);
            }
        }
        (y, LnCache { xhat, rstd })
    }

    pub fn backward<F: Float>(&self, p: &ParamStore<F>, g: &mut ParamStore<F>, c: &LnCache<F>, dy: &[F]) -> Vec<F> {
        let d = self.dim;
        let nf = F::of(d as f64);
        let gamma = &p.data[self.g];
        let mut dx = vec![F::zero(); dy.len()];
        let mut dxhat = vec![F::zero(); d];
        for (r, ((dyr, xh), dxr)) in dy
            .chunks_exact(d)
            .zip(c.xhat.chunks_exact(d))
            .zip(dx.chunks_exact_mut(d))
            .enumerate()
        {
            {
                let gg = &mut g.data[self.g];
                for j in 0..d {
                    gg[j] += dyr[j] * xh[j];
                }
            }
            {
                let gb = &mut g.data[self.b];
                for j in 0..d {
                    gb[j] += dyr[j];
                }
            }
            let mut m1 = F::zero();
            let mut m2 = F::zero();
            for j in 0..d {
                dxhat[j] = dyr[j] * gamma[j];
                m1 += dxhat[j];
                m2 += dxhat[j] * xh[j];
            }
            m1 /= nf;
            m2 /= nf;
            let rs = c.rstd[r];
            for j in 0..d {
                dxr[j] = rs * (dxhat[j] - m1 - xh[j] * m2);
            }
        }
        dx
    }
}

/// Multi-head scaled dot-product attention with input and output projections.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Attention {
    pub q: Linear,
    pub k: Linear,
    pub v: Linear,
    pub o: Linear,
    pub heads: usize,
}

/// Shape and masking of one attention call.
#[derive(Clone, Copy)]
pub(crate) struct AttnShape<'a> {
    pub batch: usize,
    pub tq: usize,
    pub tk: usize,
    /// `batch × tk`; false marks padding keys.
    pub key_valid: &'a [bool],
    pub causal: bool,
}

pub(crate) struct AttnCache<F> {
    xq: Vec<F>,
    xkv: Vec<F>,
    q: Vec<F>,
    k: Vec<F>,
    v: Vec<F>,
    /// `batch × heads × tq × tk`; masked entries are exactly zero.
    pub probs: Vec<F>,
    ctx: Vec<F>,
}

impl Attention {
    pub fn new<F: Float>(p: &mut ParamStore<F>, name: &str, d: usize, heads: usize, rng: &mut impl Rng) -> Self {
        Attention {
            q: Linear::new(p, &format!("{name}.q"), d, d, rng),
            k: Linear::new(p, &format!("{name}.k"), d, d, rng),
            v: Linear::new(p, &format!("{name}.v"), d, d, rng),
            o: Linear::new(p, &format!("{name}.out"), d, d, rng),
            heads,
        }
    }

    pub fn forward<F: Float>(&self, p: &ParamStore<F>, xq: &[F], xkv: &[F], s: AttnShape) -> (Vec<F>, AttnCache<F>) {
        let d = self.q.n_out;
        let (h, dh) = (self.heads, d / self.heads);
        let (b, tq, tk) = (s.batch, s.tq, s.tk);
        let q = self.q.forward(p, xq, b * tq);
        let k = self.k.forward(p, xkv, b * tk);
        let v = self.v.forward(p, xkv, b * tk);
        let scale = F::one() / F::of(dh as f64).sqrt();
        let mut probs = vec![F::zero(); b * h * tq * tk];
        let mut ctx = vec![F::zero(); b * tq * d];
        for bi in 0..b {
            let valid = &s.key_valid[bi * tk..(bi + 1) * tk];
            for hi in 0..h {
                let qo = bi * tq * d + hi * dh;
                let ko = bi * tk * d + hi * dh;
                let po = (bi * h + hi) * tq * tk;
                let pr = &mut probs[po..po + tq * tk];
                gemm(
                    scale,
                    &q[qo..],
                    View::strided(tq, dh, d),
                    &k[ko..],
                    View::strided(tk, dh, d).t(),
                    F::zero(),
                    pr,
                    View::rowmajor(tq, tk),
                );
                for i in 0..tq {
                    let row = &mut pr[i * tk..(i + 1) * tk];
                    let allowed = |j: usize| valid[j] && (!s.causal || j <= i);
                    let mut mx = F::neg_infinity();
                    for (j, &x) in row.iter().enumerate() {
                        if allowed(j) && x > mx {
                            mx = x;
                        }
                    }
                    if mx == F::neg_infinity() {
                        row.iter_mut().for_each(|x| *x = F::zero());
                        continue;
                    }
                    let mut sum = F::zero();
                    for (j, x) in row.iter_mut().enumerate() {
                        *x = if allowed(j) { (*x - mx).exp() } else { F::zero() };
                        sum += *x;
                    }
                    row.iter_mut().for_each(|x| *x /= sum);
                }
                gemm(
                    F::one(),
                    pr,
                    View::rowmajor(tq, tk),
                    &v[ko..],
                    View::strided(tk, dh, d),
                    F::zero(),
                    &mut ctx[qo..],
                    View::strided(tq, dh, d),
                );
            }
        }
        let out = self.o.forward(p, &ctx, b * tq);
        let cache = AttnCache {
            xq: xq.to_vec(),
            xkv: xkv.to_vec(),
            q,
            k,
            v,
            probs,
            ctx,
        };
        (out, cache)
    }

    /// Returns gradients with respect to the query input and the key/value input.
    pub fn backward<F: Float>(
        &self,
        p: &ParamStore<F>,
        g: &mut ParamStore<F>,
        c: &AttnCache<F>,
        dout: &[F],
        s: AttnShape,
    ) -> (Vec<F>, Vec<F>) {
        let d = self.q.n_out;
        let (h, dh) = (self.heads, d / self.heads);
        let (b, tq, tk) = (s.batch, s.tq, s.tk);
        let scale = F::one() / F::of(dh as f64).sqrt();
        let dctx = self.o.backward(p, g, &c.ctx, dout, b * tq);
        let mut dq = vec![F::zero(); b * tq * d];
        let mut dk = vec![F::zero(); b * tk * d];
        let mut dv = vec![F::zero(); b * tk * d];
        let mut ds = vec![F::zero(); tq * tk];
        for bi in 0..b {
            for hi in 0..h {
                let qo = bi * tq * d + hi * dh;
                let ko = bi * tk * d + hi * dh;
                let po = (bi * h + hi) * tq * tk;
                let pr = &c.probs[po..po + tq * tk];
                gemm(
                    F::one(),
                    &dctx[qo..],
                    View::strided(tq, dh, d),
                    &c.v[ko..],
                    View::strided(tk, dh, d).t(),
                    F::zero(),
                    &mut ds,
                    View::rowmajor(tq, tk),
                );
                gemm(
                    F::one(),
                    pr,
                    View::rowmajor(tq, tk).t(),
                    &dctx[qo..],
                    View::strided(tq, dh, d),
                    F::one(),
                    &mut dv[ko..],
                    View::strided(tk, dh, d),
                );
                for i in 0..tq {
                    let prow = &pr[i * tk..(i + 1) * tk];
                    let drow = &mut ds[i * tk..(i + 1) * tk];
                    let dot: F = prow.iter().zip(drow.iter()).map(|(&a, &b)| a * b).sum();
                    for (dsx, &px) in drow.iter_mut().zip(prow) {
                        *dsx = px * (*dsx - dot);
                    }
                }
                gemm(
                    scale,
                    &ds,
                    View::rowmajor(tq, tk),
                    &c.k[ko..],
                    View::strided(tk, dh, d),
                    F::zero(),
                    &mut dq[qo..],
                    View::strided(tq, dh, d),
                );
                gemm(
                    scale,
                    &ds,
                    View::rowmajor(tq, tk).t(),
                    &c.q[qo..],
                    View::strided(tq, dh, d),
                    F::one(),
                    &mut dk[ko..],
                    View::strided(tk, dh, d),
                );
            }
        }
        let dxq = self.q.backward(p, g, &c.xq, &dq, b * tq);
        let mut dxkv = self.k.backward(p, g, &c.xkv, &dk, b * tk);
        let dxv = self.v.backward(p, g, &c.xkv, &dv, b * tk);
        add_into(&mut dxkv, &dxv);
        (dxq, dxkv)
    }
}

/// Position-wise `relu(x W1 + b1) W2 + b2`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FeedForward {
    pub l1: Linear,
    pub l2: Linear,
}

pub(crate) struct FfCache<F> {
    x: Vec<F>,
    h: Vec<F>,
}

impl FeedForward {
    pub fn new<F: Float>(p: &mut ParamStore<F>, name: &str, d: usize, d_ff: usize, rng: &mut impl Rng) -> Self {
        FeedForward {
            l1: Linear::new(p, &format!("{name}.fc1"), d, d_ff, rng),
            l2: Linear::new(p, &format!("{name}.fc2"), d_ff, d, rng),
        }
    }

    pub fn forward<F: Float>(&self, p: &ParamStore<F>, x: &[F], rows: usize) -> (Vec<F>, FfCache<F>) {
        let mut h = self.l1.forward(p, x, rows);
        h.iter_mut().for_each(|v| *v = v.max(F::zero()));
        let y = self.l2.forward(p, &h, rows);
        (y, FfCache { x: x.to_vec(), h })
    }

    pub fn backward<F: Float>(
        &self,
        p: &ParamStore<F>,
        g: &mut ParamStore<F>,
        c: &FfCache<F>,
        dy: &[F],
        rows: usize,
    ) -> Vec<F> {
        let mut dh = self.l2.backward(p, g, &c.h, dy, rows);
        for (d, &h) in dh.iter_mut().zip(&c.h) {
            if h <= F::zero() {
                *d = F::zero();
            }
        }
        self.l1.backward(p, g, &c.x, &dh, rows)
    }
}

/// Inverted dropout. Returns the mask (entries 0 or 1/(1-rate)) when active.
pub(crate) fn dropout<F: Float, R: Rng>(x: &mut [F], rate: f64, rng: Option<&mut R>) -> Option<Vec<F>> {
    let rng = rng?;
    if rate <= 0.0 {
        return None;
    }
    let keep = F::of(1.0 / (1.0 - rate));
    let mask: Vec<F> = (0..x.len())
        .map(|_| if rng.gen::<f64>() < rate { F::zero() } else { keep })
        .collect();
    for (v, &m) in x.iter_mut().zip(&mask) {
        *v *= m;
    }
    Some(mask)
}

pub(crate) fn dropout_backward<F: Float>(dy: &[F], mask: &Option<Vec<F>>) -> Vec<F> {
    match mask {
        Some(m) => dy.iter().zip(m).map(|(&a, &b)| a * b).collect(),
        None => dy.to_vec(),
    }
}

pub(crate) fn add_into<F: Float>(acc: &mut [F], x: &[F]) {
    for (a, &b) in acc.iter_mut().zip(x) {
        *a += b;
    }
}
