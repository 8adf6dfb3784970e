//! Logistic regression with crossed random intercepts for items and
//! responders, fitted by Laplace-approximate penalized likelihood.
//!
//! For fixed random-effect SDs the joint mode of (intercept, slope, item
//! offsets, responder offsets) is found by damped Newton steps on the
//! penalized log-likelihood. The SDs maximize the Laplace approximation
//! `ℓ_pen − ½·log det(I + Σ^{1/2} Zᵀ W Z Σ^{1/2})`, searched one coordinate
//! at a time over a log grid (plus exactly zero) refined by golden section.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

pub const METHOD: &str = "Laplace-approximate penalized likelihood";

const MAX_OUTER: usize = 200;
const OUTER_TOL: f64 = 1e-8;
const MAX_NEWTON: usize = 100;
const LOG_SIGMA_GRID: (f64, f64, f64) = (-5.0, 2.0, 0.5);
const GOLDEN_TOL: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum GlmmError {
    #[error("complete separation: {0}")]
    Separation(String),
    #[error("need at least 2 distinct {0}")]
    TooFewGroups(&'static str),
    #[error("predictor has no variance or is not finite")]
    DegeneratePredictor,
    #[error("penalized Newton iterations did not converge")]
    NonConvergence,
    #[error("empty regression data")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionRow {
    /// True for an L-shaped answer.
    pub answer: bool,
    pub x: f64,
    pub item_id: String,
    pub responder_id: String,
}

/// Rows with dense item and responder indices.
#[derive(Debug, Clone)]
pub struct RegressionData {
    rows: Vec<RegressionRow>,
    item_ix: Vec<usize>,
    resp_ix: Vec<usize>,
    n_items: usize,
    n_responders: usize,
}

fn index(keys: impl Iterator<Item = String>) -> (Vec<usize>, usize) {
    let mut map = BTreeMap::new();
    let keys: Vec<String> = keys.collect();
    for k in &keys {
        let n = map.len();
        map.entry(k.clone()).or_insert(n);
    }
    (keys.iter().map(|k| map[k]).collect(), map.len())
}

impl RegressionData {
    pub fn new(rows: Vec<RegressionRow>) -> Result<Self, GlmmError> {
        if rows.is_empty() {
            return Err(GlmmError::Empty);
        }
        if rows.iter().any(|r| !r.x.is_finite()) {
            return Err(GlmmError::DegeneratePredictor);
        }
        let (item_ix, n_items) = index(rows.iter().map(|r| r.item_id.clone()));
        let (resp_ix, n_responders) = index(rows.iter().map(|r| r.responder_id.clone()));
        if n_items < 2 {
            return Err(GlmmError::TooFewGroups("items"));
        }
        if n_responders < 2 {
            return Err(GlmmError::TooFewGroups("responders"));
        }
        Ok(RegressionData {
            rows,
            item_ix,
            resp_ix,
            n_items,
            n_responders,
        })
    }

    pub fn rows(&self) -> &[RegressionRow] {
        &self.rows
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn n_responders(&self) -> usize {
        self.n_responders
    }

    fn check_separation(&self) -> Result<(), GlmmError> {
        check_separation(
            &self.rows.iter().map(|r| r.x).collect::<Vec<_>>(),
            &self.rows.iter().map(|r| r.answer).collect::<Vec<_>>(),
        )
    }
}

fn check_separation(x: &[f64], y: &[bool]) -> Result<(), GlmmError> {
    let n1 = y.iter().filter(|&&b| b).count();
    if n1 == 0 || n1 == y.len() {
        return Err(GlmmError::Separation("all answers are identical".into()));
    }
    let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(GlmmError::DegeneratePredictor);
    }
    let range = |want: bool| {
        x.iter()
            .zip(y)
            .filter(|(_, &b)| b == want)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (&v, _)| {
                (a.min(v), b.max(v))
            })
    };
    let (min1, max1) = range(true);
    let (min0, max0) = range(false);
    if max0 < min1 || max1 < min0 {
        return Err(GlmmError::Separation("x perfectly separates the answers".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub intercept: f64,
    pub beta: f64,
    pub se_beta: f64,
    pub wald_z: f64,
    pub p_value: f64,
    pub sigma_item: f64,
    pub sigma_responder: f64,
    /// Laplace-approximate marginal log-likelihood at the optimum.
    pub log_likelihood: f64,
    pub converged: bool,
    pub outer_iterations: usize,
    pub n_rows: usize,
    pub n_items: usize,
    pub n_responders: usize,
    pub method: String,
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Mode of the penalized likelihood for fixed SDs.
struct InnerFit {
    /// `[b0, b1, item offsets.., responder offsets..]`; inactive groups are 0.
    phi: Vec<f64>,
    /// Penalized log-likelihood after each accepted Newton step.
    #[cfg_attr(not(test), allow(dead_code))]
    trace: Vec<f64>,
    laplace: f64,
    se_beta: f64,
}

struct Problem<'a> {
    d: &'a RegressionData,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl<'a> Problem<'a> {
    fn new(d: &'a RegressionData) -> Self {
        Problem {
            d,
            x: d.rows.iter().map(|r| r.x).collect(),
            y: d.rows.iter().map(|r| if r.answer { 1.0 } else { 0.0 }).collect(),
        }
    }

    fn dim(&self) -> usize {
        2 + self.d.n_items + self.d.n_responders
    }

    /// Parameter slots touched by row `r`.
    fn slots(&self, r: usize) -> [usize; 4] {
        [0, 1, 2 + self.d.item_ix[r], 2 + self.d.n_items + self.d.resp_ix[r]]
    }

    fn eta(&self, phi: &[f64], r: usize) -> f64 {
        let s = self.slots(r);
        phi[0] + phi[1] * self.x[r] + phi[s[2]] + phi[s[3]]
    }

    /// Per-slot prior precision; `None` marks a slot held at zero.
    fn precisions(&self, si: f64, sr: f64) -> Vec<Option<f64>> {
        let mut p = vec![Some(0.0), Some(0.0)];
        let prec = |s: f64| if s > 0.0 { Some(1.0 / (s * s)) } else { None };
        p.extend(std::iter::repeat(prec(si)).take(self.d.n_items));
        p.extend(std::iter::repeat(prec(sr)).take(self.d.n_responders));
        p
    }

    fn pen_loglik(&self, phi: &[f64], prec: &[Option<f64>]) -> f64 {
        let mut ll = 0.0;
        for r in 0..self.y.len() {
            let e = self.eta(phi, r);
            ll += self.y[r] * e - softplus(e);
        }
        for (k, p) in prec.iter().enumerate() {
            if let Some(p) = p {
                ll -= 0.5 * p * phi[k] * phi[k];
            }
        }
        ll
    }

    fn fit(&self, si: f64, sr: f64, start: &[f64]) -> Result<InnerFit, GlmmError> {
        let prec = self.precisions(si, sr);
        let active: Vec<usize> = (0..self.dim()).filter(|&k| prec[k].is_some()).collect();
        let mut pos = vec![usize::MAX; self.dim()];
        for (i, &k) in active.iter().enumerate() {
            pos[k] = i;
        }
        let mut phi: Vec<f64> = start.to_vec();
        for k in 0..self.dim() {
            if prec[k].is_none() {
                phi[k] = 0.0;
            }
        }
        let mut ll = self.pen_loglik(&phi, &prec);
        let mut trace = vec![ll];
        for _ in 0..MAX_NEWTON {
            let (grad, info) = self.grad_info(&phi, &prec, &active, &pos);
            let chol = info.clone().cholesky().ok_or(GlmmError::NonConvergence)?;
            let step = chol.solve(&grad);
            let decrement = grad.dot(&step);
            if decrement < 1e-20 {
                return Ok(self.finish(phi, trace, info, &prec, &active));
            }
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let mut cand = phi.clone();
                for (i, &k) in active.iter().enumerate() {
                    cand[k] += t * step[i];
                }
                let cll = self.pen_loglik(&cand, &prec);
                if cll >= ll - 1e-12 * ll.abs().max(1.0) {
                    phi = cand;
                    ll = cll;
                    trace.push(ll);
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                return Err(GlmmError::NonConvergence);
            }
            if decrement < 1e-14 * ll.abs().max(1.0) {
                let (_, info) = self.grad_info(&phi, &prec, &active, &pos);
                return Ok(self.finish(phi, trace, info, &prec, &active));
            }
        }
        Err(GlmmError::NonConvergence)
    }

    /// Gradient and negative Hessian over the active slots.
    fn grad_info(
        &self,
        phi: &[f64],
        prec: &[Option<f64>],
        active: &[usize],
        pos: &[usize],
    ) -> (DVector<f64>, DMatrix<f64>) {
        let na = active.len();
        let mut g = DVector::zeros(na);
        let mut h = DMatrix::zeros(na, na);
        for r in 0..self.y.len() {
            let p = sigmoid(self.eta(phi, r));
            let w = p * (1.0 - p);
            let s = self.slots(r);
            let z = [1.0, self.x[r], 1.0, 1.0];
            for a in 0..4 {
                let ia = pos[s[a]];
                if ia == usize::MAX {
                    continue;
                }
                g[ia] += (self.y[r] - p) * z[a];
                for b in 0..4 {
                    let ib = pos[s[b]];
                    if ib != usize::MAX {
                        h[(ia, ib)] += w * z[a] * z[b];
                    }
                }
            }
        }
        for (i, &k) in active.iter().enumerate() {
            let pk = prec[k].unwrap_or(0.0);
            g[i] -= pk * phi[k];
            h[(i, i)] += pk;
        }
        (g, h)
    }

    fn finish(
        &self,
        phi: Vec<f64>,
        trace: Vec<f64>,
        info: DMatrix<f64>,
        prec: &[Option<f64>],
        active: &[usize],
    ) -> InnerFit {
        // Random block of the information matrix is ZᵀWZ + Σ⁻¹, so
        // log det(I + Σ^{1/2}ZᵀWZΣ^{1/2}) = log det(block) + Σ log σ².
        let rand: Vec<usize> = (2..active.len()).collect();
        let mut logdet = 0.0;
        if !rand.is_empty() {
            let block = info.select_rows(&rand).select_columns(&rand);
            let chol = block.cholesky().expect("positive definite");
            logdet = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
            for &i in &rand {
                logdet -= prec[active[i]].expect("active").ln();
            }
        }
        let cov = info.try_inverse().expect("positive definite");
        let ll = *trace.last().expect("initial value");
        InnerFit {
            phi,
            trace,
            laplace: ll - 0.5 * logdet,
            se_beta: cov[(1, 1)].max(0.0).sqrt(),
        }
    }
}

fn wald(beta: f64, se: f64) -> (f64, f64) {
    let z = beta / se;
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    let p = (2.0 * (1.0 - n.cdf(z.abs()))).clamp(0.0, 1.0);
    (z, p)
}

fn assemble(d: &RegressionData, f: &InnerFit, si: f64, sr: f64, converged: bool, iters: usize) -> RegressionFit {
    let (z, p) = wald(f.phi[1], f.se_beta);
    RegressionFit {
        intercept: f.phi[0],
        beta: f.phi[1],
        se_beta: f.se_beta,
        wald_z: z,
        p_value: p,
        sigma_item: si,
        sigma_responder: sr,
        log_likelihood: f.laplace,
        converged,
        outer_iterations: iters,
        n_rows: d.rows.len(),
        n_items: d.n_items,
        n_responders: d.n_responders,
        method: METHOD.to_string(),
    }
}

/// Fit with the random-effect SDs held fixed (0 drops that grouping).
pub fn fit_with_sigmas(
    data: &RegressionData,
    sigma_item: f64,
    sigma_responder: f64,
) -> Result<RegressionFit, GlmmError> {
    data.check_separation()?;
    let pr = Problem::new(data);
    let f = pr.fit(sigma_item.max(0.0), sigma_responder.max(0.0), &vec![0.0; pr.dim()])?;
    Ok(assemble(
        data,
        &f,
        sigma_item.max(0.0),
        sigma_responder.max(0.0),
        true,
        0,
    ))
}

/// Full fit: SDs chosen to maximize the Laplace-approximate likelihood.
pub fn fit(data: &RegressionData) -> Result<RegressionFit, GlmmError> {
    data.check_separation()?;
    let pr = Problem::new(data);
    let mut sig = [0.0f64, 0.0f64];
    let mut best = pr.fit(0.0, 0.0, &vec![0.0; pr.dim()])?;
    let (g0, g1, gs) = LOG_SIGMA_GRID;
    let grid: Vec<f64> = (0..)
        .map(|i| g0 + gs * i as f64)
        .take_while(|&t| t <= g1 + 1e-12)
        .collect();
    let mut converged = false;
    let mut iters = 0;
    while iters < MAX_OUTER {
        iters += 1;
        let before = best.laplace;
        for c in 0..2 {
            let start = best.phi.clone();
            let eval = |s: f64| -> Result<InnerFit, GlmmError> {
                let mut ss = sig;
                ss[c] = s;
                pr.fit(ss[0], ss[1], &start)
            };
            let mut cand_s = 0.0;
            let mut cand = eval(0.0)?;
            let mut best_k = None;
            for (k, &t) in grid.iter().enumerate() {
                let f = eval(t.exp())?;
                if f.laplace > cand.laplace {
                    cand = f;
                    cand_s = t.exp();
                    best_k = Some(k);
                }
            }
            if let Some(k) = best_k {
                let lo = grid[k.saturating_sub(1)];
                let hi = grid[(k + 1).min(grid.len() - 1)];
                let (t, f) = golden(lo, hi, |t| eval(t.exp()))?;
                if f.laplace > cand.laplace {
                    cand = f;
                    cand_s = t.exp();
                }
            }
            if cand.laplace >= best.laplace {
                sig[c] = cand_s;
                best = cand;
            }
        }
        if (best.laplace - before).abs() < OUTER_TOL {
            converged = true;
            break;
        }
    }
    Ok(assemble(data, &best, sig[0], sig[1], converged, iters))
}

fn golden<F>(mut a: f64, mut b: f64, mut f: F) -> Result<(f64, InnerFit), GlmmError>
where
    F: FnMut(f64) -> Result<InnerFit, GlmmError>,
{
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > GOLDEN_TOL {
        if fc.laplace > fd.laplace {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc.laplace > fd.laplace { (c, fc) } else { (d, fd) })
}

/// Ordinary logistic regression `y ~ 1 + x` by IRLS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticFit {
    pub intercept: f64,
    pub beta: f64,
    pub se_beta: f64,
    pub p_value: f64,
}

pub fn logistic_irls(x: &[f64], y: &[bool]) -> Result<LogisticFit, GlmmError> {
    if x.is_empty() || x.len() != y.len() {
        return Err(GlmmError::Empty);
    }
    check_separation(x, y)?;
    let mut b = [0.0f64, 0.0f64];
    for _ in 0..MAX_NEWTON {
        let (mut g0, mut g1, mut h00, mut h01, mut h11) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&xi, &yi) in x.iter().zip(y) {
            let p = sigmoid(b[0] + b[1] * xi);
            let w = p * (1.0 - p);
            let r = if yi { 1.0 } else { 0.0 } - p;
            g0 += r;
            g1 += r * xi;
            h00 += w;
            h01 += w * xi;
            h11 += w * xi * xi;
        }
        let det = h00 * h11 - h01 * h01;
        let d0 = (h11 * g0 - h01 * g1) / det;
        let d1 = (h00 * g1 - h01 * g0) / det;
        b[0] += d0;
        b[1] += d1;
        if d0.abs().max(d1.abs()) < 1e-12 {
            let se = (h00 / det).sqrt();
            let (_, p) = wald(b[1], se);
            return Ok(LogisticFit {
                intercept: b[0],
                beta: b[1],
                se_beta: se,
                p_value: p,
            });
        }
    }
    Err(GlmmError::NonConvergence)
}
