//! Preference log-ratios, Spearman rank correlation, the two-sample
//! Kolmogorov-Smirnov test and mean/SD/CI summaries.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::eval::{Classification, ResponseRecord};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("empty input")]
    EmptyInput,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} observations, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("constant input: rank correlation undefined")]
    ConstantInput,
    #[error("non-finite value in input")]
    NonFinite,
}

/// z value for a two-sided 95% normal interval.
pub const Z_95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for a single value.
    pub sd: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
}

/// Mean, SD and the normal-approximation 95% interval mean ± 1.96·SD/√n.
pub fn summarize(xs: &[f64]) -> Result<Summary, StatsError> {
    if xs.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let half = Z_95 * sd / n.sqrt();
    Ok(Summary {
        mean,
        sd,
        ci_low: mean - half,
        ci_high: mean + half,
        n: xs.len(),
    })
}

/// Smoothed log-ratio settings. Defaults: base 10, add-one, clamp ±3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogRatioConfig {
    pub base: f64,
    pub alpha: f64,
    pub clamp: f64,
}

impl Default for LogRatioConfig {
    fn default() -> Self {
        LogRatioConfig {
            base: 10.0,
            alpha: 1.0,
            clamp: 3.0,
        }
    }
}

/// `log_base((natural + α) / (l_shaped + α))`, clamped to ±clamp. Positive
/// values mean a preference for the natural response.
pub fn log_ratio(natural: u64, l_shaped: u64, cfg: &LogRatioConfig) -> f64 {
    let r = ((natural as f64 + cfg.alpha) / (l_shaped as f64 + cfg.alpha)).log(cfg.base);
    r.clamp(-cfg.clamp, cfg.clamp)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioUnit {
    PerItem,
    PerResponder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceRatio {
    pub unit: RatioUnit,
    /// Item id or responder id, depending on `unit`.
    pub key: String,
    pub n_natural: u64,
    pub n_lshaped: u64,
    pub log_ratio: f64,
}

/// One ratio per item (or responder), in order of first appearance.
/// `Other` responses are dropped before counting.
pub fn preference_log_ratio(records: &[ResponseRecord], unit: RatioUnit, cfg: &LogRatioConfig) -> Vec<PreferenceRatio> {
    let mut groups: Vec<(String, u64, u64)> = Vec::new();
    for r in records {
        let key = match unit {
            RatioUnit::PerItem => &r.item_id,
            RatioUnit::PerResponder => &r.responder_id,
        };
        let idx = match groups.iter().position(|(k, _, _)| k == key) {
            Some(i) => i,
            None => {
                groups.push((key.clone(), 0, 0));
                groups.len() - 1
            }
        };
        match r.classification {
            Classification::Natural => groups[idx].1 += 1,
            Classification::LShaped => groups[idx].2 += 1,
            Classification::Other => {}
        }
    }
    groups
        .into_iter()
        .map(|(key, n_natural, n_lshaped)| PreferenceRatio {
            unit,
            key,
            n_natural,
            n_lshaped,
            log_ratio: log_ratio(n_natural, n_lshaped, cfg),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueMethod {
    ExactPermutation,
    TApproximation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub rho: f64,
    pub p_value: f64,
    pub n: usize,
    pub method: PValueMethod,
}

/// Largest n for which Spearman p-values are computed by full enumeration.
pub const EXACT_PERMUTATION_MAX_N: usize = 8;

/// Relative tolerance when comparing a permuted |ρ| against the observed one.
const PERMUTATION_TIE_TOL: f64 = 1e-9;

/// Average ranks (1-based); tied values share the mean of their positions.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's ρ as the Pearson correlation of average ranks. The two-sided
/// p-value is exact (all n! permutations) for n ≤ 8 and uses the t
/// approximation with n − 2 degrees of freedom otherwise.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<CorrelationResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(StatsError::TooFew {
            needed: 3,
            got: x.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let n = x.len();
    let cx = centered(&average_ranks(x));
    let cy = centered(&average_ranks(y));
    let sxx: f64 = cx.iter().map(|v| v * v).sum();
    let syy: f64 = cy.iter().map(|v| v * v).sum();
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ConstantInput);
    }
    let denom = (sxx * syy).sqrt();
    let rho = (dot(&cx, &cy) / denom).clamp(-1.0, 1.0);

    if n <= EXACT_PERMUTATION_MAX_N {
        let threshold = rho.abs() * (1.0 - PERMUTATION_TIE_TOL);
        let mut perm = cy.clone();
        let mut hits = 0u64;
        let mut total = 0u64;
        for_each_permutation(&mut perm, |p| {
            total += 1;
            if (dot(&cx, p) / denom).abs() >= threshold {
                hits += 1;
            }
        });
        return Ok(CorrelationResult {
            rho,
            p_value: hits as f64 / total as f64,
            n,
            method: PValueMethod::ExactPermutation,
        });
    }

    let df = (n - 2) as f64;
    let p_value = if rho.abs() >= 1.0 {
        0.0
    } else {
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
        (2.0 * dist.sf(t.abs())).min(1.0)
    };
    Ok(CorrelationResult {
        rho,
        p_value,
        n,
        method: PValueMethod::TApproximation,
    })
}

fn centered(v: &[f64]) -> Vec<f64> {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| x - mean).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Heap's algorithm; visits every permutation of `v` exactly once.
fn for_each_permutation(v: &mut [f64], mut visit: impl FnMut(&[f64])) {
    let n = v.len();
    let mut c = vec![0usize; n];
    visit(v);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                v.swap(0, i);
            } else {
                v.swap(c[i], i);
            }
            visit(v);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub d_stat: f64,
    pub p_value: f64,
    pub n1: usize,
    pub n2: usize,
}

/// Two-sample KS test. D is the supremum distance between the empirical
/// CDFs; p comes from the asymptotic Kolmogorov distribution evaluated at
/// √(n1·n2/(n1+n2))·D.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n1, n2) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n1 && j < n2 {
        let v = a[i].min(b[j]);
        while i < n1 && a[i] <= v {
            i += 1;
        }
        while j < n2 && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n1 as f64 - j as f64 / n2 as f64).abs());
    }
    // Past the end of one sample the remaining gap only shrinks to zero, so
    // the last evaluated point already holds the maximum.
    let ne = (n1 * n2) as f64 / (n1 + n2) as f64;
    Ok(KsResult {
        d_stat: d,
        p_value: kolmogorov_sf(ne.sqrt() * d),
        n1,
        n2,
    })
}

const KS_MAX_TERMS: usize = 100;
const KS_TOL: f64 = 1e-10;

/// Survival function of the Kolmogorov distribution, P(K > λ).
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-transformed series, fast for small λ.
        let mut sum = 0.0;
        for k in 1..=KS_MAX_TERMS {
            let m = (2 * k - 1) as f64;
            let term = (-(m * m) * PI * PI / (8.0 * lambda * lambda)).exp();
            sum += term;
            if term < KS_TOL * sum.max(f64::MIN_POSITIVE) {
                break;
            }
        }
        (1.0 - (2.0 * PI).sqrt() / lambda * sum).clamp(0.0, 1.0)
    } else {
        let mut sum = 0.0;
        for k in 1..=KS_MAX_TERMS {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            sum += if k % 2 == 1 { term } else { -term };
            if term < KS_TOL {
                break;
            }
        }
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

/// `*`, `**`, `***` at p ≤ 0.05 / 0.01 / 0.001.
pub fn significance_stars(p: f64) -> &'static str {
    if p <= 0.001 {
        "***"
    } else if p <= 0.01 {
        "**"
    } else if p <= 0.05 {
        "*"
    } else {
        ""
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn log_ratio_examples() {
        let cfg = LogRatioConfig::default();
        assert_eq!(log_ratio(7, 7, &cfg), 0.0);
        assert_abs_diff_eq!(log_ratio(9, 0, &cfg), 1.0, epsilon = 1e-15);
        assert_eq!(log_ratio(1_000_000, 0, &cfg), 3.0);
        assert_eq!(log_ratio(0, 1_000_000, &cfg), -3.0);
    }

    #[test]
    fn spearman_identities() {
        let x = [0.3, 1.2, -4.0, 7.5, 2.2];
        assert_abs_diff_eq!(spearman(&x, &x).unwrap().rho, 1.0, epsilon = 1e-12);
        let y: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_abs_diff_eq!(spearman(&x, &y).unwrap().rho, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn spearman_three_point_case_by_enumeration() {
        // Six permutations of y-ranks against x = (1,2,3): ρ ∈ {1, .5, .5, -.5, -.5, -1}.
        // |ρ| ≥ 0.5 holds for all six.
        let r = spearman(&[1.0, 2.0, 3.0], &[2.0, 1.0, 3.0]).unwrap();
        assert_abs_diff_eq!(r.rho, 0.5, epsilon = 1e-15);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.method, PValueMethod::ExactPermutation);
    }

    #[test]
    fn spearman_errors() {
        assert_eq!(spearman(&[1.0, 2.0], &[1.0]), Err(StatsError::LengthMismatch(2, 1)));
        assert_eq!(
            spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(StatsError::ConstantInput)
        );
        assert!(matches!(
            spearman(&[1.0, 2.0], &[1.0, 2.0]),
            Err(StatsError::TooFew { .. })
        ));
    }

    #[test]
    fn spearman_large_n_uses_t_approximation() {
        let x: Vec<f64> = (0..15).map(f64::from).collect();
        let y: Vec<f64> = (0..15).map(|i| ((i * 7) % 15) as f64).collect();
        let r = spearman(&x, &y).unwrap();
        assert_eq!(r.method, PValueMethod::TApproximation);
        assert!((0.0..=1.0).contains(&r.p_value));
    }

    #[test]
    fn ks_trivial_cases() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(ks_two_sample(&a, &a).unwrap().d_stat, 0.0);
        assert_eq!(ks_two_sample(&a, &[10.0, 11.0]).unwrap().d_stat, 1.0);
        // ECDFs at 1, 1.5, 2, 2.5: (.5,0) (.5,.5) (1,.5) (1,1)
        assert_abs_diff_eq!(ks_two_sample(&[1.0, 2.0], &[1.5, 2.5]).unwrap().d_stat, 0.5);
        assert_eq!(ks_two_sample(&[], &a), Err(StatsError::EmptyInput));
    }

    #[test]
    fn kolmogorov_branches_agree_near_the_switch() {
        for lam in [1.1, 1.15, 1.17, 1.19, 1.25] {
            let mut alt = 0.0;
            for k in 1..=100 {
                let kf = k as f64;
                let t = (-2.0 * kf * kf * lam * lam).exp();
                alt += if k % 2 == 1 { t } else { -t };
            }
            assert_abs_diff_eq!(kolmogorov_sf(lam), 2.0 * alt, epsilon = 1e-10);
        }
        // Known value: P(K > 1.36) ≈ 0.0494
        assert_abs_diff_eq!(kolmogorov_sf(1.36), 0.0494, epsilon = 5e-4);
        assert_eq!(kolmogorov_sf(0.0), 1.0);
    }

    #[test]
    fn summary_examples() {
        let s = summarize(&[4.0, 4.0, 4.0]).unwrap();
        assert_eq!((s.sd, s.ci_low, s.ci_high), (0.0, 4.0, 4.0));
        assert_eq!(summarize(&[0.0, 100.0]).unwrap().mean, 50.0);
        assert_eq!(summarize(&[]), Err(StatsError::EmptyInput));
    }

    #[test]
    fn stars() {
        assert_eq!(significance_stars(0.0005), "***");
        assert_eq!(significance_stars(0.01), "**");
        assert_eq!(significance_stars(0.04), "*");
        assert_eq!(significance_stars(0.2), "");
    }
}
