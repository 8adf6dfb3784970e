use super::float::Float;
use super::vocab::PAD;
use super::Seq2SeqError;

pub struct LossOutput<F> {
    /// Mean over non-PAD positions.
    pub loss: f64,
    /// Gradient of `loss` with respect to the logits.
    pub dlogits: Vec<F>,
    pub n_tokens: usize,
}

/// Label-smoothed cross-entropy. The target puts `1 − ε` on the gold class
/// and `ε / (V − 1)` on every other class; PAD positions are skipped.
pub fn smoothed_cross_entropy<F: Float>(
    logits: &[F],
    gold: &[u32],
    vocab_size: usize,
    smoothing: f64,
) -> Result<LossOutput<F>, Seq2SeqError> {
    let v = vocab_size;
    if v < 2 || logits.len() != gold.len() * v {
        return Err(Seq2SeqError::ShapeMismatch(format!(
            "{} logits for {} positions over {v} classes",
            logits.len(),
            gold.len()
        )));
    }
    if let Some(g) = gold.iter().find(|&&g| g as usize >= v) {
        return Err(Seq2SeqError::UnknownToken(format!("#{g}")));
    }
    let n = gold.iter().filter(|&&g| g != PAD).count();
    if n == 0 {
        return Err(Seq2SeqError::Empty);
    }
    let off = smoothing / (v - 1) as f64;
    let on = 1.0 - smoothing;
    let inv_n = 1.0 / n as f64;
    let mut total = 0.0f64;
    let mut dlogits = vec![F::zero(); logits.len()];
    for (pos, &g) in gold.iter().enumerate() {
        if g == PAD {
            continue;
        }
        let row = &logits[pos * v..(pos + 1) * v];
        let mx = row.iter().map(|x| x.f64()).fold(f64::NEG_INFINITY, f64::max);
        let lse = mx + row.iter().map(|x| (x.f64() - mx).exp()).sum::<f64>().ln();
        let drow = &mut dlogits[pos * v..(pos + 1) * v];
        for (c, (&x, d)) in row.iter().zip(drow.iter_mut()).enumerate() {
            let lp = x.f64() - lse;
            let q = if c == g as usize { on } else { off };
            total -= q * lp;
            *d = F::of((lp.exp() - q) * inv_n);
        }
    }
    Ok(LossOutput {
        loss: total * inv_n,
        dlogits,
        n_tokens: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oracle(logits: &[f64], gold: &[u32], v: usize, eps: f64) -> f64 {
        let mut total = 0.0;
        let mut n = 0;
        for (i, &g) in gold.iter().enumerate() {
            if g == PAD {
                continue;
            }
            n += 1;
            let row = &logits[i * v..(i + 1) * v];
            let z: f64 = row.iter().map(|x| x.exp()).sum();
            let lp: Vec<f64> = row.iter().map(|x| (x.exp() / z).ln()).collect();
            let nll = -lp[g as usize];
            let others: f64 = (0..v).filter(|&c| c != g as usize).map(|c| -lp[c]).sum();
            total += eps / (v - 1) as f64 * others + (1.0 - eps) * nll;
        }
        total / n as f64
    }

    #[test]
    fn uniform_logits_give_ln_v_for_any_smoothing() {
        let v = 7;
        let logits = vec![0.3f64; 3 * v];
        for eps in [0.0, 0.1, 0.5] {
            let out = smoothed_cross_entropy(&logits, &[3, 4, 5], v, eps).unwrap();
            assert!((out.loss - (v as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn huge_margin_without_smoothing_gives_zero_loss() {
        let mut logits = vec![0.0f64; 5];
        logits[3] = 1e3;
        let out = smoothed_cross_entropy(&logits, &[3], 5, 0.0).unwrap();
        assert!(out.loss.abs() < 1e-12);
    }

    #[test]
    fn matches_brute_force_formula_and_ignores_pad() {
        let v = 6;
        let logits: Vec<f64> = (0..4 * v).map(|i| ((i * 7919) % 13) as f64 / 5.0 - 1.0).collect();
        let gold = [3, 5, PAD, 4];
        let out = smoothed_cross_entropy(&logits, &gold, v, 0.1).unwrap();
        assert!((out.loss - oracle(&logits, &gold, v, 0.1)).abs() < 1e-12);
        assert_eq!(out.n_tokens, 3);
        assert!(out.dlogits[2 * v..3 * v].iter().all(|&d| d == 0.0));
    }

    #[test]
    fn bounded_below_by_smoothed_target_entropy() {
        let v = 5;
        let eps = 0.1;
        let off = eps / (v - 1) as f64;
        let entropy = -((1.0 - eps) * (1.0f64 - eps).ln() + (v - 1) as f64 * off * off.ln());
        for k in 0..50 {
            let logits: Vec<f64> = (0..v).map(|i| ((i * 31 + k * 17) % 11) as f64 - 5.0).collect();
            let out = smoothed_cross_entropy(&logits, &[(k % 3 + 2) as u32], v, eps).unwrap();
            assert!(out.loss >= entropy - 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let v = 4;
        let mut logits: Vec<f64> = vec![0.2, -0.4, 1.1, 0.0, 0.5, 0.5, -1.0, 2.0];
        let gold = [2, 3];
        let out = smoothed_cross_entropy(&logits, &gold, v, 0.1).unwrap();
        for i in 0..logits.len() {
            let x = logits[i];
            logits[i] = x + 1e-6;
            let up = smoothed_cross_entropy(&logits, &gold, v, 0.1).unwrap().loss;
            logits[i] = x - 1e-6;
            let down = smoothed_cross_entropy(&logits, &gold, v, 0.1).unwrap().loss;
            logits[i] = x;
            assert!(((up - down) / 2e-6 - out.dlogits[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn shape_errors() {
        assert!(matches!(
            smoothed_cross_entropy(&[0.0f64; 5], &[3], 4, 0.1),
            Err(Seq2SeqError::ShapeMismatch(_))
        ));
        assert!(matches!(
            smoothed_cross_entropy(&[0.0f64; 4], &[PAD], 4, 0.1),
            Err(Seq2SeqError::Empty)
        ));
    }
}
