use std::cmp::Ordering;

use super::float::Float;
use super::model::Transformer;
use super::vocab::{BOS, EOS, PAD};
use super::Seq2SeqError;

/// A decoded output sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    /// Content ids, EOS stripped.
    pub tokens: Vec<u32>,
    /// Total log-probability, EOS included.
    pub score: f64,
    /// EOS was imposed because the length limit was reached.
    pub hit_max_len: bool,
}

fn check_limits<F: Float>(model: &Transformer<F>, max_len: usize) -> Result<(), Seq2SeqError> {
    let limit = model.config().max_len;
    if max_len == 0 || max_len > limit {
        return Err(Seq2SeqError::LengthExceeded {
            len: max_len,
            max: limit,
        });
    }
    Ok(())
}

/// Best candidate token, lowest id on ties; PAD and BOS are never produced.
fn argmax(lp: &[f64]) -> u32 {
    let mut best = EOS;
    for (i, &x) in lp.iter().enumerate().skip(EOS as usize + 1) {
        if x > lp[best as usize] {
            best = i as u32;
        }
    }
    best
}

/// Batched greedy decoding. `max_len` counts output tokens including EOS; at
/// the last position only EOS may be emitted.
pub fn greedy_decode<F: Float>(
    model: &Transformer<F>,
    srcs: &[Vec<u32>],
    max_len: usize,
) -> Result<Vec<Hypothesis>, Seq2SeqError> {
    check_limits(model, max_len)?;
    if srcs.is_empty() {
        return Ok(Vec::new());
    }
    let views: Vec<&[u32]> = srcs.iter().map(Vec::as_slice).collect();
    let enc = model.encode_sources(&views)?;
    let mut out: Vec<Option<Hypothesis>> = vec![None; srcs.len()];
    let mut active: Vec<usize> = (0..srcs.len()).collect();
    let mut prefixes: Vec<Vec<u32>> = vec![vec![BOS]; srcs.len()];
    let mut scores = vec![0.0f64; srcs.len()];
    for step in 0..max_len {
        let last = step + 1 == max_len;
        let batch: Vec<Vec<u32>> = active.iter().map(|&i| prefixes[i].clone()).collect();
        let lps = model.next_log_probs(&enc, &active, &batch);
        let mut still = Vec::new();
        for (&i, lp) in active.iter().zip(&lps) {
            let tok = if last { EOS } else { argmax(lp) };
            scores[i] += lp[tok as usize];
            if tok == EOS {
                out[i] = Some(Hypothesis {
                    tokens: prefixes[i][1..].to_vec(),
                    score: scores[i],
                    hit_max_len: last,
                });
            } else {
                prefixes[i].push(tok);
                still.push(i);
            }
        }
        active = still;
        if active.is_empty() {
            break;
        }
    }
    Ok(out.into_iter().map(|h| h.expect("every row ends with EOS")).collect())
}

/// Beam search. Each step keeps the `width` best expansions of the live
/// beams; expansions ending in EOS leave the beam, which then shrinks.
/// Returns at most `width` complete hypotheses, best first, scored by total
/// log-probability without length normalization.
pub fn beam_decode<F: Float>(
    model: &Transformer<F>,
    src: &[u32],
    width: usize,
    max_len: usize,
) -> Result<Vec<Hypothesis>, Seq2SeqError> {
    if width == 0 {
        return Err(Seq2SeqError::Config("beam width must be at least 1".into()));
    }
    check_limits(model, max_len)?;
    let enc = model.encode_sources(&[src])?;
    let mut beams: Vec<(Vec<u32>, f64)> = vec![(vec![BOS], 0.0)];
    let mut finished: Vec<Hypothesis> = Vec::new();
    for step in 0..max_len {
        let last = step + 1 == max_len;
        let prefixes: Vec<Vec<u32>> = beams.iter().map(|b| b.0.clone()).collect();
        let rows = vec![0; beams.len()];
        let lps = model.next_log_probs(&enc, &rows, &prefixes);
        let mut cands: Vec<(f64, usize, u32)> = Vec::new();
        for (bi, lp) in lps.iter().enumerate() {
            for tok in 0..lp.len() as u32 {
                if tok == PAD || tok == BOS || (last && tok != EOS) {
                    continue;
                }
                cands.push((beams[bi].1 + lp[tok as usize], bi, tok));
            }
        }
        cands.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(Ordering::Equal)
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });
        cands.truncate(width);
        let mut next = Vec::new();
        for (score, bi, tok) in cands {
            if tok == EOS {
                finished.push(Hypothesis {
                    tokens: beams[bi].0[1..].to_vec(),
                    score,
                    hit_max_len: last,
                });
            } else {
                let mut p = beams[bi].0.clone();
                p.push(tok);
                next.push((p, score));
            }
        }
        beams = next;
        if beams.is_empty() {
            break;
        }
    }
    finished.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap_or(Ordering::Equal));
    finished.truncate(width);
    Ok(finished)
}
