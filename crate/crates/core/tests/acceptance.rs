//! Acceptance criteria. Each test prints one `PASS`/`FAIL criterion N` line
//! and then asserts, so `cargo test --test acceptance -- --nocapture` gives a
//! readable summary. Tolerances and budgets are the constants below.

use std::collections::HashSet;
use std::sync::{Mutex, MutexGuard};
use std::time::{Duration, Instant};

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use morphome_lab::datagen::{build_split, generate_lexicon, to_token_pair, FrequencyCondition, LexiconSpec};
use morphome_lab::glmm::{self, RegressionData, RegressionRow};
use morphome_lab::gnm::{gnm_score, weighted_edit_distance, CostMatrix, GnmParams, LexEntry, PairCost};
use morphome_lab::morpho::{Morphology, Symbol};
use morphome_lab::pipeline::{cmd_analyze, cmd_eval, cmd_gen, cmd_train, Pipeline, PipelineConfig};
use morphome_lab::seq2seq::{
    beam_decode, examples_from_pairs, greedy_decode, Batch, Example, ModelConfig, TrainConfig, Trainer, Transformer,
    Vocab, BOS, EOS,
};
use morphome_lab::stats::{average_ranks, kolmogorov_sf, ks_two_sample, log_ratio, spearman, LogRatioConfig};

const GRAD_REL_TOL: f64 = 1e-4;
const GRAD_FLOOR: f64 = 1e-6;
const GRAD_STEP: f64 = 1e-5;
const GRAD_BUDGET: Duration = Duration::from_secs(30);

const MEMO_PAIRS: usize = 50;
const MEMO_MAX_UPDATES: u64 = 2000;
const MEMO_BUDGET: Duration = Duration::from_secs(120);

const DESK_VERBS: usize = 300;
const DESK_UPDATES: u64 = 3000;
const DESK_MIN_ACC: f64 = 0.90;
const DESK_BUDGET: Duration = Duration::from_secs(30 * 60);

const DIRECTION_CONFIG: &str = r#"
root_seed = 1
conditions = ["10L-90NL", "90L-10NL"]
replicates = 3

[lexicon]
n_verbs = 100

[model]
layers = 2
heads = 4
d_model = 64
d_ff = 256
max_len = 40

[train]
max_updates = 1200
batch_size = 64
checkpoint_every_epochs = 1000
"#;

const STATS_TOL: f64 = 1e-12;
const KS_CASES: usize = 200;
const LOG_RATIO_PAIRS: usize = 10_000;

const BEAM_MODELS: usize = 50;
const BEAM_MAX_LEN: usize = 4;
const BEAM_SCORE_TOL: f64 = 1e-9;

const GNM_TOL: f64 = 1e-12;

const GLMM_SEEDS: u64 = 10;
const GLMM_BETA: f64 = 2.0;
const GLMM_BETA_TOL: f64 = 0.5;
const GLMM_IRLS_TOL: f64 = 1e-3;

// Criteria run one at a time so the wall-clock budgets measure a single job.
static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn verdict(n: u32, ok: bool, detail: String) {
    println!("{} criterion {n}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n}: {detail}");
}

// ---------------------------------------------------------------------------
// 1. gradient check

#[test]
fn criterion_1_gradient_check() {
    let _serial = serial();
    let start = Instant::now();
    let vocab = Vocab::new(["a", "b", "c", "d", "e"]).unwrap();
    let cfg = ModelConfig {
        layers: 2,
        heads: 2,
        d_model: 8,
        d_ff: 32,
        dropout: 0.0,
        max_len: 10,
    };
    let mut m = Transformer::<f64>::new(cfg, vocab, &mut ChaCha8Rng::seed_from_u64(2024)).unwrap();
    let ex = vec![
        Example {
            src: vec![3, 4, 5, 6],
            tgt: vec![7, 3],
        },
        Example {
            src: vec![5],
            tgt: vec![4, 4, 6, 7, 3],
        },
        Example {
            src: vec![7, 6, 5, 4, 3, 3],
            tgt: vec![5],
        },
    ];
    let batch = Batch::new(&ex, 10).unwrap();
    let (_, g) = m.loss_and_grad(&batch, 0.1, None).unwrap();
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for ti in 0..g.len() {
        for k in 0..g.data[ti].len() {
            let x = m.params().data[ti][k];
            m.params_mut().data[ti][k] = x + GRAD_STEP;
            let up = m.batch_loss(&batch, 0.1).unwrap();
            m.params_mut().data[ti][k] = x - GRAD_STEP;
            let down = m.batch_loss(&batch, 0.1).unwrap();
            m.params_mut().data[ti][k] = x;
            let num = (up - down) / (2.0 * GRAD_STEP);
            let ana = g.data[ti][k];
            worst = worst.max((num - ana).abs() / num.abs().max(ana.abs()).max(GRAD_FLOOR));
            checked += 1;
        }
    }
    let took = start.elapsed();
    verdict(
        1,
        worst < GRAD_REL_TOL && took < GRAD_BUDGET,
        format!("max relative error {worst:.2e} over {checked} parameters in {took:.1?}"),
    );
}

// ---------------------------------------------------------------------------
// 2. memorization

#[test]
fn criterion_2_memorization() {
    let _serial = serial();
    let m = Morphology::default();
    let cond = FrequencyCondition::l50_nl50();
    let spec = LexiconSpec {
        n_verbs: 10,
        rng_seed: 3,
        ..Default::default()
    };
    let lex = generate_lexicon(&spec, &cond, &m, &HashSet::new()).unwrap();
    let split = build_split(&lex, &[], &cond, &m, 3, false).unwrap();
    let vocab = Vocab::from_morphology(&m);
    let pairs: Vec<_> = split.train.iter().map(|c| to_token_pair(c, &m).unwrap()).collect();
    let ex = examples_from_pairs(&pairs, &vocab).unwrap();
    let ex: Vec<Example> = ex.into_iter().step_by(2).take(MEMO_PAIRS).collect();
    assert_eq!(ex.len(), MEMO_PAIRS);

    let start = Instant::now();
    let mc = ModelConfig {
        layers: 2,
        heads: 4,
        d_model: 64,
        d_ff: 256,
        dropout: 0.0,
        max_len: 40,
    };
    let tc = TrainConfig {
        batch_size: MEMO_PAIRS,
        max_updates: MEMO_MAX_UPDATES,
        seed: 1,
        ..Default::default()
    };
    let mut t = Trainer::new(mc, tc, vocab).unwrap();
    let batch = Batch::new(&ex, 40).unwrap();
    let srcs: Vec<Vec<u32>> = ex.iter().map(|e| e.src.clone()).collect();
    let mut correct = 0;
    while t.update_count() < MEMO_MAX_UPDATES {
        t.train_step(&batch).unwrap();
        if t.update_count() % 25 == 0 {
            let hyps = greedy_decode(t.model(), &srcs, 39).unwrap();
            correct = hyps.iter().zip(&ex).filter(|(h, e)| h.tokens == e.tgt).count();
            if correct == MEMO_PAIRS {
                break;
            }
        }
    }
    let took = start.elapsed();
    verdict(
        2,
        correct == MEMO_PAIRS && took < MEMO_BUDGET,
        format!(
            "{correct}/{MEMO_PAIRS} after {} updates in {took:.1?}",
            t.update_count()
        ),
    );
}

// ---------------------------------------------------------------------------
// 3. desk scale

#[test]
fn criterion_3_desk_scale() {
    let _serial = serial();
    let m = Morphology::default();
    let cond = FrequencyCondition::l10_nl90();
    let spec = LexiconSpec {
        n_verbs: DESK_VERBS,
        rng_seed: 1,
        ..Default::default()
    };
    let lex = generate_lexicon(&spec, &cond, &m, &HashSet::new()).unwrap();
    let split = build_split(&lex, &[], &cond, &m, 1, false).unwrap();
    let vocab = Vocab::from_morphology(&m);
    let pairs: Vec<_> = split.train.iter().map(|c| to_token_pair(c, &m).unwrap()).collect();
    let ex = examples_from_pairs(&pairs, &vocab).unwrap();

    let start = Instant::now();
    let mc = ModelConfig {
        layers: 2,
        heads: 4,
        d_model: 64,
        d_ff: 256,
        dropout: 0.1,
        max_len: 40,
    };
    let tc = TrainConfig {
        batch_size: 64,
        max_updates: DESK_UPDATES,
        checkpoint_every_epochs: 1000,
        seed: 1,
        ..Default::default()
    };
    let mut t = Trainer::new(mc, tc, vocab).unwrap();
    t.run(&ex, &mut |_| Ok(())).unwrap();
    let mut correct = 0usize;
    for chunk in ex.chunks(500) {
        let srcs: Vec<Vec<u32>> = chunk.iter().map(|e| e.src.clone()).collect();
        let hyps = greedy_decode(t.model(), &srcs, 39).unwrap();
        correct += hyps.iter().zip(chunk).filter(|(h, e)| h.tokens == e.tgt).count();
    }
    let acc = correct as f64 / ex.len() as f64;
    let took = start.elapsed();
    verdict(
        3,
        ex.len() == 18_000 && acc >= DESK_MIN_ACC && took < DESK_BUDGET,
        format!(
            "held-in sequence accuracy {acc:.4} ({correct}/{}) after {} updates in {took:.1?}",
            ex.len(),
            t.update_count()
        ),
    );
}

// ---------------------------------------------------------------------------
// 4. direction of the preference shift

#[test]
fn criterion_4_direction() {
    let _serial = serial();
    let start = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = PipelineConfig::from_toml_str(DIRECTION_CONFIG).unwrap();
    cfg.paths.workdir = tmp.path().to_path_buf();
    let p = Pipeline::new(cfg).unwrap();
    cmd_gen(&p).unwrap();
    cmd_train(&p).unwrap();
    cmd_eval(&p).unwrap();
    cmd_analyze(&p).unwrap();

    let mut summary = csv::Reader::from_path(tmp.path().join("analysis/condition_summary.csv")).unwrap();
    let mut mean = std::collections::HashMap::new();
    for r in summary.records() {
        let r = r.unwrap();
        if &r[0] != "participants" {
            assert_eq!(&r[1], "3", "{}", &r[0]);
        }
        mean.insert(r[0].to_string(), r[2].parse::<f64>().unwrap());
    }
    let (l90, l10) = (mean["90L-10NL"], mean["10L-90NL"]);
    verdict(
        4,
        l90 < l10,
        format!(
            "mean responder log-ratio 90L-10NL {l90:.4} vs 10L-90NL {l10:.4} (3 seeds each) in {:.1?}",
            start.elapsed()
        ),
    );
}

// ---------------------------------------------------------------------------
// 5. statistics oracles

fn brute_ranks(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            let below = xs.iter().filter(|&&y| y < x).count() as f64;
            let tied = xs.iter().filter(|&&y| y == x).count() as f64;
            below + (tied + 1.0) / 2.0
        })
        .collect()
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    sxy / (sxx * syy).sqrt()
}

fn random_sample(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    if rng.gen_bool(0.5) {
        (0..n).map(|_| rng.gen_range(0..4) as f64).collect()
    } else {
        (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()
    }
}

fn brute_ecdf(xs: &[f64], t: f64) -> f64 {
    xs.iter().filter(|&&x| x <= t).count() as f64 / xs.len() as f64
}

#[test]
fn criterion_5_stats_oracles() {
    let _serial = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(55);

    let mut worst_rho = 0.0f64;
    let mut worst_p = 0.0f64;
    let mut spearman_cases = 0;
    let mut rank_ok = true;
    while spearman_cases < 200 {
        let n = rng.gen_range(3..=8);
        let x = random_sample(&mut rng, n);
        let y = random_sample(&mut rng, n);
        let (rx, ry) = (brute_ranks(&x), brute_ranks(&y));
        rank_ok &= rx == average_ranks(&x) && ry == average_ranks(&y);
        let constant = rx.iter().all_equal() || ry.iter().all_equal();
        let r = spearman(&x, &y);
        if constant {
            rank_ok &= r.is_err();
            continue;
        }
        let r = r.unwrap();
        let rho = pearson(&rx, &ry);
        let perms: Vec<f64> = ry.iter().copied().permutations(n).map(|p| pearson(&rx, &p)).collect();
        let hits = perms.iter().filter(|r| r.abs() >= rho.abs() * (1.0 - 1e-9)).count();
        worst_rho = worst_rho.max((r.rho - rho).abs());
        worst_p = worst_p.max((r.p_value - hits as f64 / perms.len() as f64).abs());
        spearman_cases += 1;
    }

    let mut worst_d = 0.0f64;
    let mut worst_ks_p = 0.0f64;
    for _ in 0..KS_CASES {
        let (n1, n2) = (rng.gen_range(1..30), rng.gen_range(1..30));
        let a = random_sample(&mut rng, n1);
        let b = random_sample(&mut rng, n2);
        let d = a
            .iter()
            .chain(&b)
            .map(|&t| (brute_ecdf(&a, t) - brute_ecdf(&b, t)).abs())
            .fold(0.0, f64::max);
        let r = ks_two_sample(&a, &b).unwrap();
        let (n1, n2) = (a.len() as f64, b.len() as f64);
        worst_d = worst_d.max((r.d_stat - d).abs());
        worst_ks_p = worst_ks_p.max((r.p_value - kolmogorov_sf((n1 * n2 / (n1 + n2)).sqrt() * d)).abs());
    }

    let mut lr_ok = true;
    for _ in 0..LOG_RATIO_PAIRS {
        let cfg = LogRatioConfig {
            base: *[10.0, 2.0, std::f64::consts::E].get(rng.gen_range(0..3)).unwrap(),
            alpha: rng.gen_range(0.1..2.0),
            clamp: rng.gen_range(0.5..4.0),
        };
        let n = rng.gen_range(0..2000u64);
        let l = rng.gen_range(0..2000u64);
        let f = log_ratio(n, l, &cfg);
        let b = log_ratio(l, n, &cfg);
        let raw = ((n as f64 + cfg.alpha) / (l as f64 + cfg.alpha)).ln() / cfg.base.ln();
        let expect = raw.max(-cfg.clamp).min(cfg.clamp);
        lr_ok &= (f + b).abs() < STATS_TOL && f.abs() <= cfg.clamp && (f - expect).abs() < STATS_TOL;
        lr_ok &= log_ratio(n, n, &cfg) == 0.0;
    }

    let ok = rank_ok
        && worst_rho < STATS_TOL
        && worst_p < STATS_TOL
        && worst_d < STATS_TOL
        && worst_ks_p < STATS_TOL
        && lr_ok;
    verdict(
        5,
        ok,
        format!(
            "spearman |Δρ| {worst_rho:.1e}, |Δp| {worst_p:.1e} on {spearman_cases} cases; \
             KS |ΔD| {worst_d:.1e}, |Δp| {worst_ks_p:.1e} on {KS_CASES} cases; \
             log-ratio antisymmetry/clamp {} on {LOG_RATIO_PAIRS} pairs",
            if lr_ok { "hold" } else { "violated" }
        ),
    );
}

// ---------------------------------------------------------------------------
// 6. beam oracle

fn sequence_log_prob(m: &Transformer<f64>, src: &[u32], out: &[u32]) -> f64 {
    let mut prefix = vec![BOS];
    prefix.extend_from_slice(&out[..out.len() - 1]);
    let logits = m.forward(src, &prefix).unwrap();
    let v = m.vocab().len();
    out.iter()
        .enumerate()
        .map(|(t, &tok)| {
            let row = &logits[t * v..(t + 1) * v];
            let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = mx + row.iter().map(|x| (x - mx).exp()).sum::<f64>().ln();
            row[tok as usize] - lse
        })
        .sum()
}

#[test]
fn criterion_6_beam_oracle() {
    let _serial = serial();
    let vocab = Vocab::new(["a", "b", "c"]).unwrap();
    let content = [3u32, 4, 5];
    let cfg = ModelConfig {
        layers: 1,
        heads: 2,
        d_model: 8,
        d_ff: 16,
        dropout: 0.0,
        max_len: 8,
    };
    let mut agree = 0;
    let mut worst = 0.0f64;
    for seed in 0..BEAM_MODELS as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Transformer::<f64>::new(cfg.clone(), vocab.clone(), &mut rng).unwrap();
        // Sharpen the output distribution so the ranking is non-trivial.
        let out_w = m.params().index_of("output.weight").unwrap();
        for w in &mut m.params_mut().data[out_w] {
            *w *= 8.0;
        }
        let src: Vec<u32> = (0..rng.gen_range(1..5)).map(|_| content[rng.gen_range(0..3)]).collect();
        let max_len = rng.gen_range(1..=BEAM_MAX_LEN);

        let mut all: Vec<(Vec<u32>, f64)> = Vec::new();
        for len in 0..max_len {
            let bodies: Vec<Vec<u32>> = if len == 0 {
                vec![vec![]]
            } else {
                (0..len)
                    .map(|_| content.iter().copied())
                    .multi_cartesian_product()
                    .collect()
            };
            for body in bodies {
                let mut seq = body.clone();
                seq.push(EOS);
                let lp = sequence_log_prob(&m, &src, &seq);
                all.push((body, lp));
            }
        }
        all.sort_by(|a, b| b.1.total_cmp(&a.1));
        let hyps = beam_decode(&m, &src, all.len(), max_len).unwrap();
        if hyps.len() == all.len() && hyps[0].tokens == all[0].0 {
            agree += 1;
        }
        for (h, (seq, s)) in hyps.iter().zip(&all) {
            if &h.tokens == seq {
                worst = worst.max((h.score - s).abs());
            } else {
                worst = f64::INFINITY;
            }
        }
    }
    verdict(
        6,
        agree == BEAM_MODELS && worst < BEAM_SCORE_TOL,
        format!("{agree}/{BEAM_MODELS} models agree with exhaustive enumeration, max score gap {worst:.1e}"),
    );
}

// ---------------------------------------------------------------------------
// 7. GNM

fn brute_alignment(a: &[Symbol], b: &[Symbol], c: &CostMatrix) -> f64 {
    match (a.split_first(), b.split_first()) {
        (None, None) => 0.0,
        (Some((_, ra)), None) => c.delete + brute_alignment(ra, b, c),
        (None, Some((_, rb))) => c.insert + brute_alignment(a, rb, c),
        (Some((x, ra)), Some((y, rb))) => {
            let sub = c.substitution(x.glyph(), y.glyph()) + brute_alignment(ra, rb, c);
            let del = c.delete + brute_alignment(ra, b, c);
            let ins = c.insert + brute_alignment(a, rb, c);
            sub.min(del).min(ins)
        }
    }
}

#[test]
fn criterion_7_gnm() {
    let _serial = serial();
    let m = Morphology::default();
    let glyphs = ["p", "t", "k", "s", "a", "e", "o", "#"];
    let sym = |g: &str| m.alphabet.parse_form(g).map(|f| f.symbols()[0].clone());
    let hash = morphome_lab::gnm::parse_lexicon("a#a\n", &m.alphabet).unwrap()[0].word[1].clone();
    let alphabet: Vec<Symbol> = glyphs
        .iter()
        .map(|g| if *g == "#" { hash.clone() } else { sym(g).unwrap() })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let word = |rng: &mut ChaCha8Rng, max: usize| -> Vec<Symbol> {
        (0..rng.gen_range(0..=max))
            .map(|_| alphabet[rng.gen_range(0..alphabet.len())].clone())
            .collect()
    };

    let mut self_zero = true;
    let mut dp_gap = 0.0f64;
    for _ in 0..500 {
        let costs = CostMatrix {
            insert: rng.gen_range(0.2..2.0),
            delete: rng.gen_range(0.2..2.0),
            substitute: rng.gen_range(0.2..3.0),
            pairs: (0..4)
                .map(|_| PairCost {
                    a: glyphs[rng.gen_range(0..7)].into(),
                    b: glyphs[rng.gen_range(0..7)].into(),
                    cost: rng.gen_range(0.0..1.0),
                    symmetric: rng.gen_bool(0.5),
                })
                .filter(|p| p.a != p.b)
                .collect(),
        };
        let (a, b) = (word(&mut rng, 5), word(&mut rng, 5));
        self_zero &= weighted_edit_distance(&a, &a, &costs) == 0.0;
        dp_gap = dp_gap.max((weighted_edit_distance(&a, &b, &costs) - brute_alignment(&a, &b, &costs)).abs());
    }

    let params = GnmParams::default();
    let mut identity_gap = 0.0f64;
    let mut additivity_gap = 0.0f64;
    for _ in 0..200 {
        let item = word(&mut rng, 8);
        let single = [LexEntry {
            word: item.clone(),
            weight: 1.0,
        }];
        identity_gap = identity_gap.max((gnm_score("x", &item, &single, &params).unwrap().raw - 1.0).abs());

        let lexicon: Vec<LexEntry> = (0..rng.gen_range(2..30))
            .map(|_| LexEntry {
                word: word(&mut rng, 8),
                weight: rng.gen_range(0.1..3.0),
            })
            .collect();
        let cut = rng.gen_range(1..lexicon.len());
        let whole = gnm_score("x", &item, &lexicon, &params).unwrap().raw;
        let parts = gnm_score("x", &item, &lexicon[..cut], &params).unwrap().raw
            + gnm_score("x", &item, &lexicon[cut..], &params).unwrap().raw;
        additivity_gap = additivity_gap.max((whole - parts).abs() / whole.max(1.0));
    }

    verdict(
        7,
        self_zero && identity_gap == 0.0 && additivity_gap < GNM_TOL && dp_gap < GNM_TOL,
        format!(
            "d(x,x)=0 {}, identical-item gap {identity_gap:.1e}, partition gap {additivity_gap:.1e}, \
             DP vs enumeration gap {dp_gap:.1e} (lengths ≤ 5)",
            if self_zero { "holds" } else { "violated" }
        ),
    );
}

// ---------------------------------------------------------------------------
// 8. GLMM

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

fn synthetic(seed: u64, beta: f64, sigma: f64) -> Vec<RegressionRow> {
    use rand_distr::{Distribution, Normal};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = Normal::new(0.0, 1.0).unwrap();
    let x: Vec<f64> = (0..15).map(|_| z.sample(&mut rng)).collect();
    let u: Vec<f64> = (0..15).map(|_| sigma * z.sample(&mut rng)).collect();
    let v: Vec<f64> = (0..100).map(|_| sigma * z.sample(&mut rng)).collect();
    let mut rows = Vec::with_capacity(1500);
    for i in 0..15 {
        for r in 0..100 {
            rows.push(RegressionRow {
                answer: rng.gen::<f64>() < sigmoid(beta * x[i] + u[i] + v[r]),
                x: x[i],
                item_id: format!("i{i}"),
                responder_id: format!("r{r}"),
            });
        }
    }
    rows
}

#[test]
fn criterion_8_glmm() {
    let _serial = serial();
    let mut recovered = 0;
    let mut betas = Vec::new();
    for seed in 0..GLMM_SEEDS {
        let rows = synthetic(1000 + seed, GLMM_BETA, 0.5);
        assert_eq!(rows.len(), 1500);
        let f = glmm::fit(&RegressionData::new(rows).unwrap()).unwrap();
        if (f.beta - GLMM_BETA).abs() <= GLMM_BETA_TOL {
            recovered += 1;
        }
        betas.push(format!("{:.2}", f.beta));
    }

    let mut worst = 0.0f64;
    for seed in 0..3 {
        let rows = synthetic(2000 + seed, 1.0, 0.0);
        let x: Vec<f64> = rows.iter().map(|r| r.x).collect();
        let y: Vec<bool> = rows.iter().map(|r| r.answer).collect();
        let plain = glmm::logistic_irls(&x, &y).unwrap();
        let zero = glmm::fit(&RegressionData::new(rows).unwrap()).unwrap();
        worst = worst
            .max((zero.beta - plain.beta).abs())
            .max((zero.intercept - plain.intercept).abs());
    }

    verdict(
        8,
        recovered == GLMM_SEEDS && worst < GLMM_IRLS_TOL,
        format!(
            "β=2 recovered on {recovered}/{GLMM_SEEDS} seeds (β̂ = {}); zero-variance vs IRLS gap {worst:.1e}",
            betas.join(", ")
        ),
    );
}
