use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::commands::{read_responses, wordlikeness_path, WordlikenessRow, PARADIGM_CSV, PROBE_CSV};
use super::{read_csv, require, write_csv, Pipeline, PipelineError};
use crate::eval::{
    sequence_accuracy, stem_accuracy, suffix_accuracy, AccuracyReport, Classification, ResponseRecord, CI_METHOD,
};
use crate::fixtures::Fixtures;
use crate::glmm::{fit, GlmmError, RegressionData, RegressionRow, METHOD};
use crate::stats::{ks_two_sample, log_ratio, spearman, summarize, LogRatioConfig, PValueMethod};

pub const PARTICIPANTS: &str = "participants";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub(crate) struct AccuracyRow {
    pub metric: String,
    pub group: String,
    pub mean: f64,
    pub sd: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_responders: usize,
    pub n_records: usize,
    pub ci_method: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub(crate) struct ItemRatioRow {
    pub group: String,
    /// `computed` or `fixture`.
    pub source: String,
    pub item_id: String,
    pub n_natural: Option<u64>,
    pub n_lshaped: Option<u64>,
    pub log_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub(crate) struct ResponderRow {
    pub group: String,
    pub responder_id: String,
    pub mean_item_log_ratio: f64,
    pub n_natural: u64,
    pub n_lshaped: u64,
    pub n_other: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub(crate) struct ConditionSummaryRow {
    pub group: String,
    pub n_responders: usize,
    pub mean_responder_log_ratio: f64,
    pub sd: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub(crate) struct SpearmanRow {
    pub a: String,
    pub b: String,
    pub n: usize,
    pub rho: f64,
    pub p_value: f64,
    pub method: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub(crate) struct KsRow {
    pub a: String,
    pub b: String,
    pub n1: usize,
    pub n2: usize,
    pub d_stat: f64,
    pub p_value: f64,
}

pub(crate) const ANALYSIS_FILES: [&str; 6] = [
    "accuracy.csv",
    "item_log_ratios.csv",
    "responder_log_ratios.csv",
    "condition_summary.csv",
    "spearman.csv",
    "ks.csv",
];

fn accuracy_row(metric: &str, group: &str, r: &AccuracyReport) -> AccuracyRow {
    AccuracyRow {
        metric: metric.into(),
        group: group.into(),
        mean: r.summary.mean,
        sd: r.summary.sd,
        ci_low: r.summary.ci_low,
        ci_high: r.summary.ci_high,
        n_responders: r.summary.n,
        n_records: r.n_records,
        ci_method: CI_METHOD.into(),
    }
}

#[derive(Default, Clone, Copy)]
struct Counts {
    natural: u64,
    lshaped: u64,
    other: u64,
}

impl Counts {
    fn add(&mut self, c: Classification) {
        match c {
            Classification::Natural => self.natural += 1,
            Classification::LShaped => self.lshaped += 1,
            Classification::Other => self.other += 1,
        }
    }
}

/// Per-item counts in fixture item order.
fn item_counts(records: &[&ResponseRecord], item_ids: &[&str]) -> Vec<Counts> {
    let mut by: BTreeMap<&str, Counts> = BTreeMap::new();
    for r in records {
        by.entry(r.item_id.as_str()).or_default().add(r.classification);
    }
    item_ids
        .iter()
        .map(|id| by.get(id).copied().unwrap_or_default())
        .collect()
}

/// Mean over items of one responder's per-item log-ratios. Items where every
/// response was `Other` contribute the smoothed value for zero counts.
pub fn responder_mean_log_ratio(records: &[&ResponseRecord], item_ids: &[&str], cfg: &LogRatioConfig) -> f64 {
    let counts = item_counts(records, item_ids);
    counts.iter().map(|c| log_ratio(c.natural, c.lshaped, cfg)).sum::<f64>() / counts.len() as f64
}

/// Accuracies, preference log-ratios, correlations and KS tests.
pub fn cmd_analyze(p: &Pipeline) -> Result<Vec<PathBuf>, PipelineError> {
    p.record_config()?;
    let eval = p.dir("eval");
    require(&[eval.join(PROBE_CSV), eval.join(PARADIGM_CSV)])?;
    let probes = read_responses(p, PROBE_CSV)?;
    let paradigm = read_responses(p, PARADIGM_CSV)?;
    let lr = &p.cfg.analysis.log_ratio;
    let item_ids = p.fixtures.item_ids();
    let groups = p.condition_labels();

    let mut acc = Vec::new();
    let mut items = Vec::new();
    let mut responders = Vec::new();
    let mut summary = Vec::new();
    let mut series: Vec<(String, Vec<f64>)> = vec![(PARTICIPANTS.into(), participant_series(&p.fixtures)?)];
    for (id, v) in item_ids.iter().zip(&series[0].1) {
        items.push(ItemRatioRow {
            group: PARTICIPANTS.into(),
            source: "fixture".into(),
            item_id: id.to_string(),
            n_natural: None,
            n_lshaped: None,
            log_ratio: *v,
        });
    }
    for g in &groups {
        let pr: Vec<ResponseRecord> = probes.iter().filter(|r| &r.condition == g).cloned().collect();
        let pa: Vec<ResponseRecord> = paradigm.iter().filter(|r| &r.condition == g).cloned().collect();
        if pr.is_empty() || pa.is_empty() {
            return Err(PipelineError::Data(format!("no responses for condition {g}")));
        }
        acc.push(accuracy_row("stem", g, &stem_accuracy(&pr, true)?));
        acc.push(accuracy_row("suffix", g, &suffix_accuracy(&pr)?));
        acc.push(accuracy_row("sequence", g, &sequence_accuracy(&pa)?));

        let refs: Vec<&ResponseRecord> = pr.iter().collect();
        let pooled = item_counts(&refs, &item_ids);
        let mut v = Vec::new();
        for (id, c) in item_ids.iter().zip(&pooled) {
            let x = log_ratio(c.natural, c.lshaped, lr);
            v.push(x);
            items.push(ItemRatioRow {
                group: g.clone(),
                source: "computed".into(),
                item_id: id.to_string(),
                n_natural: Some(c.natural),
                n_lshaped: Some(c.lshaped),
                log_ratio: x,
            });
        }
        series.push((g.clone(), v));

        let mut ids: Vec<&str> = pr.iter().map(|r| r.responder_id.as_str()).collect();
        ids.dedup();
        let mut means = Vec::new();
        for id in ids {
            let mine: Vec<&ResponseRecord> = pr.iter().filter(|r| r.responder_id == id).collect();
            let total = mine.iter().fold(Counts::default(), |mut c, r| {
                c.add(r.classification);
                c
            });
            let m = responder_mean_log_ratio(&mine, &item_ids, lr);
            means.push(m);
            responders.push(ResponderRow {
                group: g.clone(),
                responder_id: id.to_string(),
                mean_item_log_ratio: m,
                n_natural: total.natural,
                n_lshaped: total.lshaped,
                n_other: total.other,
            });
        }
        let s = summarize(&means).map_err(|e| PipelineError::Numerical(e.to_string()))?;
        summary.push(ConditionSummaryRow {
            group: g.clone(),
            n_responders: s.n,
            mean_responder_log_ratio: s.mean,
            sd: s.sd,
            ci_low: s.ci_low,
            ci_high: s.ci_high,
        });
    }

    let mut rho = Vec::new();
    let mut ks = Vec::new();
    for i in 0..series.len() {
        for j in i + 1..series.len() {
            // Model conditions first, matching the published table layout.
            let (a, b) = if i == 0 {
                (&series[j], &series[i])
            } else {
                (&series[i], &series[j])
            };
            match spearman(&a.1, &b.1) {
                Ok(c) => rho.push(SpearmanRow {
                    a: a.0.clone(),
                    b: b.0.clone(),
                    n: c.n,
                    rho: c.rho,
                    p_value: c.p_value,
                    method: match c.method {
                        PValueMethod::ExactPermutation => "exact permutation".into(),
                        PValueMethod::TApproximation => "t approximation".into(),
                    },
                }),
                // A constant series has no ranks to correlate.
                Err(e) => log::warn!("spearman {} vs {}: {e}", a.0, b.0),
            }
            let k = ks_two_sample(&a.1, &b.1).map_err(|e| PipelineError::Numerical(e.to_string()))?;
            ks.push(KsRow {
                a: a.0.clone(),
                b: b.0.clone(),
                n1: k.n1,
                n2: k.n2,
                d_stat: k.d_stat,
                p_value: k.p_value,
            });
        }
    }

    let dir = p.dir("analysis");
    let paths: Vec<PathBuf> = ANALYSIS_FILES.iter().map(|f| dir.join(f)).collect();
    write_csv(&paths[0], &acc)?;
    write_csv(&paths[1], &items)?;
    write_csv(&paths[2], &responders)?;
    write_csv(&paths[3], &summary)?;
    write_csv(&paths[4], &rho)?;
    write_csv(&paths[5], &ks)?;
    Ok(paths)
}

fn participant_series(f: &Fixtures) -> Result<Vec<f64>, PipelineError> {
    f.item_log_ratios
        .series
        .get(PARTICIPANTS)
        .cloned()
        .ok_or_else(|| PipelineError::Data("fixtures lack the participants series".into()))
}

/// Row-level pseudo-responses expanded from the participants' per-item
/// counts. Response `j` of item `i` is attributed to participant
/// `(i·per_item + j) mod participants`, so the original per-participant
/// structure is not recovered.
pub fn participant_regression_rows(
    f: &Fixtures,
    x_by_item: &BTreeMap<String, f64>,
) -> Result<Vec<RegressionRow>, PipelineError> {
    let c = &f.participant_counts;
    let mut rows = Vec::new();
    for (i, item) in f.items.iter().enumerate() {
        let x = *x_by_item
            .get(&item.id)
            .ok_or_else(|| PipelineError::Data(format!("no wordlikeness score for {}", item.id)))?;
        let answers = std::iter::repeat(true)
            .take(c.l_shaped[i] as usize)
            .chain(std::iter::repeat(false).take(c.natural[i] as usize));
        for (j, answer) in answers.enumerate() {
            let who = (i * c.responses_per_item as usize + j) % c.participants.max(1) as usize;
            rows.push(RegressionRow {
                answer,
                x,
                item_id: item.id.clone(),
                responder_id: format!("p{who:03}"),
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub(crate) struct RegressionCsvRow {
    pub dataset: String,
    /// `ok`, or the reason no fit was produced.
    pub status: String,
    pub n_rows: usize,
    pub n_items: usize,
    pub n_responders: usize,
    pub beta: Option<f64>,
    pub se: Option<f64>,
    pub z: Option<f64>,
    pub p_value: Option<f64>,
    pub intercept: Option<f64>,
    pub sigma_item: Option<f64>,
    pub sigma_responder: Option<f64>,
    pub converged: Option<bool>,
    pub method: String,
    pub note: String,
}

fn regression_row(dataset: &str, rows: Vec<RegressionRow>, note: &str) -> RegressionCsvRow {
    let n_rows = rows.len();
    let distinct = |f: fn(&RegressionRow) -> &str| rows.iter().map(f).collect::<std::collections::BTreeSet<_>>().len();
    let n_items = distinct(|r| r.item_id.as_str());
    let n_responders = distinct(|r| r.responder_id.as_str());
    let mut out = RegressionCsvRow {
        dataset: dataset.into(),
        status: String::new(),
        n_rows,
        n_items,
        n_responders,
        beta: None,
        se: None,
        z: None,
        p_value: None,
        intercept: None,
        sigma_item: None,
        sigma_responder: None,
        converged: None,
        method: METHOD.into(),
        note: note.into(),
    };
    match RegressionData::new(rows).and_then(|d| fit(&d)) {
        Ok(f) => {
            out.status = "ok".into();
            out.beta = Some(f.beta);
            out.se = Some(f.se_beta);
            out.z = Some(f.wald_z);
            out.p_value = Some(f.p_value);
            out.intercept = Some(f.intercept);
            out.sigma_item = Some(f.sigma_item);
            out.sigma_responder = Some(f.sigma_responder);
            out.converged = Some(f.converged);
        }
        Err(e) => {
            out.status = match e {
                GlmmError::Separation(_) => "separation",
                GlmmError::TooFewGroups(_) => "too_few_groups",
                GlmmError::DegeneratePredictor => "degenerate_predictor",
                GlmmError::NonConvergence => "non_convergence",
                GlmmError::Empty => "empty",
            }
            .into();
            log::warn!("regression {dataset}: {e}");
        }
    }
    out
}

pub(crate) fn regression_path(p: &Pipeline) -> PathBuf {
    p.dir("regress").join("regression.csv")
}

/// Mixed-effects regression of L-shaped answers on log10 wordlikeness for
/// the participants and for each condition's models. A dataset that cannot
/// be fitted gets a row with its status and no estimates.
pub fn cmd_regress(p: &Pipeline) -> Result<PathBuf, PipelineError> {
    p.record_config()?;
    let probe_path = p.dir("eval").join(PROBE_CSV);
    let gnm_path = wordlikeness_path(p);
    require(&[probe_path, gnm_path.clone()])?;
    let wl: Vec<WordlikenessRow> = read_csv(&gnm_path)?;
    let x: BTreeMap<String, f64> = wl.into_iter().map(|r| (r.item_id, r.log10_raw)).collect();
    let probes = read_responses(p, PROBE_CSV)?;

    let mut out = vec![regression_row(
        PARTICIPANTS,
        participant_regression_rows(&p.fixtures, &x)?,
        "fixture-reconstructed responses",
    )];
    for g in p.condition_labels() {
        let mut rows = Vec::new();
        for r in probes
            .iter()
            .filter(|r| r.condition == g && r.classification != Classification::Other)
        {
            rows.push(RegressionRow {
                answer: r.classification == Classification::LShaped,
                x: *x
                    .get(&r.item_id)
                    .ok_or_else(|| PipelineError::Data(format!("no wordlikeness score for {}", r.item_id)))?,
                item_id: r.item_id.clone(),
                responder_id: r.responder_id.clone(),
            });
        }
        out.push(regression_row(&g, rows, "model probe responses, Other excluded"));
    }
    let path = regression_path(p);
    write_csv(&path, &out)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn participant_expansion_reproduces_counts() {
        let f = Fixtures::default();
        let x: BTreeMap<String, f64> = f
            .items
            .iter()
            .enumerate()
            .map(|(i, it)| (it.id.clone(), i as f64))
            .collect();
        let rows = participant_regression_rows(&f, &x).unwrap();
        let c = &f.participant_counts;
        let total: u32 = c.natural.iter().chain(&c.l_shaped).sum();
        assert_eq!(rows.len(), total as usize);
        for (i, item) in f.items.iter().enumerate() {
            let l = rows.iter().filter(|r| r.item_id == item.id && r.answer).count();
            assert_eq!(l, c.l_shaped[i] as usize);
        }
        let who: std::collections::BTreeSet<_> = rows.iter().map(|r| &r.responder_id).collect();
        assert_eq!(who.len(), c.participants as usize);
    }
}
