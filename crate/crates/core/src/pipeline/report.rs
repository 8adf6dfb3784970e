use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use serde::Serialize;

use super::analysis::{
    regression_path, AccuracyRow, ConditionSummaryRow, ItemRatioRow, KsRow, RegressionCsvRow, SpearmanRow,
    ANALYSIS_FILES,
};
use super::commands::{wordlikeness_path, WordlikenessRow};
use super::{read_csv, require, write_csv, write_file, Pipeline, PipelineError};
use crate::stats::significance_stars;

#[derive(Serialize, Default)]
struct ReportCsvRow {
    table: String,
    key: String,
    quantity: String,
    published: Option<f64>,
    this_run: Option<f64>,
}

fn f(x: Option<f64>, digits: usize) -> String {
    match x {
        Some(v) if v.is_finite() => format!("{v:.digits$}"),
        Some(v) => v.to_string(),
        None => "–".into(),
    }
}

fn published_p(p: f64, bound: bool) -> String {
    if bound {
        format!("< {p}")
    } else {
        format!("{p}")
    }
}

/// Consolidated report: every table shows the published value
/// next to the value computed from this work directory ("this run").
pub fn cmd_report(p: &Pipeline) -> Result<Vec<PathBuf>, PipelineError> {
    let adir = p.dir("analysis");
    let mut needed: Vec<PathBuf> = ANALYSIS_FILES.iter().map(|f| adir.join(f)).collect();
    needed.push(wordlikeness_path(p));
    needed.push(regression_path(p));
    require(&needed)?;
    p.record_config()?;

    let acc: Vec<AccuracyRow> = read_csv(&needed[0])?;
    let items: Vec<ItemRatioRow> = read_csv(&needed[1])?;
    let summary: Vec<ConditionSummaryRow> = read_csv(&needed[3])?;
    let rho: Vec<SpearmanRow> = read_csv(&needed[4])?;
    let ks: Vec<KsRow> = read_csv(&needed[5])?;
    let wl: Vec<WordlikenessRow> = read_csv(&needed[6])?;
    let reg: Vec<RegressionCsvRow> = read_csv(&needed[7])?;
    let fx = &p.fixtures;
    let alpha = p.cfg.analysis.alpha;

    let mut md = String::new();
    let mut csv_rows = Vec::new();
    let mut push = |table: &str, key: String, q: &str, published: Option<f64>, run: Option<f64>| {
        csv_rows.push(ReportCsvRow {
            table: table.into(),
            key,
            quantity: q.into(),
            published,
            this_run: run,
        })
    };

    let _ = writeln!(md, "# morphome-lab report\n");
    let _ = writeln!(
        md,
        "Root seed {}, conditions {}, {} model(s) per condition. \"published\" columns are published reference values; \"this run\" columns are computed from this work directory.\n",
        p.cfg.root_seed,
        p.condition_labels().join(", "),
        p.cfg.replicates
    );

    let _ = writeln!(md, "## Accuracy (%)\n");
    let _ = writeln!(
        md,
        "| metric | group | published mean | published 95% CI | this run mean | this run 95% CI | responders |"
    );
    let _ = writeln!(md, "|---|---|---|---|---|---|---|");
    for e in &fx.accuracy {
        let run = acc.iter().find(|a| a.metric == e.metric && a.group == e.group);
        let _ = writeln!(
            md,
            "| {} | {} | {:.2} | [{:.2}, {:.2}] | {} | {} | {} |",
            e.metric,
            e.group,
            e.mean,
            e.ci[0],
            e.ci[1],
            f(run.map(|r| r.mean), 2),
            run.map_or("–".into(), |r| format!("[{:.2}, {:.2}]", r.ci_low, r.ci_high)),
            run.map_or("–".into(), |r| r.n_responders.to_string()),
        );
        push(
            "accuracy",
            format!("{}/{}", e.metric, e.group),
            "mean",
            Some(e.mean),
            run.map(|r| r.mean),
        );
    }
    let _ = writeln!(
        md,
        "\nConfidence intervals: {}.\n",
        acc.first().map_or("", |a| a.ci_method.as_str())
    );

    let _ = writeln!(md, "## Mean per-responder preference log-ratio\n");
    let _ = writeln!(
        md,
        "Positive values favour the natural response, negative values the L-shaped one.\n"
    );
    let _ = writeln!(md, "| group | published | this run | this run 95% CI | responders |");
    let _ = writeln!(md, "|---|---|---|---|---|");
    for (g, published) in &fx.responder_mean_log_ratio.means {
        let run = summary.iter().find(|s| &s.group == g);
        let _ = writeln!(
            md,
            "| {g} | {published:.2} | {} | {} | {} |",
            f(run.map(|r| r.mean_responder_log_ratio), 3),
            run.map_or("–".into(), |r| format!("[{:.3}, {:.3}]", r.ci_low, r.ci_high)),
            run.map_or("–".into(), |r| r.n_responders.to_string()),
        );
        push(
            "preference",
            g.clone(),
            "mean_log_ratio",
            Some(*published),
            run.map(|r| r.mean_responder_log_ratio),
        );
    }

    let _ = writeln!(md, "\n## Spearman correlation of per-item log-ratios\n");
    let _ = writeln!(
        md,
        "| a | b | published ρ | published p | this run ρ | this run p | method |"
    );
    let _ = writeln!(md, "|---|---|---|---|---|---|---|");
    for e in &fx.spearman {
        let run = rho.iter().find(|r| r.a == e.a && r.b == e.b);
        let _ = writeln!(
            md,
            "| {} | {} | {:.2} | {} | {} | {}{} | {} |",
            e.a,
            e.b,
            e.rho,
            e.p,
            f(run.map(|r| r.rho), 3),
            f(run.map(|r| r.p_value), 3),
            run.map_or("", |r| significance_stars(r.p_value)),
            run.map_or("–", |r| r.method.as_str()),
        );
        push(
            "spearman",
            format!("{}~{}", e.a, e.b),
            "rho",
            Some(e.rho),
            run.map(|r| r.rho),
        );
    }

    let _ = writeln!(md, "\n## Two-sample KS test on per-item log-ratios\n");
    let _ = writeln!(md, "| a | b | published D | published p | this run D | this run p |");
    let _ = writeln!(md, "|---|---|---|---|---|---|");
    for e in &fx.ks {
        let run = ks.iter().find(|r| r.a == e.a && r.b == e.b);
        let _ = writeln!(
            md,
            "| {} | {} | {:.2} | {} | {} | {} |",
            e.a,
            e.b,
            e.d,
            published_p(e.p, e.p_is_bound),
            f(run.map(|r| r.d_stat), 3),
            f(run.map(|r| r.p_value), 4),
        );
        push("ks", format!("{}~{}", e.a, e.b), "d", Some(e.d), run.map(|r| r.d_stat));
    }

    let _ = writeln!(
        md,
        "\n## Mixed-effects logistic regression: L answer ~ log10 wordlikeness\n"
    );
    let _ = writeln!(
        md,
        "| dataset | published β | published p | this run β | SE | p | σ item | σ responder | converged | rows | status |"
    );
    let _ = writeln!(md, "|---|---|---|---|---|---|---|---|---|---|---|");
    for e in &fx.regression {
        let run = reg.iter().find(|r| r.dataset == e.dataset);
        let sig = run
            .and_then(|r| r.p_value)
            .map_or("", |pv| if pv < alpha { " *" } else { "" });
        let _ = writeln!(
            md,
            "| {} | {} | {} | {} | {} | {}{} | {} | {} | {} | {} | {} |",
            e.dataset,
            e.beta,
            published_p(e.p, e.p_is_bound),
            f(run.and_then(|r| r.beta), 3),
            f(run.and_then(|r| r.se), 3),
            f(run.and_then(|r| r.p_value), 4),
            sig,
            f(run.and_then(|r| r.sigma_item), 3),
            f(run.and_then(|r| r.sigma_responder), 3),
            run.and_then(|r| r.converged).map_or("–".into(), |c| c.to_string()),
            run.map_or("–".into(), |r| r.n_rows.to_string()),
            run.map_or("missing", |r| r.status.as_str()),
        );
        push(
            "regression",
            e.dataset.clone(),
            "beta",
            Some(e.beta),
            run.and_then(|r| r.beta),
        );
    }
    let _ = writeln!(
        md,
        "\nMethod: {}. Wald p-values; `*` marks p < {alpha}. The participants dataset is fixture-reconstructed from per-item counts, so its responder structure is synthetic.\n",
        reg.first().map_or("", |r| r.method.as_str())
    );

    let _ = writeln!(md, "## Wordlikeness\n");
    let _ = writeln!(md, "| item | scored word | raw | log10 |");
    let _ = writeln!(md, "|---|---|---|---|");
    for w in &wl {
        let _ = writeln!(
            md,
            "| {} | {} | {:.4e} | {:.4} |",
            w.item_id, w.word, w.raw, w.log10_raw
        );
        push("wordlikeness", w.item_id.clone(), "log10_raw", None, Some(w.log10_raw));
    }
    let _ = writeln!(
        md,
        "\nThe participants' per-item log-ratios used in the correlation, KS and scatter views come from the fixture file; every other value in the \"this run\" columns is computed."
    );

    let dir = p.dir("report");
    let mut out = vec![dir.join("report.md"), dir.join("report.csv")];
    write_file(&out[0], md.as_bytes())?;
    write_csv(&out[1], &csv_rows)?;
    if p.cfg.analysis.scatter_svg {
        let path = dir.join("scatter.svg");
        write_file(&path, scatter_svg(&wl, &items).as_bytes())?;
        out.push(path);
    }
    Ok(out)
}

const PALETTE: [&str; 6] = ["#222222", "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e"];

/// Per-item log-ratio against log10 wordlikeness, one colour per group.
fn scatter_svg(wl: &[WordlikenessRow], items: &[ItemRatioRow]) -> String {
    let (w, h, m) = (640.0, 420.0, 60.0);
    let x_of: BTreeMap<&str, f64> = wl.iter().map(|r| (r.item_id.as_str(), r.log10_raw)).collect();
    let pts: Vec<(&str, f64, f64)> = items
        .iter()
        .filter_map(|r| {
            x_of.get(r.item_id.as_str())
                .map(|&x| (r.group.as_str(), x, r.log_ratio))
        })
        .filter(|(_, x, y)| x.is_finite() && y.is_finite())
        .collect();
    let range = |v: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        if lo.is_finite() && hi > lo {
            (lo, hi)
        } else {
            (lo.min(0.0) - 1.0, hi.max(0.0) + 1.0)
        }
    };
    let (x0, x1) = range(&mut pts.iter().map(|p| p.1));
    let (y0, y1) = range(&mut pts.iter().map(|p| p.2));
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
    let mut groups: Vec<&str> = Vec::new();
    for p in &pts {
        if !groups.contains(&p.0) {
            groups.push(p.0);
        }
    }
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<line x1="{m}" y1="{}" x2="{}" y2="{}" stroke="black"/><line x1="{m}" y1="{m}" x2="{m}" y2="{}" stroke="black"/>"#,
        h - m,
        w - m,
        h - m,
        h - m
    );
    if y0 < 0.0 && y1 > 0.0 {
        let _ = writeln!(
            s,
            r##"<line x1="{m}" y1="{0:.1}" x2="{1}" y2="{0:.1}" stroke="#bbbbbb" stroke-dasharray="4 3"/>"##,
            sy(0.0),
            w - m
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">log10 wordlikeness (GNM)</text>"#,
        w / 2.0,
        h - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" transform="rotate(-90 15 {})" text-anchor="middle">log ratio (natural / L-shaped)</text>"#,
        h / 2.0,
        h / 2.0
    );
    for (v, anchor_x) in [(x0, sx(x0)), (x1, sx(x1))] {
        let _ = writeln!(
            s,
            r#"<text x="{anchor_x:.1}" y="{}" text-anchor="middle">{v:.2}</text>"#,
            h - m + 16.0
        );
    }
    for (v, anchor_y) in [(y0, sy(y0)), (y1, sy(y1))] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{v:.2}</text>"#,
            m - 6.0,
            anchor_y + 4.0
        );
    }
    for (gi, g) in groups.iter().enumerate() {
        let color = PALETTE[gi % PALETTE.len()];
        for p in pts.iter().filter(|p| p.0 == *g) {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.1}" cy="{:.1}" r="4" fill="{color}" fill-opacity="0.8"/>"#,
                sx(p.1),
                sy(p.2)
            );
        }
        let ly = m + 16.0 * gi as f64;
        let _ = writeln!(
            s,
            r#"<circle cx="{}" cy="{ly}" r="4" fill="{color}"/><text x="{}" y="{}">{g}</text>"#,
            w - m - 110.0,
            w - m - 100.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}
