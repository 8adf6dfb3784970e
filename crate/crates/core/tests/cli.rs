use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

const BIN: &str = env!("CARGO_BIN_EXE_morphome-lab");

fn smoke_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/smoke.toml")
}

fn run(args: &[&str], workdir: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--config")
        .arg(smoke_config())
        .arg("--workdir")
        .arg(workdir)
        .env_remove("MORPHOME_WORKDIR")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn ok(args: &[&str], workdir: &Path) {
    let out = run(args, workdir);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn header(path: &Path) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.headers().unwrap().iter().map(str::to_string).collect()
}

fn digest_tree(root: &Path) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().display().to_string();
                out.push((rel, hex::encode(Sha256::digest(std::fs::read(&p).unwrap()))));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn smoke_pipeline_produces_every_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let w = tmp.path();
    for step in ["gen", "train", "eval", "analyze", "gnm", "regress", "report"] {
        ok(&[step], w);
    }
    for cond in ["10L-90NL", "90L-10NL"] {
        for rep in ["r0", "r1"] {
            for f in ["train.tsv", "test.tsv", "lexicon.tsv", "manifest.json"] {
                assert!(
                    w.join("data").join(cond).join(rep).join(f).is_file(),
                    "{cond}/{rep}/{f}"
                );
            }
            let m = w.join("models").join(cond).join(rep);
            assert!(m.join("final.ckpt").is_file());
            let periodic = std::fs::read_dir(&m)
                .unwrap()
                .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with("update_"))
                .count();
            assert!(periodic > 0);
            assert_eq!(header(&m.join("train_log.csv"))[0], "update");
        }
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(w.join("data/90L-10NL/r0/manifest.json")).unwrap()).unwrap();
    assert!(manifest.is_object());

    let probe = header(&w.join("eval/responses_probe.csv"));
    assert_eq!(
        &probe[..5],
        ["item_id", "responder_id", "condition", "target", "predicted"]
    );
    assert_eq!(header(&w.join("eval/responses_paradigm.csv")), probe);
    assert_eq!(
        header(&w.join("gnm/wordlikeness.csv")),
        ["item_id", "word", "raw", "log10_raw"]
    );
    for f in [
        "accuracy.csv",
        "item_log_ratios.csv",
        "responder_log_ratios.csv",
        "condition_summary.csv",
        "spearman.csv",
        "ks.csv",
    ] {
        assert!(!header(&w.join("analysis").join(f)).is_empty(), "{f}");
    }
    assert!(header(&w.join("regress/regression.csv")).contains(&"beta".to_string()));
    assert_eq!(
        header(&w.join("report/report.csv")),
        ["table", "key", "quantity", "published", "this_run"]
    );
    let md = std::fs::read_to_string(w.join("report/report.md")).unwrap();
    assert!(md.contains('|'));
    assert!(std::fs::read_to_string(w.join("report/scatter.svg"))
        .unwrap()
        .starts_with("<svg"));
    assert!(w.join("config.resolved.toml").is_file());

    // Wordlikeness rows cover the 15 test items, once each.
    let mut r = csv::Reader::from_path(w.join("gnm/wordlikeness.csv")).unwrap();
    assert_eq!(r.records().count(), 15);
}

#[test]
fn gen_is_deterministic_and_seed_sensitive() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    ok(&["gen"], a.path());
    ok(&["gen"], b.path());
    ok(&["gen", "--seed", "8"], c.path());
    let da = digest_tree(&a.path().join("data"));
    assert_eq!(da.len(), 16);
    assert_eq!(da, digest_tree(&b.path().join("data")));
    assert_ne!(da, digest_tree(&c.path().join("data")));
}

#[test]
fn report_without_inputs_lists_missing_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["report"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("missing artifacts"), "{err}");
    assert!(err.contains("condition_summary.csv"), "{err}");
}

#[test]
fn bad_configuration_exits_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "root_seed = 1\nnot_a_key = 3\n").unwrap();
    let out = Command::new(BIN)
        .args(["gen", "--config"])
        .arg(&cfg)
        .arg("--workdir")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["gen", "--condition", "banana"], tmp.path());
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn workdir_environment_variable_is_honoured() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(BIN)
        .args(["gen", "--condition", "90L-10NL", "--config"])
        .arg(smoke_config())
        .env("MORPHOME_WORKDIR", tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(tmp.path().join("data/90L-10NL/r1/train.tsv").is_file());
    assert!(!tmp.path().join("data/10L-90NL").exists());
}
