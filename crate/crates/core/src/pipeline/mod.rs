//! Experiment orchestration behind the `morphome-lab` binary.
//!
//! Work directory layout:
//!
//! ```text
//! config.resolved.toml
//! data/<condition>/r<k>/{train.tsv,test.tsv,lexicon.tsv,manifest.json}
//! models/<condition>/r<k>/{epoch_NNNN.ckpt,final.ckpt,train_log.csv}
//! eval/{responses_probe.csv,responses_paradigm.csv}
//! analysis/{accuracy,item_log_ratios,responder_log_ratios,condition_summary,spearman,ks}.csv
//! gnm/wordlikeness.csv
//! regress/regression.csv
//! report/{report.md,report.csv,scatter.svg}
//! ```

mod analysis;
mod commands;
mod report;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::datagen::{DatagenError, FrequencyCondition, LexiconSpec};
use crate::eval::TestItem;
use crate::fixtures::{FixtureError, Fixtures};
use crate::gnm::{GnmError, GnmParams};
use crate::morpho::{MorphoError, Morphology};
use crate::seq2seq::{ModelConfig, Seq2SeqError, TrainConfig};
use crate::stats::LogRatioConfig;

pub use analysis::{cmd_analyze, cmd_regress, participant_regression_rows};
pub use commands::{cmd_eval, cmd_gen, cmd_gnm, cmd_train};
pub use report::cmd_report;

/// Overrides `paths.workdir` when set.
pub const WORKDIR_ENV: &str = "MORPHOME_WORKDIR";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("missing artifacts:\n{}", .0.iter().map(|p| format!("  {}", p.display())).collect::<Vec<_>>().join("\n"))]
    Missing(Vec<PathBuf>),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl PipelineError {
    /// Process exit code: 2 config, 3 data, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Data(_) | PipelineError::Missing(_) | PipelineError::Io { .. } => 3,
            PipelineError::Numerical(_) => 4,
        }
    }

    pub(crate) fn io(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
        move |source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl From<Seq2SeqError> for PipelineError {
    fn from(e: Seq2SeqError) -> Self {
        match e {
            Seq2SeqError::NonFiniteLoss { .. } => PipelineError::Numerical(e.to_string()),
            Seq2SeqError::Config(_) => PipelineError::Config(e.to_string()),
            _ => PipelineError::Data(e.to_string()),
        }
    }
}

macro_rules! data_error {
    ($($t:ty),*) => {
        $(impl From<$t> for PipelineError {
            fn from(e: $t) -> Self {
                PipelineError::Data(e.to_string())
            }
        })*
    };
}
data_error!(
    DatagenError,
    MorphoError,
    FixtureError,
    GnmError,
    crate::eval::EvalError,
    csv::Error
);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub workdir: PathBuf,
    /// Defaults to `<workdir>/data`.
    pub data: Option<PathBuf>,
    pub morphology: Option<PathBuf>,
    pub fixtures: Option<PathBuf>,
    pub gnm_lexicon: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            workdir: PathBuf::from("work"),
            data: None,
            morphology: None,
            fixtures: None,
            gnm_lexicon: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeConfig {
    /// 1 decodes greedily; larger values run beam search and keep the top
    /// hypothesis.
    pub beam_width: usize,
    /// Output tokens allowed per response, EOS included.
    pub max_len: usize,
    pub batch_size: usize,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            beam_width: 1,
            max_len: 30,
            batch_size: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub log_ratio: LogRatioConfig,
    /// Significance level used to mark results in the report.
    pub alpha: f64,
    pub scatter_svg: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            log_ratio: LogRatioConfig::default(),
            alpha: 0.05,
            scatter_svg: true,
        }
    }
}

/// Everything a run needs. `lexicon.rng_seed` and `train.seed` are replaced
/// by per-run seeds derived from `root_seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub root_seed: u64,
    pub conditions: Vec<String>,
    /// Independently generated and trained models per condition.
    pub replicates: usize,
    pub ordered_pairs: bool,
    pub paths: Paths,
    pub lexicon: LexiconSpec,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub decode: DecodeConfig,
    pub analysis: AnalysisConfig,
    pub gnm: GnmParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            root_seed: 0,
            conditions: FrequencyCondition::standard().into_iter().map(|c| c.label).collect(),
            replicates: 3,
            ordered_pairs: false,
            paths: Paths::default(),
            lexicon: LexiconSpec::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            decode: DecodeConfig::default(),
            analysis: AnalysisConfig::default(),
            gnm: GnmParams::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    /// Reads a config file. Relative paths are taken relative to the file's
    /// directory, and `MORPHOME_WORKDIR` replaces the work directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        if let Some(w) = std::env::var_os(WORKDIR_ENV).filter(|w| !w.is_empty()) {
            cfg.paths.workdir = PathBuf::from(w);
        }
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.paths.workdir);
        for p in [
            &mut self.paths.data,
            &mut self.paths.morphology,
            &mut self.paths.fixtures,
            &mut self.paths.gnm_lexicon,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    pub fn to_toml_string(&self) -> Result<String, PipelineError> {
        toml::to_string(self).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.conditions.is_empty() {
            return bad("no conditions".into());
        }
        for c in &self.conditions {
            FrequencyCondition::parse(c).map_err(|e| PipelineError::Config(e.to_string()))?;
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        self.model.validate()?;
        self.train.validate()?;
        self.gnm.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        if self.decode.beam_width == 0 || self.decode.batch_size == 0 {
            return bad("decode.beam_width and decode.batch_size must be positive".into());
        }
        if self.decode.max_len == 0 || self.decode.max_len > self.model.max_len {
            return bad(format!(
                "decode.max_len {} must be in 1..={}",
                self.decode.max_len, self.model.max_len
            ));
        }
        let lr = &self.analysis.log_ratio;
        if !(lr.base > 1.0 && lr.alpha > 0.0 && lr.clamp > 0.0) {
            return bad("log ratio needs base > 1, alpha > 0, clamp > 0".into());
        }
        if !(self.analysis.alpha > 0.0 && self.analysis.alpha < 1.0) {
            return bad("analysis.alpha must be in (0, 1)".into());
        }
        Ok(())
    }
}

/// One (condition, replicate) unit: its own lexicon and its own model.
#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub condition: FrequencyCondition,
    pub replicate: usize,
    pub seed: u64,
}

impl Run {
    pub fn responder_id(&self) -> String {
        format!("{}/r{}", self.condition.label, self.replicate)
    }

    pub fn rel_dir(&self) -> PathBuf {
        Path::new(&self.condition.label).join(format!("r{}", self.replicate))
    }
}

/// Seed for one run: the first 8 bytes of SHA-256 over
/// `root:condition:replicate`.
pub fn derive_seed(root: u64, condition: &str, replicate: usize) -> u64 {
    let h = Sha256::digest(format!("{root}:{condition}:{replicate}").as_bytes());
    u64::from_le_bytes(h[..8].try_into().expect("8 bytes"))
}

/// Validated config plus the resources it points at.
pub struct Pipeline {
    pub cfg: PipelineConfig,
    pub morphology: Morphology,
    pub fixtures: Fixtures,
    pub items: Vec<TestItem>,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig) -> Result<Self, PipelineError> {
        cfg.validate()?;
        let morphology = match &cfg.paths.morphology {
            Some(p) => Morphology::load(p).map_err(|e| PipelineError::Config(e.to_string()))?,
            None => Morphology::default(),
        };
        let fixtures = match &cfg.paths.fixtures {
            Some(p) => Fixtures::load(p).map_err(|e| PipelineError::Config(e.to_string()))?,
            None => Fixtures::default(),
        };
        let items = fixtures.test_items(&morphology)?;
        log::info!("root seed {}", cfg.root_seed);
        Ok(Pipeline {
            cfg,
            morphology,
            fixtures,
            items,
        })
    }

    pub fn workdir(&self) -> &Path {
        &self.cfg.paths.workdir
    }

    pub fn data_dir(&self) -> PathBuf {
        self.cfg
            .paths
            .data
            .clone()
            .unwrap_or_else(|| self.workdir().join("data"))
    }

    pub fn dir(&self, name: &str) -> PathBuf {
        self.workdir().join(name)
    }

    pub fn runs(&self) -> Vec<Run> {
        let mut out = Vec::new();
        for label in &self.cfg.conditions {
            let condition = FrequencyCondition::parse(label).expect("validated");
            for replicate in 0..self.cfg.replicates {
                out.push(Run {
                    seed: derive_seed(self.cfg.root_seed, &condition.label, replicate),
                    condition: condition.clone(),
                    replicate,
                });
            }
        }
        out
    }

    pub fn condition_labels(&self) -> Vec<String> {
        self.runs()
            .iter()
            .map(|r| r.condition.label.clone())
            .fold(Vec::new(), |mut v, l| {
                if !v.contains(&l) {
                    v.push(l);
                }
                v
            })
    }

    /// Writes the resolved config into the work directory.
    pub fn record_config(&self) -> Result<(), PipelineError> {
        let path = self.workdir().join("config.resolved.toml");
        write_file(&path, self.cfg.to_toml_string()?.as_bytes())
    }
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(PipelineError::io(dir))?;
    }
    std::fs::write(path, bytes).map_err(PipelineError::io(path))
}

pub(crate) fn read_file(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(PipelineError::io(path))
}

pub(crate) fn require(paths: &[PathBuf]) -> Result<(), PipelineError> {
    let missing: Vec<PathBuf> = paths.iter().filter(|p| !p.is_file()).cloned().collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(PipelineError::Missing(missing))
    }
}

/// Writes `rows` with a header line; an empty table still gets its header.
pub(crate) fn write_csv<T: Serialize + Default>(path: &Path, rows: &[T]) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let placeholder = [T::default()];
    let data = if rows.is_empty() { &placeholder[..] } else { rows };
    for r in data {
        w.serialize(r)?;
    }
    let mut bytes = w.into_inner().map_err(|e| PipelineError::Data(e.to_string()))?;
    if rows.is_empty() {
        let end = bytes.iter().position(|&b| b == b'\n').map_or(bytes.len(), |i| i + 1);
        bytes.truncate(end);
    }
    write_file(path, &bytes)
}

pub(crate) fn read_csv<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, PipelineError> {
    let text = read_file(path)?;
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| PipelineError::Data(format!("{}: {e}", path.display())))
}
