//! Read-only reference data: the 15 nonce test items and published values
//! shown next to computed results in reports.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::eval::{EvalError, TestItem};
use crate::morpho::Morphology;

pub const DEFAULT_FIXTURES: &str = include_str!("../data/fixtures.toml");

#[derive(Debug, Clone, Deserialize)]
pub struct ItemEntry {
    pub id: String,
    pub l_form: String,
    pub nl_form: String,
    pub nl_reconstructed: bool,
    pub citation: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ItemLogRatios {
    pub citation: String,
    #[serde(flatten)]
    pub series: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ParticipantCounts {
    pub citation: String,
    pub responses_per_item: u32,
    pub participants: u32,
    pub natural: Vec<u32>,
    pub l_shaped: Vec<u32>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ResponderMeans {
    pub citation: String,
    #[serde(flatten)]
    pub means: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct AccuracyEntry {
    pub metric: String,
    pub group: String,
    pub mean: f64,
    pub sd: f64,
    pub ci: [f64; 2],
    pub citation: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct CorrelationEntry {
    pub a: String,
    pub b: String,
    pub rho: f64,
    pub p: f64,
    pub citation: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct KsEntry {
    pub a: String,
    pub b: String,
    pub d: f64,
    pub p: f64,
    pub p_is_bound: bool,
    pub citation: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct RegressionEntry {
    pub dataset: String,
    pub beta: f64,
    pub p: f64,
    pub p_is_bound: bool,
    pub citation: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Fixtures {
    pub items: Vec<ItemEntry>,
    pub item_log_ratios: ItemLogRatios,
    pub participant_counts: ParticipantCounts,
    pub responder_mean_log_ratio: ResponderMeans,
    pub accuracy: Vec<AccuracyEntry>,
    pub spearman: Vec<CorrelationEntry>,
    pub ks: Vec<KsEntry>,
    pub regression: Vec<RegressionEntry>,
}

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error("fixture file: {0}")]
    Parse(String),
    #[error("fixture file: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Item(#[from] EvalError),
}

impl Fixtures {
    pub fn from_toml_str(text: &str) -> Result<Self, FixtureError> {
        let f: Fixtures = toml::from_str(text).map_err(|e| FixtureError::Parse(e.to_string()))?;
        let n = f.items.len();
        for (name, series) in &f.item_log_ratios.series {
            if series.len() != n {
                return Err(FixtureError::Inconsistent(format!(
                    "series {name} has {} values for {n} items",
                    series.len()
                )));
            }
        }
        let c = &f.participant_counts;
        if c.natural.len() != n || c.l_shaped.len() != n {
            return Err(FixtureError::Inconsistent("participant counts length".into()));
        }
        Ok(f)
    }

    pub fn load(path: &Path) -> Result<Self, FixtureError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| FixtureError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// The items parsed against `morphology`, in fixture order.
    pub fn test_items(&self, morphology: &Morphology) -> Result<Vec<TestItem>, FixtureError> {
        self.items
            .iter()
            .map(|e| {
                let l = morphology.alphabet.parse_form(&e.l_form).map_err(EvalError::from)?;
                let nl = morphology.alphabet.parse_form(&e.nl_form).map_err(EvalError::from)?;
                Ok(TestItem::new(e.id.clone(), l, nl, &morphology.suffixes)?)
            })
            .collect()
    }

    pub fn item_ids(&self) -> Vec<&str> {
        self.items.iter().map(|e| e.id.as_str()).collect()
    }
}

impl Default for Fixtures {
    fn default() -> Self {
        Self::from_toml_str(DEFAULT_FIXTURES).expect("bundled fixtures are valid")
    }
}
