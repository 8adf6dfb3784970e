//! Generalized Neighborhood Model wordlikeness: an item's similarity to a
//! reference lexicon is `Σ weight · exp(−d / s)` over lexicon entries, with
//! `d` a weighted phoneme edit distance.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::TestItem;
use crate::morpho::{Alphabet, Form, MorphoError, Symbol, SEPARATOR};

#[derive(Debug, Error)]
pub enum GnmError {
    #[error("reference lexicon is empty")]
    EmptyLexicon,
    #[error("lexicon line {line}: {why}")]
    Lexicon { line: usize, why: String },
    #[error("invalid GNM parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairCost {
    pub a: String,
    pub b: String,
    pub cost: f64,
    #[serde(default)]
    pub symmetric: bool,
}

/// Insert/delete costs and substitution costs; pairs not listed cost
/// `substitute`. Identical symbols always cost 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostMatrix {
    pub insert: f64,
    pub delete: f64,
    pub substitute: f64,
    pub pairs: Vec<PairCost>,
}

impl Default for CostMatrix {
    fn default() -> Self {
        CostMatrix {
            insert: 1.0,
            delete: 1.0,
            substitute: 1.0,
            pairs: Vec::new(),
        }
    }
}

impl CostMatrix {
    /// Unit insert, delete and substitute costs.
    pub fn unit() -> Self {
        Self::default()
    }

    pub fn from_toml_str(text: &str) -> Result<Self, GnmError> {
        let c: CostMatrix = toml::from_str(text).map_err(|e| GnmError::Params(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, GnmError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), GnmError> {
        let ok = |c: f64| c.is_finite() && c >= 0.0;
        if !ok(self.insert) || !ok(self.delete) || !ok(self.substitute) {
            return Err(GnmError::Params("costs must be finite and non-negative".into()));
        }
        for p in &self.pairs {
            if !ok(p.cost) {
                return Err(GnmError::Params(format!("cost {}→{} is {}", p.a, p.b, p.cost)));
            }
            if p.a == p.b && p.cost != 0.0 {
                return Err(GnmError::Params(format!("cost({0}, {0}) must be 0", p.a)));
            }
        }
        Ok(())
    }

    pub fn substitution(&self, a: &str, b: &str) -> f64 {
        if a == b {
            return 0.0;
        }
        // Later entries override earlier ones.
        self.pairs
            .iter()
            .rev()
            .find(|p| (p.a == a && p.b == b) || (p.symmetric && p.a == b && p.b == a))
            .map_or(self.substitute, |p| p.cost)
    }
}

/// Minimal-cost alignment of `a` onto `b` (delete from `a`, insert from `b`).
pub fn weighted_edit_distance(a: &[Symbol], b: &[Symbol], costs: &CostMatrix) -> f64 {
    let m = b.len();
    let mut prev: Vec<f64> = (0..=m).map(|j| j as f64 * costs.insert).collect();
    let mut cur = vec![0.0; m + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = (i + 1) as f64 * costs.delete;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + costs.substitution(x.glyph(), y.glyph());
            let del = prev[j + 1] + costs.delete;
            let ins = cur[j] + costs.insert;
            cur[j + 1] = sub.min(del).min(ins);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GnmParams {
    /// Decay scale `s`.
    pub sensitivity: f64,
    pub costs: CostMatrix,
}

impl Default for GnmParams {
    fn default() -> Self {
        GnmParams {
            sensitivity: 0.3,
            costs: CostMatrix::unit(),
        }
    }
}

impl GnmParams {
    pub fn validate(&self) -> Result<(), GnmError> {
        if !(self.sensitivity > 0.0 && self.sensitivity.is_finite()) {
            return Err(GnmError::Params(format!(
                "sensitivity {} must be positive",
                self.sensitivity
            )));
        }
        self.costs.validate()
    }
}

/// One reference word: `base # alternant` as a symbol sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct LexEntry {
    pub word: Vec<Symbol>,
    pub weight: f64,
}

impl LexEntry {
    pub fn from_stems(base: &Form, alternant: &Form, weight: f64) -> Self {
        LexEntry {
            word: joined(base, alternant),
            weight,
        }
    }

    pub fn text(&self) -> String {
        self.word.iter().map(Symbol::glyph).collect()
    }
}

fn joined(base: &Form, alternant: &Form) -> Vec<Symbol> {
    let mut w = base.symbols().to_vec();
    w.push(Symbol::new_unchecked(SEPARATOR));
    w.extend_from_slice(alternant.symbols());
    w
}

/// Parses `base#alternant[<TAB>weight]` lines; blank lines are skipped.
pub fn parse_lexicon(text: &str, alphabet: &Alphabet) -> Result<Vec<LexEntry>, GnmError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let err = |why: String| GnmError::Lexicon { line: i + 1, why };
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let (word, weight) = match line.split_once('\t') {
            Some((w, x)) => {
                let v: f64 = x.trim().parse().map_err(|_| err(format!("bad weight {x:?}")))?;
                if !(v.is_finite() && v >= 0.0) {
                    return Err(err(format!("weight {v} must be finite and non-negative")));
                }
                (w, v)
            }
            None => (line, 1.0),
        };
        let (base, alt) = word
            .split_once(SEPARATOR)
            .ok_or_else(|| err(format!("missing {SEPARATOR:?} in {word:?}")))?;
        let parse = |s: &str| -> Result<Form, GnmError> {
            alphabet
                .parse_form(s.trim())
                .map_err(|e: MorphoError| err(e.to_string()))
        };
        out.push(LexEntry::from_stems(&parse(base)?, &parse(alt)?, weight));
    }
    Ok(out)
}

pub fn load_lexicon(path: &Path, alphabet: &Alphabet) -> Result<Vec<LexEntry>, GnmError> {
    parse_lexicon(&std::fs::read_to_string(path)?, alphabet)
}

/// Bundled reference lexicon of Spanish L-shaped verbs (2SG.IND stem #
/// 1SG.IND stem).
pub const DEFAULT_LEXICON: &str = include_str!("../data/spanish_l_lexicon.txt");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordlikenessScore {
    pub item_id: String,
    pub raw: f64,
    pub log10_raw: f64,
}

pub fn gnm_score(
    item_id: &str,
    item: &[Symbol],
    lexicon: &[LexEntry],
    params: &GnmParams,
) -> Result<WordlikenessScore, GnmError> {
    params.validate()?;
    if lexicon.is_empty() {
        return Err(GnmError::EmptyLexicon);
    }
    let raw: f64 = lexicon
        .iter()
        .map(|w| w.weight * (-weighted_edit_distance(item, &w.word, &params.costs) / params.sensitivity).exp())
        .sum();
    Ok(WordlikenessScore {
        item_id: item_id.to_string(),
        raw,
        log10_raw: raw.log10(),
    })
}

/// The symbol sequence scored for a test item: `nl_stem # l_stem`.
pub fn item_word(item: &TestItem) -> Vec<Symbol> {
    joined(&item.nl_stem, &item.l_stem)
}

pub fn score_test_set(
    items: &[TestItem],
    lexicon: &[LexEntry],
    params: &GnmParams,
) -> Result<Vec<WordlikenessScore>, GnmError> {
    items
        .iter()
        .map(|it| gnm_score(&it.item_id, &item_word(it), lexicon, params))
        .collect()
}
