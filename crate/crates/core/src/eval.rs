//! Scoring decoded responses against the nonce test items.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::morpho::{
    build_paradigm, strip_suffix, CellTag, Combination, Form, MorphoError, Morphology, Paradigm, ShapeClass,
    SuffixTable,
};
use crate::stats::{summarize, StatsError, Summary};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("empty input")]
    EmptyInput,
    #[error("test item {item}: {why}")]
    BadItem { item: String, why: String },
    #[error(transparent)]
    Morpho(#[from] MorphoError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// A nonce verb from the human experiment: its 1SG.IND form (L-cell stem)
/// and its 2SG.IND form (NL-cell stem).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestItem {
    pub item_id: String,
    pub l_form: Form,
    pub nl_form: Form,
    pub l_stem: Form,
    pub nl_stem: Form,
}

/// Which cell is withheld, mirroring the two participant groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProbeGroup {
    /// 1SG.IND and 2SG.IND shown; 2SG.SBJV requested.
    IndicativeSources,
    /// 2SG.IND and 2SG.SBJV shown; 1SG.IND requested.
    SubjunctiveSource,
}

impl ProbeGroup {
    pub const ALL: [ProbeGroup; 2] = [ProbeGroup::IndicativeSources, ProbeGroup::SubjunctiveSource];

    pub fn target(self) -> CellTag {
        match self {
            ProbeGroup::IndicativeSources => CellTag::SBJV_2SG,
            ProbeGroup::SubjunctiveSource => CellTag::IND_1SG,
        }
    }

    /// The cells whose stems the human task asked about.
    pub fn target_cells() -> [CellTag; 2] {
        [CellTag::SBJV_2SG, CellTag::IND_1SG]
    }
}

impl TestItem {
    pub fn new(
        item_id: impl Into<String>,
        l_form: Form,
        nl_form: Form,
        table: &SuffixTable,
    ) -> Result<Self, EvalError> {
        let item_id = item_id.into();
        let bad = |why: String| EvalError::BadItem {
            item: item_id.clone(),
            why,
        };
        let (l_stem, _) =
            strip_suffix(&l_form, &CellTag::IND_1SG, table).map_err(|e| bad(format!("1SG.IND form: {e}")))?;
        let (nl_stem, _) =
            strip_suffix(&nl_form, &CellTag::IND_2SG, table).map_err(|e| bad(format!("2SG.IND form: {e}")))?;
        let n = l_stem.len();
        if n != nl_stem.len()
            || l_stem.symbols()[..n - 1] != nl_stem.symbols()[..n - 1]
            || l_stem.last() == nl_stem.last()
        {
            return Err(bad(format!(
                "stems {l_stem} / {nl_stem} must differ exactly in the final consonant"
            )));
        }
        Ok(TestItem {
            item_id,
            l_form,
            nl_form,
            l_stem,
            nl_stem,
        })
    }

    /// The full L-pattern paradigm implied by the two attested stems.
    pub fn paradigm(&self, morphology: &Morphology) -> Result<Paradigm, EvalError> {
        Ok(build_paradigm(
            self.item_id.clone(),
            self.nl_stem.clone(),
            Some(self.l_stem.clone()),
            ShapeClass::L,
            &morphology.suffixes,
            &morphology.cells,
        )?)
    }

    /// The stem the L pattern assigns to `target`.
    pub fn gold_stem(&self, target: &CellTag) -> &Form {
        if target.is_l_cell() {
            &self.l_stem
        } else {
            &self.nl_stem
        }
    }

    pub fn gold(&self, target: &CellTag, table: &SuffixTable) -> Result<Form, EvalError> {
        Ok(self.gold_stem(target).concat(table.primary(target)?))
    }

    /// The human-task combination for one group. Sources are ordered by the
    /// morphology's cell order, as in training data.
    pub fn probe(&self, group: ProbeGroup, morphology: &Morphology) -> Result<Combination, EvalError> {
        let table = &morphology.suffixes;
        let (a, b) = match group {
            ProbeGroup::IndicativeSources => (
                (self.l_form.clone(), CellTag::IND_1SG),
                (self.nl_form.clone(), CellTag::IND_2SG),
            ),
            ProbeGroup::SubjunctiveSource => (
                (self.nl_form.clone(), CellTag::IND_2SG),
                (self.gold(&CellTag::SBJV_2SG, table)?, CellTag::SBJV_2SG),
            ),
        };
        let pos = |t: &CellTag| morphology.cells.iter().position(|c| c == t).unwrap_or(usize::MAX);
        let (src1, src2) = if pos(&a.1) <= pos(&b.1) { (a, b) } else { (b, a) };
        let target = group.target();
        Ok(Combination::new(
            self.item_id.clone(),
            src1,
            src2,
            target,
            self.gold(&target, table)?,
        )?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Classification {
    Natural,
    LShaped,
    Other,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Natural => "natural",
            Classification::LShaped => "l_shaped",
            Classification::Other => "other",
        })
    }
}

impl FromStr for Classification {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "natural" => Ok(Classification::Natural),
            "l_shaped" => Ok(Classification::LShaped),
            "other" => Ok(Classification::Other),
            _ => Err(format!("unknown classification {s:?}")),
        }
    }
}

/// Outcome of scoring one predicted form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Judgement {
    pub classification: Classification,
    pub stem_correct: bool,
    pub suffix_correct: bool,
    pub seq_correct: bool,
}

/// One decoded answer with its scoring.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub item_id: String,
    pub responder_id: String,
    pub condition: String,
    pub target: CellTag,
    pub predicted: Form,
    pub classification: Classification,
    pub stem_correct: bool,
    pub suffix_correct: bool,
    pub seq_correct: bool,
}

impl ResponseRecord {
    pub fn new(
        item_id: impl Into<String>,
        responder_id: impl Into<String>,
        condition: impl Into<String>,
        target: CellTag,
        predicted: Form,
        judgement: Judgement,
    ) -> Self {
        ResponseRecord {
            item_id: item_id.into(),
            responder_id: responder_id.into(),
            condition: condition.into(),
            target,
            predicted,
            classification: judgement.classification,
            stem_correct: judgement.stem_correct,
            suffix_correct: judgement.suffix_correct,
            seq_correct: judgement.seq_correct,
        }
    }
}

/// Scores a predicted form for `target`.
///
/// The stem is found by stripping a suffix of the target cell; failing
/// that, the longest matching suffix from anywhere in the table is stripped
/// so the stem can still be classified (the suffix then counts as wrong).
/// A stem equal to the L-cell stem is `LShaped`, equal to the NL-cell stem
/// `Natural`, anything else `Other`.
pub fn classify_response(
    item: &TestItem,
    target: &CellTag,
    predicted: &Form,
    table: &SuffixTable,
) -> Result<Judgement, EvalError> {
    let gold = item.gold(target, table)?;
    let (stem, suffix_correct) = match strip_suffix(predicted, target, table) {
        Ok((stem, _)) => (Some(stem), true),
        Err(MorphoError::NoMatch | MorphoError::EmptyForm) => {
            let stem = table
                .all_suffixes()
                .into_iter()
                .find(|s| s.len() < predicted.len() && predicted.ends_with(s))
                .map(|s| Form::new(predicted.symbols()[..predicted.len() - s.len()].to_vec()));
            (stem, false)
        }
        Err(e) => return Err(e.into()),
    };
    let classification = match &stem {
        Some(s) if *s == item.l_stem => Classification::LShaped,
        Some(s) if *s == item.nl_stem => Classification::Natural,
        _ => Classification::Other,
    };
    let stem_correct = stem.as_ref() == Some(item.gold_stem(target));
    Ok(Judgement {
        classification,
        stem_correct,
        suffix_correct,
        seq_correct: *predicted == gold,
    })
}

/// Accuracy in percent, summarized over responders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub summary: Summary,
    pub per_responder: Vec<(String, f64)>,
    pub n_records: usize,
    pub ci_method: &'static str,
}

pub const CI_METHOD: &str = "normal approximation: mean ± 1.96·SD/√n over responders";

fn accuracy_by<F>(records: &[&ResponseRecord], correct: F) -> Result<AccuracyReport, EvalError>
where
    F: Fn(&ResponseRecord) -> bool,
{
    if records.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut by_responder: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for r in records {
        let e = by_responder.entry(&r.responder_id).or_default();
        e.1 += 1;
        if correct(r) {
            e.0 += 1;
        }
    }
    let per_responder: Vec<(String, f64)> = by_responder
        .into_iter()
        .map(|(id, (hit, n))| (id.to_string(), 100.0 * hit as f64 / n as f64))
        .collect();
    let values: Vec<f64> = per_responder.iter().map(|(_, v)| *v).collect();
    Ok(AccuracyReport {
        summary: summarize(&values)?,
        per_responder,
        n_records: records.len(),
        ci_method: CI_METHOD,
    })
}

/// Stem accuracy; with `restrict_to_target_cells`, only records whose target
/// is one of the cells probed in the human task count.
pub fn stem_accuracy(records: &[ResponseRecord], restrict_to_target_cells: bool) -> Result<AccuracyReport, EvalError> {
    let targets = ProbeGroup::target_cells();
    let kept: Vec<&ResponseRecord> = records
        .iter()
        .filter(|r| !restrict_to_target_cells || targets.contains(&r.target))
        .collect();
    accuracy_by(&kept, |r| r.stem_correct)
}

pub fn suffix_accuracy(records: &[ResponseRecord]) -> Result<AccuracyReport, EvalError> {
    accuracy_by(&records.iter().collect::<Vec<_>>(), |r| r.suffix_correct)
}

pub fn sequence_accuracy(records: &[ResponseRecord]) -> Result<AccuracyReport, EvalError> {
    accuracy_by(&records.iter().collect::<Vec<_>>(), |r| r.seq_correct)
}
