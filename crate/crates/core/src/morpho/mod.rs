//! Phoneme inventory, cell tags, suffix tables, paradigms and the token
//! encoding of reinflection combinations.
//!
//! Everything here is a plain value type; nothing holds interior state.

mod combination;
mod paradigm;
mod suffix;
mod symbol;
mod tag;

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

pub use combination::{
    decode_tokens, encode_combination, encode_target, parse_tokens, tokens_to_string, Combination, DecodedInput,
    Source, Token, SEPARATOR,
};
pub use paradigm::{build_paradigm, Paradigm, ShapeClass};
pub use suffix::{strip_suffix, SuffixTable};
pub use symbol::{Alphabet, Form, Symbol, SymbolClass};
pub use tag::{CellTag, Mood, Number};

#[derive(Debug, Error)]
pub enum MorphoError {
    #[error("unknown symbol {0:?}")]
    UnknownSymbol(String),
    #[error("empty form")]
    EmptyForm,
    #[error("no suffix of the cell matches")]
    NoMatch,
    #[error("L-class paradigm needs an alternant stem")]
    MissingAlternant,
    #[error("NL-class paradigm cannot have an alternant stem")]
    UnexpectedAlternant,
    #[error("invalid cell tag {0:?}")]
    InvalidTag(String),
    #[error("duplicate symbol {0:?}")]
    DuplicateSymbol(String),
    #[error("no suffix configured for {0}")]
    MissingSuffix(CellTag),
    #[error("suffix {shorter:?} is a suffix of {longer:?} in {cell}")]
    AmbiguousSuffix {
        cell: CellTag,
        longer: String,
        shorter: String,
    },
    #[error("source and target tags must be pairwise distinct")]
    DuplicateTags,
    #[error("malformed token sequence: {0}")]
    Malformed(String),
    #[error("morphology config: {0}")]
    Config(String),
}

/// Alphabet, paradigm cell set and suffix table, loaded together from one
/// TOML file (see `data/morphology.toml` for the schema).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Morphology {
    pub alphabet: Alphabet,
    pub cells: Vec<CellTag>,
    pub suffixes: SuffixTable,
}

#[derive(Deserialize)]
struct MorphologyFile {
    alphabet: AlphabetSection,
    paradigm: ParadigmSection,
    suffixes: SuffixSection,
}

#[derive(Deserialize)]
struct AlphabetSection {
    consonants: Vec<String>,
    vowels: Vec<String>,
}

#[derive(Deserialize)]
struct ParadigmSection {
    cells: Vec<CellTag>,
}

#[derive(Deserialize)]
struct SuffixSection {
    conjugation_class: String,
    cells: BTreeMap<CellTag, Vec<String>>,
}

pub const DEFAULT_MORPHOLOGY: &str = include_str!("../../data/morphology.toml");

impl Morphology {
    pub fn from_toml_str(text: &str) -> Result<Self, MorphoError> {
        let file: MorphologyFile = toml::from_str(text).map_err(|e| MorphoError::Config(e.to_string()))?;
        let alphabet = Alphabet::new(
            file.alphabet
                .consonants
                .into_iter()
                .map(|g| (g, SymbolClass::Consonant))
                .chain(file.alphabet.vowels.into_iter().map(|g| (g, SymbolClass::Vowel))),
        )?;
        let cells = file.paradigm.cells;
        if cells.len() < 3 {
            return Err(MorphoError::Config("a paradigm needs at least three cells".into()));
        }
        for (i, c) in cells.iter().enumerate() {
            if cells[..i].contains(c) {
                return Err(MorphoError::Config(format!("cell {c} listed twice")));
            }
        }
        let mut table = BTreeMap::new();
        for (tag, suffixes) in file.suffixes.cells {
            let forms = suffixes
                .iter()
                .map(|s| alphabet.parse_form(s))
                .collect::<Result<Vec<_>, _>>()?;
            table.insert(tag, forms);
        }
        let suffixes = SuffixTable::new(file.suffixes.conjugation_class, table)?;
        suffixes.covers(&cells)?;
        Ok(Morphology {
            alphabet,
            cells,
            suffixes,
        })
    }

    pub fn load(path: &Path) -> Result<Self, MorphoError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| MorphoError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Same inventory and table with a different cell set.
    pub fn with_cells(&self, cells: Vec<CellTag>) -> Result<Self, MorphoError> {
        self.suffixes.covers(&cells)?;
        Ok(Morphology { cells, ..self.clone() })
    }
}

impl Default for Morphology {
    fn default() -> Self {
        Self::from_toml_str(DEFAULT_MORPHOLOGY).expect("bundled morphology config is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_config_loads_six_cells() {
        let m = Morphology::default();
        assert_eq!(m.cells, CellTag::six_cell());
        assert_eq!(m.suffixes.conjugation_class(), "-er");
        assert!(m.alphabet.symbol("tʃ").is_ok());
        assert!(m.with_cells(CellTag::twelve_cell()).is_ok());
    }

    #[test]
    fn config_missing_a_cell_suffix_is_rejected() {
        let text = DEFAULT_MORPHOLOGY.replace("\"<V;IND;PRS;3;SG>\" = [\"e\"]\n", "");
        assert!(matches!(
            Morphology::from_toml_str(&text),
            Err(MorphoError::MissingSuffix(CellTag::IND_3SG))
        ));
    }
}
