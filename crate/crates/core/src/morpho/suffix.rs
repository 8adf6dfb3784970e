use std::collections::BTreeMap;

use super::{CellTag, Form, MorphoError};

/// Allowed inflectional suffixes per cell, highest priority first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuffixTable {
    conjugation_class: String,
    cells: BTreeMap<CellTag, Vec<Form>>,
}

impl SuffixTable {
    pub fn new(conjugation_class: impl Into<String>, cells: BTreeMap<CellTag, Vec<Form>>) -> Result<Self, MorphoError> {
        for (tag, suffixes) in &cells {
            if suffixes.is_empty() {
                return Err(MorphoError::MissingSuffix(*tag));
            }
            for (i, a) in suffixes.iter().enumerate() {
                if a.is_empty() {
                    return Err(MorphoError::Config(format!("empty suffix for {tag}")));
                }
                for (j, b) in suffixes.iter().enumerate() {
                    if i != j && a.ends_with(b) {
                        return Err(MorphoError::AmbiguousSuffix {
                            cell: *tag,
                            longer: a.to_string(),
                            shorter: b.to_string(),
                        });
                    }
                }
            }
        }
        Ok(SuffixTable {
            conjugation_class: conjugation_class.into(),
            cells,
        })
    }

    pub fn conjugation_class(&self) -> &str {
        &self.conjugation_class
    }

    pub fn suffixes(&self, cell: &CellTag) -> Result<&[Form], MorphoError> {
        self.cells
            .get(cell)
            .map(Vec::as_slice)
            .ok_or(MorphoError::MissingSuffix(*cell))
    }

    /// The suffix used when composing a form for `cell`.
    pub fn primary(&self, cell: &CellTag) -> Result<&Form, MorphoError> {
        Ok(&self.suffixes(cell)?[0])
    }

    pub fn covers(&self, cells: &[CellTag]) -> Result<(), MorphoError> {
        match cells.iter().find(|c| !self.cells.contains_key(c)) {
            Some(c) => Err(MorphoError::MissingSuffix(*c)),
            None => Ok(()),
        }
    }

    /// Every distinct suffix in the table, longest first.
    pub fn all_suffixes(&self) -> Vec<&Form> {
        let mut all: Vec<&Form> = self.cells.values().flatten().collect();
        all.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        all.dedup();
        all
    }
}

/// Splits `form` into (stem, suffix) with the highest-priority suffix of
/// `cell` that is a proper suffix of the form; the stem is never empty.
pub fn strip_suffix(form: &Form, cell: &CellTag, table: &SuffixTable) -> Result<(Form, Form), MorphoError> {
    if form.is_empty() {
        return Err(MorphoError::EmptyForm);
    }
    table
        .suffixes(cell)?
        .iter()
        .find(|suffix| suffix.len() < form.len() && form.ends_with(suffix))
        .map(|suffix| form.split_at(form.len() - suffix.len()))
        .ok_or(MorphoError::NoMatch)
}

#[cfg(test)]
mod tests {
    use super::super::{Alphabet, SymbolClass};
    use super::*;

    fn fixture() -> (Alphabet, SuffixTable) {
        let alphabet = Alphabet::new(
            ["ʃ", "t", "s", "n"]
                .iter()
                .map(|g| (g.to_string(), SymbolClass::Consonant))
                .chain(["u", "e", "o", "a"].iter().map(|g| (g.to_string(), SymbolClass::Vowel))),
        )
        .unwrap();
        let mut cells = BTreeMap::new();
        cells.insert(CellTag::IND_1SG, vec![alphabet.parse_form("o").unwrap()]);
        cells.insert(CellTag::IND_2SG, vec![alphabet.parse_form("e s").unwrap()]);
        cells.insert(
            CellTag::IND_3SG,
            vec![alphabet.parse_form("e n").unwrap(), alphabet.parse_form("a").unwrap()],
        );
        (alphabet, SuffixTable::new("-er", cells).unwrap())
    }

    #[test]
    fn strips_figure_one_forms() {
        let (a, t) = fixture();
        let (stem, suf) = strip_suffix(&a.parse_form("ʃ u s o").unwrap(), &CellTag::IND_1SG, &t).unwrap();
        assert_eq!((stem.to_string().as_str(), suf.to_string().as_str()), ("ʃ u s", "o"));
        let (stem, suf) = strip_suffix(&a.parse_form("ʃ u t e s").unwrap(), &CellTag::IND_2SG, &t).unwrap();
        assert_eq!((stem.to_string().as_str(), suf.to_string().as_str()), ("ʃ u t", "e s"));
    }

    #[test]
    fn suffix_must_be_proper() {
        let (a, t) = fixture();
        let form = a.parse_form("o").unwrap();
        assert!(matches!(
            strip_suffix(&form, &CellTag::IND_1SG, &t),
            Err(MorphoError::NoMatch)
        ));
    }

    #[test]
    fn priority_order_breaks_ties() {
        let (a, t) = fixture();
        let (stem, _) = strip_suffix(&a.parse_form("t a").unwrap(), &CellTag::IND_3SG, &t).unwrap();
        assert_eq!(stem.to_string(), "t");
        let (stem, suf) = strip_suffix(&a.parse_form("t e n").unwrap(), &CellTag::IND_3SG, &t).unwrap();
        assert_eq!((stem.to_string().as_str(), suf.to_string().as_str()), ("t", "e n"));
    }

    #[test]
    fn nested_suffixes_in_one_cell_are_rejected() {
        let (a, _) = fixture();
        let mut cells = BTreeMap::new();
        cells.insert(
            CellTag::IND_2SG,
            vec![a.parse_form("e s").unwrap(), a.parse_form("s").unwrap()],
        );
        assert!(matches!(
            SuffixTable::new("x", cells),
            Err(MorphoError::AmbiguousSuffix { .. })
        ));
    }
}
