use std::fmt;

use serde::{Deserialize, Serialize};

use super::{CellTag, Form, MorphoError, SuffixTable};

/// Whether a verb alternates its stem in the L-shaped cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ShapeClass {
    L,
    NL,
}

impl fmt::Display for ShapeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShapeClass::L => "L",
            ShapeClass::NL => "NL",
        })
    }
}

/// A verb's inflection table. Cells are kept in the order of the cell set
/// they were built from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paradigm {
    pub lemma_id: String,
    pub shape_class: ShapeClass,
    pub base_stem: Form,
    pub alternant_stem: Option<Form>,
    cells: Vec<(CellTag, Form)>,
}

impl Paradigm {
    pub fn cells(&self) -> &[(CellTag, Form)] {
        &self.cells
    }

    pub fn cell_tags(&self) -> Vec<CellTag> {
        self.cells.iter().map(|(t, _)| *t).collect()
    }

    pub fn form(&self, cell: &CellTag) -> Option<&Form> {
        self.cells.iter().find(|(t, _)| t == cell).map(|(_, f)| f)
    }

    /// The stem used in `cell`.
    pub fn stem_for(&self, cell: &CellTag) -> &Form {
        match (&self.alternant_stem, cell.is_l_cell()) {
            (Some(alt), true) => alt,
            _ => &self.base_stem,
        }
    }

    /// Both stems (one for NL verbs).
    pub fn stems(&self) -> impl Iterator<Item = &Form> {
        std::iter::once(&self.base_stem).chain(self.alternant_stem.iter())
    }
}

/// Builds a paradigm over `cells`: L verbs take the alternant stem in the
/// 1SG indicative and all subjunctive cells, the base stem elsewhere; NL
/// verbs take the base stem everywhere.
pub fn build_paradigm(
    lemma_id: impl Into<String>,
    base_stem: Form,
    alternant_stem: Option<Form>,
    shape_class: ShapeClass,
    table: &SuffixTable,
    cells: &[CellTag],
) -> Result<Paradigm, MorphoError> {
    if base_stem.is_empty() || alternant_stem.as_ref().is_some_and(Form::is_empty) {
        return Err(MorphoError::EmptyForm);
    }
    match (shape_class, &alternant_stem) {
        (ShapeClass::L, None) => return Err(MorphoError::MissingAlternant),
        (ShapeClass::NL, Some(_)) => return Err(MorphoError::UnexpectedAlternant),
        _ => {}
    }
    let mut paradigm = Paradigm {
        lemma_id: lemma_id.into(),
        shape_class,
        base_stem,
        alternant_stem,
        cells: Vec::with_capacity(cells.len()),
    };
    for cell in cells {
        let surface = paradigm.stem_for(cell).concat(table.primary(cell)?);
        paradigm.cells.push((*cell, surface));
    }
    Ok(paradigm)
}

#[cfg(test)]
mod tests {
    use super::super::{strip_suffix, Morphology};
    use super::*;

    #[test]
    fn decir_analog_follows_the_l_pattern() {
        let m = Morphology::default();
        let p = build_paradigm(
            "decir",
            m.alphabet.parse_form("d i s").unwrap(),
            Some(m.alphabet.parse_form("d i g").unwrap()),
            ShapeClass::L,
            &m.suffixes,
            &m.cells,
        )
        .unwrap();
        assert_eq!(p.form(&CellTag::IND_1SG).unwrap().to_string(), "d i g o");
        assert_eq!(p.form(&CellTag::IND_2SG).unwrap().to_string(), "d i s e s");
        assert_eq!(p.form(&CellTag::SBJV_2SG).unwrap().to_string(), "d i g a s");
    }

    #[test]
    fn nl_paradigm_keeps_one_stem() {
        let m = Morphology::default();
        let stem = m.alphabet.parse_form("n a f").unwrap();
        let p = build_paradigm("naf", stem.clone(), None, ShapeClass::NL, &m.suffixes, &m.cells).unwrap();
        assert_eq!(p.cells().len(), 6);
        for (cell, form) in p.cells() {
            let (s, _) = strip_suffix(form, cell, &m.suffixes).unwrap();
            assert_eq!(s, stem);
        }
    }

    #[test]
    fn alternant_presence_must_match_class() {
        let m = Morphology::default();
        let stem = m.alphabet.parse_form("n a f").unwrap();
        assert!(matches!(
            build_paradigm("x", stem.clone(), None, ShapeClass::L, &m.suffixes, &m.cells),
            Err(MorphoError::MissingAlternant)
        ));
        assert!(matches!(
            build_paradigm("x", stem.clone(), Some(stem), ShapeClass::NL, &m.suffixes, &m.cells),
            Err(MorphoError::UnexpectedAlternant)
        ));
    }
}
