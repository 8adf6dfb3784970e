use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::MorphoError;

/// Broad phonological class of a symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymbolClass {
    Consonant,
    Vowel,
}

/// One phoneme. Multi-character glyphs such as `tʃ` are a single symbol.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Symbol(String);

impl Symbol {
    pub fn glyph(&self) -> &str {
        &self.0
    }

    pub(crate) fn new_unchecked(glyph: impl Into<String>) -> Self {
        Symbol(glyph.into())
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A sequence of symbols: a stem, a suffix or a full surface form.
///
/// Displays as space-separated glyphs (`ʃ u s o`).
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Form(Vec<Symbol>);

impl Form {
    pub fn new(symbols: Vec<Symbol>) -> Self {
        Form(symbols)
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Form) -> Form {
        let mut out = self.0.clone();
        out.extend_from_slice(&other.0);
        Form(out)
    }

    pub fn ends_with(&self, suffix: &Form) -> bool {
        self.0.ends_with(&suffix.0)
    }

    pub fn last(&self) -> Option<&Symbol> {
        self.0.last()
    }

    /// Replaces the final symbol; used to derive an alternant stem.
    pub fn with_last(&self, symbol: Symbol) -> Form {
        let mut out = self.0.clone();
        if let Some(last) = out.last_mut() {
            *last = symbol;
        }
        Form(out)
    }

    pub(crate) fn split_at(&self, at: usize) -> (Form, Form) {
        (Form(self.0[..at].to_vec()), Form(self.0[at..].to_vec()))
    }

    /// Glyphs joined without separators (`ʃuso`).
    pub fn compact(&self) -> String {
        self.0.iter().map(Symbol::glyph).collect()
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(s.glyph())?;
        }
        Ok(())
    }
}

/// The closed phoneme inventory. Every form used by the pipeline is spelled
/// with symbols from here.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<(Symbol, SymbolClass)>,
    index: HashMap<String, usize>,
    longest_glyph: usize,
}

impl Alphabet {
    pub fn new(entries: impl IntoIterator<Item = (String, SymbolClass)>) -> Result<Self, MorphoError> {
        let mut symbols = Vec::new();
        let mut index = HashMap::new();
        let mut longest_glyph = 0;
        for (glyph, class) in entries {
            if glyph.is_empty() || glyph.chars().any(char::is_whitespace) {
                return Err(MorphoError::Config(format!("invalid glyph {glyph:?}")));
            }
            if glyph == "#" || glyph.starts_with('<') {
                return Err(MorphoError::Config(format!(
                    "glyph {glyph:?} collides with a reserved token"
                )));
            }
            if index.contains_key(&glyph) {
                return Err(MorphoError::DuplicateSymbol(glyph));
            }
            longest_glyph = longest_glyph.max(glyph.chars().count());
            index.insert(glyph.clone(), symbols.len());
            symbols.push((Symbol(glyph), class));
        }
        if symbols.is_empty() {
            return Err(MorphoError::Config("alphabet is empty".into()));
        }
        Ok(Alphabet {
            symbols,
            index,
            longest_glyph,
        })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> impl Iterator<Item = &Symbol> {
        self.symbols.iter().map(|(s, _)| s)
    }

    pub fn class_of(&self, symbol: &Symbol) -> Option<SymbolClass> {
        self.index.get(symbol.glyph()).map(|&i| self.symbols[i].1)
    }

    pub fn of_class(&self, class: SymbolClass) -> Vec<Symbol> {
        self.symbols
            .iter()
            .filter(|(_, c)| *c == class)
            .map(|(s, _)| s.clone())
            .collect()
    }

    pub fn symbol(&self, glyph: &str) -> Result<Symbol, MorphoError> {
        self.index
            .get(glyph)
            .map(|&i| self.symbols[i].0.clone())
            .ok_or_else(|| MorphoError::UnknownSymbol(glyph.to_string()))
    }

    pub fn contains(&self, symbol: &Symbol) -> bool {
        self.index.contains_key(symbol.glyph())
    }

    /// Parses a form. Whitespace-separated input is read glyph by glyph;
    /// unspaced input is segmented by greedy longest match against the
    /// inventory, so `tʃa` becomes `tʃ a`.
    pub fn parse_form(&self, text: &str) -> Result<Form, MorphoError> {
        let text = text.trim();
        if text.is_empty() {
            return Err(MorphoError::EmptyForm);
        }
        if text.contains(char::is_whitespace) {
            return text
                .split_whitespace()
                .map(|g| self.symbol(g))
                .collect::<Result<Vec<_>, _>>()
                .map(Form);
        }
        self.segment(text).map(Form)
    }

    fn segment(&self, text: &str) -> Result<Vec<Symbol>, MorphoError> {
        let chars: Vec<char> = text.chars().collect();
        let mut out = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let max = self.longest_glyph.min(chars.len() - i);
            let found = (1..=max).rev().find_map(|len| {
                let candidate: String = chars[i..i + len].iter().collect();
                self.index
                    .get(&candidate)
                    .map(|&idx| (len, self.symbols[idx].0.clone()))
            });
            match found {
                Some((len, sym)) => {
                    out.push(sym);
                    i += len;
                }
                None => return Err(MorphoError::UnknownSymbol(chars[i].to_string())),
            }
        }
        Ok(out)
    }

    pub fn validate(&self, form: &Form) -> Result<(), MorphoError> {
        if form.is_empty() {
            return Err(MorphoError::EmptyForm);
        }
        match form.symbols().iter().find(|s| !self.contains(s)) {
            Some(s) => Err(MorphoError::UnknownSymbol(s.glyph().to_string())),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alphabet() -> Alphabet {
        Alphabet::new(
            [
                ("t", SymbolClass::Consonant),
                ("tʃ", SymbolClass::Consonant),
                ("ʃ", SymbolClass::Consonant),
                ("s", SymbolClass::Consonant),
                ("a", SymbolClass::Vowel),
                ("u", SymbolClass::Vowel),
            ]
            .map(|(g, c)| (g.to_string(), c)),
        )
        .unwrap()
    }

    #[test]
    fn greedy_segmentation_prefers_multichar_glyphs() {
        let a = alphabet();
        assert_eq!(a.parse_form("tʃa").unwrap().to_string(), "tʃ a");
        assert_eq!(a.parse_form("ta").unwrap().to_string(), "t a");
        assert_eq!(a.parse_form("t ʃ a").unwrap().len(), 3);
    }

    #[test]
    fn unknown_and_empty_inputs_error() {
        let a = alphabet();
        assert!(matches!(a.parse_form("xa"), Err(MorphoError::UnknownSymbol(g)) if g == "x"));
        assert!(matches!(a.parse_form("  "), Err(MorphoError::EmptyForm)));
    }

    #[test]
    fn duplicate_glyph_rejected() {
        let err = Alphabet::new(vec![
            ("a".to_string(), SymbolClass::Vowel),
            ("a".to_string(), SymbolClass::Consonant),
        ])
        .unwrap_err();
        assert!(matches!(err, MorphoError::DuplicateSymbol(_)));
    }
}
