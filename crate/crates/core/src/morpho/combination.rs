use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Alphabet, CellTag, Form, MorphoError, Symbol};

/// Separator token between the fields of an encoded combination.
pub const SEPARATOR: &str = "#";

/// One source cell shown to the model: a surface form and its tag.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Source {
    pub form: Form,
    pub tag: CellTag,
}

/// Two filled cells plus a target tag, with the gold target form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Combination {
    pub lemma_id: String,
    pub src1: Source,
    pub src2: Source,
    pub target_tag: CellTag,
    pub gold: Form,
}

impl Combination {
    pub fn new(
        lemma_id: impl Into<String>,
        src1: (Form, CellTag),
        src2: (Form, CellTag),
        target_tag: CellTag,
        gold: Form,
    ) -> Result<Self, MorphoError> {
        if src1.1 == src2.1 || src1.1 == target_tag || src2.1 == target_tag {
            return Err(MorphoError::DuplicateTags);
        }
        Ok(Combination {
            lemma_id: lemma_id.into(),
            src1: Source {
                form: src1.0,
                tag: src1.1,
            },
            src2: Source {
                form: src2.0,
                tag: src2.1,
            },
            target_tag,
            gold,
        })
    }
}

/// A model-level token.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Token {
    Sym(Symbol),
    Tag(CellTag),
    Sep,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Sym(s) => write!(f, "{s}"),
            Token::Tag(t) => write!(f, "{t}"),
            Token::Sep => f.write_str(SEPARATOR),
        }
    }
}

impl Token {
    pub fn parse(text: &str, alphabet: &Alphabet) -> Result<Token, MorphoError> {
        if text == SEPARATOR {
            Ok(Token::Sep)
        } else if text.starts_with('<') {
            text.parse().map(Token::Tag)
        } else {
            alphabet.symbol(text).map(Token::Sym)
        }
    }
}

/// The input fields recovered from an encoded token sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedInput {
    pub src1: Source,
    pub src2: Source,
    pub target_tag: CellTag,
}

/// `src1 phonemes, src1 tag, #, src2 phonemes, src2 tag, #, target tag`.
pub fn encode_combination(c: &Combination, alphabet: &Alphabet) -> Result<Vec<Token>, MorphoError> {
    alphabet.validate(&c.src1.form)?;
    alphabet.validate(&c.src2.form)?;
    let mut out = Vec::with_capacity(c.src1.form.len() + c.src2.form.len() + 5);
    for src in [&c.src1, &c.src2] {
        out.extend(src.form.symbols().iter().cloned().map(Token::Sym));
        out.push(Token::Tag(src.tag));
        out.push(Token::Sep);
    }
    out.push(Token::Tag(c.target_tag));
    Ok(out)
}

/// Target side: the gold form's symbols.
pub fn encode_target(c: &Combination, alphabet: &Alphabet) -> Result<Vec<Token>, MorphoError> {
    alphabet.validate(&c.gold)?;
    Ok(c.gold.symbols().iter().cloned().map(Token::Sym).collect())
}

pub fn decode_tokens(tokens: &[Token]) -> Result<DecodedInput, MorphoError> {
    let malformed = |why: &str| MorphoError::Malformed(why.to_string());
    let mut fields = tokens.split(|t| *t == Token::Sep);
    let mut source = |name: &str| -> Result<Source, MorphoError> {
        let field = fields.next().ok_or_else(|| malformed(name))?;
        let (tag, symbols) = field.split_last().ok_or_else(|| malformed(name))?;
        let Token::Tag(tag) = tag else {
            return Err(malformed(&format!("{name} must end in a tag")));
        };
        let symbols = symbols
            .iter()
            .map(|t| match t {
                Token::Sym(s) => Ok(s.clone()),
                _ => Err(malformed(&format!("{name} form contains a non-symbol"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        if symbols.is_empty() {
            return Err(MorphoError::EmptyForm);
        }
        Ok(Source {
            form: Form::new(symbols),
            tag: *tag,
        })
    };
    let src1 = source("first source")?;
    let src2 = source("second source")?;
    let target_tag = match fields.next() {
        Some([Token::Tag(t)]) => *t,
        _ => return Err(malformed("target must be a single tag")),
    };
    if fields.next().is_some() {
        return Err(malformed("trailing fields"));
    }
    Ok(DecodedInput { src1, src2, target_tag })
}

pub fn tokens_to_string(tokens: &[Token]) -> String {
    tokens.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

pub fn parse_tokens(text: &str, alphabet: &Alphabet) -> Result<Vec<Token>, MorphoError> {
    text.split_whitespace().map(|t| Token::parse(t, alphabet)).collect()
}

#[cfg(test)]
mod tests {
    use super::super::Morphology;
    use super::*;

    #[test]
    fn figure_one_combination_encodes_literally() {
        let m = Morphology::default();
        let c = Combination::new(
            "shus",
            (m.alphabet.parse_form("ʃutes").unwrap(), CellTag::IND_2SG),
            (m.alphabet.parse_form("ʃuso").unwrap(), CellTag::IND_1SG),
            CellTag::SBJV_2SG,
            m.alphabet.parse_form("ʃusas").unwrap(),
        )
        .unwrap();
        let tokens = encode_combination(&c, &m.alphabet).unwrap();
        assert_eq!(
            tokens_to_string(&tokens),
            "ʃ u t e s <V;IND;PRS;2;SG> # ʃ u s o <V;IND;PRS;1;SG> # <V;SBJV;PRS;2;SG>"
        );
        let back = decode_tokens(&tokens).unwrap();
        assert_eq!(back.src1, c.src1);
        assert_eq!(back.src2, c.src2);
        assert_eq!(back.target_tag, c.target_tag);
        assert_eq!(parse_tokens(&tokens_to_string(&tokens), &m.alphabet).unwrap(), tokens);
    }

    #[test]
    fn empty_source_is_rejected() {
        let m = Morphology::default();
        let c = Combination::new(
            "x",
            (Form::default(), CellTag::IND_2SG),
            (m.alphabet.parse_form("ʃuso").unwrap(), CellTag::IND_1SG),
            CellTag::SBJV_2SG,
            m.alphabet.parse_form("ʃusas").unwrap(),
        )
        .unwrap();
        assert!(matches!(
            encode_combination(&c, &m.alphabet),
            Err(MorphoError::EmptyForm)
        ));
    }

    #[test]
    fn foreign_glyph_is_rejected() {
        let m = Morphology::default();
        let bad = Form::new(vec![Symbol::new_unchecked("ʒ"), Symbol::new_unchecked("a")]);
        let c = Combination::new(
            "x",
            (bad, CellTag::IND_2SG),
            (m.alphabet.parse_form("ʃuso").unwrap(), CellTag::IND_1SG),
            CellTag::SBJV_2SG,
            m.alphabet.parse_form("ʃusas").unwrap(),
        )
        .unwrap();
        assert!(matches!(encode_combination(&c, &m.alphabet), Err(MorphoError::UnknownSymbol(g)) if g == "ʒ"));
    }

    #[test]
    fn repeated_tags_are_rejected() {
        let m = Morphology::default();
        let f = m.alphabet.parse_form("ʃuso").unwrap();
        assert!(Combination::new(
            "x",
            (f.clone(), CellTag::IND_1SG),
            (f.clone(), CellTag::IND_1SG),
            CellTag::SBJV_2SG,
            f
        )
        .is_err());
    }
}
