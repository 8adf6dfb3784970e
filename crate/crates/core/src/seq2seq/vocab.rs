use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::Seq2SeqError;
use crate::morpho::{Morphology, Token, SEPARATOR};

pub const PAD: u32 = 0;
pub const BOS: u32 = 1;
pub const EOS: u32 = 2;
const SPECIALS: [&str; 3] = ["<pad>", "<s>", "</s>"];

/// Token string ↔ id map. Ids 0, 1, 2 are PAD, BOS and EOS.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocab {
    /// Specials followed by `tokens` in order.
    pub fn new<I, S>(tokens: I) -> Result<Self, Seq2SeqError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let all: Vec<String> = SPECIALS
            .iter()
            .map(|s| s.to_string())
            .chain(tokens.into_iter().map(Into::into))
            .collect();
        Self::try_from(all)
    }

    /// Alphabet symbols, then cell tags, then the separator.
    pub fn from_morphology(m: &Morphology) -> Self {
        let syms = m.alphabet.symbols().map(|s| s.glyph().to_string());
        let tags = m.cells.iter().map(ToString::to_string);
        Self::new(syms.chain(tags).chain([SEPARATOR.to_string()])).expect("morphology tokens are distinct")
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Result<u32, Seq2SeqError> {
        self.index
            .get(token)
            .copied()
            .ok_or_else(|| Seq2SeqError::UnknownToken(token.to_string()))
    }

    pub fn token(&self, id: u32) -> Result<&str, Seq2SeqError> {
        self.tokens
            .get(id as usize)
            .map(String::as_str)
            .ok_or_else(|| Seq2SeqError::UnknownToken(format!("#{id}")))
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn encode(&self, tokens: &[Token]) -> Result<Vec<u32>, Seq2SeqError> {
        tokens.iter().map(|t| self.id(&t.to_string())).collect()
    }

    /// Ids back to token strings; specials are rejected.
    pub fn decode(&self, ids: &[u32]) -> Result<Vec<&str>, Seq2SeqError> {
        ids.iter()
            .map(|&i| {
                if i <= EOS {
                    Err(Seq2SeqError::UnknownToken(format!("special #{i} inside a sequence")))
                } else {
                    self.token(i)
                }
            })
            .collect()
    }

    pub fn check_ids(&self, ids: &[u32]) -> Result<(), Seq2SeqError> {
        match ids.iter().find(|&&i| i as usize >= self.tokens.len()) {
            Some(i) => Err(Seq2SeqError::UnknownToken(format!("#{i}"))),
            None => Ok(()),
        }
    }
}

impl TryFrom<Vec<String>> for Vocab {
    type Error = Seq2SeqError;

    fn try_from(tokens: Vec<String>) -> Result<Self, Self::Error> {
        if tokens.len() < SPECIALS.len() || tokens[..3].iter().zip(SPECIALS).any(|(a, b)| a != b) {
            return Err(Seq2SeqError::Config(
                "vocabulary must start with <pad>, <s>, </s>".into(),
            ));
        }
        let mut index = HashMap::new();
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i as u32).is_some() {
                return Err(Seq2SeqError::Config(format!("duplicate vocabulary token {t:?}")));
            }
        }
        Ok(Vocab { tokens, index })
    }
}

impl From<Vocab> for Vec<String> {
    fn from(v: Vocab) -> Self {
        v.tokens
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::morpho::parse_tokens;

    #[test]
    fn morphology_vocab_round_trips_tokens() {
        let m = Morphology::default();
        let v = Vocab::from_morphology(&m);
        assert_eq!(v.len(), 3 + m.alphabet.len() + m.cells.len() + 1);
        let toks = parse_tokens("ʃ u t e s <V;IND;PRS;2;SG> #", &m.alphabet).unwrap();
        let ids = v.encode(&toks).unwrap();
        assert!(ids.iter().all(|&i| i > EOS));
        let back = v.decode(&ids).unwrap().join(" ");
        assert_eq!(back, "ʃ u t e s <V;IND;PRS;2;SG> #");
    }

    #[test]
    fn unknown_and_special_ids_rejected() {
        let v = Vocab::new(["a", "b"]).unwrap();
        assert!(matches!(v.id("z"), Err(Seq2SeqError::UnknownToken(_))));
        assert!(v.decode(&[EOS]).is_err());
        assert!(v.check_ids(&[5]).is_err());
        assert!(Vocab::new(["a", "a"]).is_err());
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(serde_json::from_str::<Vocab>(&json).unwrap(), v);
    }
}
