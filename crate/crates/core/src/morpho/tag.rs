use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::MorphoError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mood {
    Ind,
    Sbjv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Number {
    Sg,
    Pl,
}

/// A present-tense verb cell, serialized as `<V;MOOD;PRS;P;NUM>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellTag {
    pub mood: Mood,
    pub person: u8,
    pub number: Number,
}

impl CellTag {
    pub const fn new(mood: Mood, person: u8, number: Number) -> Self {
        CellTag { mood, person, number }
    }

    pub const IND_1SG: CellTag = CellTag::new(Mood::Ind, 1, Number::Sg);
    pub const IND_2SG: CellTag = CellTag::new(Mood::Ind, 2, Number::Sg);
    pub const IND_3SG: CellTag = CellTag::new(Mood::Ind, 3, Number::Sg);
    pub const SBJV_1SG: CellTag = CellTag::new(Mood::Sbjv, 1, Number::Sg);
    pub const SBJV_2SG: CellTag = CellTag::new(Mood::Sbjv, 2, Number::Sg);
    pub const SBJV_3SG: CellTag = CellTag::new(Mood::Sbjv, 3, Number::Sg);

    /// The six singular present cells, indicative first.
    pub fn six_cell() -> Vec<CellTag> {
        vec![
            Self::IND_1SG,
            Self::IND_2SG,
            Self::IND_3SG,
            Self::SBJV_1SG,
            Self::SBJV_2SG,
            Self::SBJV_3SG,
        ]
    }

    /// All twelve present cells.
    pub fn twelve_cell() -> Vec<CellTag> {
        let mut out = Vec::with_capacity(12);
        for mood in [Mood::Ind, Mood::Sbjv] {
            for number in [Number::Sg, Number::Pl] {
                for person in 1..=3 {
                    out.push(CellTag::new(mood, person, number));
                }
            }
        }
        out
    }

    /// Whether an L-class verb uses its alternant stem in this cell:
    /// 1SG indicative and every subjunctive cell.
    pub fn is_l_cell(&self) -> bool {
        self.mood == Mood::Sbjv || (self.person == 1 && self.number == Number::Sg)
    }

    /// Short label such as `2SG.SBJV`.
    pub fn short(&self) -> String {
        let mood = match self.mood {
            Mood::Ind => "IND",
            Mood::Sbjv => "SBJV",
        };
        let num = match self.number {
            Number::Sg => "SG",
            Number::Pl => "PL",
        };
        format!("{}{}.{}", self.person, num, mood)
    }
}

impl fmt::Display for CellTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mood = match self.mood {
            Mood::Ind => "IND",
            Mood::Sbjv => "SBJV",
        };
        let num = match self.number {
            Number::Sg => "SG",
            Number::Pl => "PL",
        };
        write!(f, "<V;{mood};PRS;{};{num}>", self.person)
    }
}

impl FromStr for CellTag {
    type Err = MorphoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || MorphoError::InvalidTag(s.to_string());
        let inner = s.strip_prefix('<').and_then(|r| r.strip_suffix('>')).ok_or_else(bad)?;
        let parts: Vec<&str> = inner.split(';').collect();
        let [pos, mood, tense, person, number] = parts.as_slice() else {
            return Err(bad());
        };
        if *pos != "V" || *tense != "PRS" {
            return Err(bad());
        }
        let mood = match *mood {
            "IND" => Mood::Ind,
            "SBJV" => Mood::Sbjv,
            _ => return Err(bad()),
        };
        let person = match *person {
            "1" => 1,
            "2" => 2,
            "3" => 3,
            _ => return Err(bad()),
        };
        let number = match *number {
            "SG" => Number::Sg,
            "PL" => Number::Pl,
            _ => return Err(bad()),
        };
        Ok(CellTag::new(mood, person, number))
    }
}

impl Serialize for CellTag {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CellTag {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serialization_is_bit_exact() {
        assert_eq!(CellTag::IND_1SG.to_string(), "<V;IND;PRS;1;SG>");
        assert_eq!(CellTag::SBJV_2SG.to_string(), "<V;SBJV;PRS;2;SG>");
        for tag in CellTag::twelve_cell() {
            assert_eq!(tag.to_string().parse::<CellTag>().unwrap(), tag);
        }
    }

    #[test]
    fn malformed_tags_rejected() {
        for s in [
            "<V;IND;PST;1;SG>",
            "V;IND;PRS;1;SG",
            "<V;IND;PRS;4;SG>",
            "<N;IND;PRS;1;SG>",
        ] {
            assert!(s.parse::<CellTag>().is_err(), "{s}");
        }
    }

    #[test]
    fn l_cells_follow_the_l_shape() {
        let l: Vec<_> = CellTag::six_cell().into_iter().filter(CellTag::is_l_cell).collect();
        assert_eq!(
            l,
            vec![
                CellTag::IND_1SG,
                CellTag::SBJV_1SG,
                CellTag::SBJV_2SG,
                CellTag::SBJV_3SG
            ]
        );
    }
}
