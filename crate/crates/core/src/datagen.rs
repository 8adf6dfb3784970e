//! Nonce lexicon generation under L/NL type-frequency conditions and
//! enumeration of reinflection combinations.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::eval::{EvalError, ProbeGroup, TestItem};
use crate::morpho::{
    build_paradigm, encode_combination, encode_target, parse_tokens, tokens_to_string, CellTag, Combination, Form,
    MorphoError, Morphology, Paradigm, ShapeClass, SymbolClass, Token,
};

#[derive(Debug, Error)]
pub enum DatagenError {
    #[error("need at least 2 verbs, got {0}")]
    TooFewVerbs(usize),
    #[error("could not find a fresh stem after {0} attempts")]
    ExhaustedNamespace(usize),
    #[error("test stem {stem} of item {item} also occurs in the training lexicon")]
    Overlap { item: String, stem: String },
    #[error("invalid lexicon spec: {0}")]
    Spec(String),
    #[error("invalid frequency condition: {0}")]
    Condition(String),
    #[error("malformed TSV line {line}: {why}")]
    Tsv { line: usize, why: String },
    #[error(transparent)]
    Morpho(#[from] MorphoError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Share of L-class verbs in a generated lexicon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyCondition {
    pub label: String,
    pub l_fraction: f64,
}

impl FrequencyCondition {
    pub fn l10_nl90() -> Self {
        FrequencyCondition {
            label: "10L-90NL".into(),
            l_fraction: 0.10,
        }
    }

    pub fn l50_nl50() -> Self {
        FrequencyCondition {
            label: "50L-50NL".into(),
            l_fraction: 0.50,
        }
    }

    pub fn l90_nl10() -> Self {
        FrequencyCondition {
            label: "90L-10NL".into(),
            l_fraction: 0.90,
        }
    }

    pub fn standard() -> Vec<Self> {
        vec![Self::l10_nl90(), Self::l50_nl50(), Self::l90_nl10()]
    }

    /// A counterfactual share, labelled `<pct>L-<pct>NL`.
    pub fn custom(l_fraction: f64) -> Result<Self, DatagenError> {
        if !(l_fraction > 0.0 && l_fraction < 1.0) {
            return Err(DatagenError::Condition(format!(
                "L fraction {l_fraction} outside (0, 1)"
            )));
        }
        let l = (l_fraction * 100.0).round();
        Ok(FrequencyCondition {
            label: format!("{l}L-{}NL", 100.0 - l),
            l_fraction,
        })
    }

    /// Accepts the standard labels (`10L-90NL`, ...) or a bare fraction.
    pub fn parse(text: &str) -> Result<Self, DatagenError> {
        if let Some(c) = Self::standard().into_iter().find(|c| c.label == text) {
            return Ok(c);
        }
        text.parse::<f64>()
            .map_err(|_| DatagenError::Condition(format!("unrecognized condition {text:?}")))
            .and_then(Self::custom)
    }

    /// Number of L-class verbs in an `n`-verb lexicon.
    pub fn l_count(&self, n: usize) -> usize {
        (self.l_fraction * n as f64).round() as usize
    }
}

/// How stems are generated.
///
/// Templates are strings over `O` (onset: a consonant or a cluster from
/// `onset_clusters`), `C` (consonant), `V` (vowel) and a final `F`
/// (stem-final consonant). For L verbs the final consonant is the first
/// member of a sampled alternation pair and the alternant stem swaps in the
/// second member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LexiconSpec {
    pub n_verbs: usize,
    pub alternation_pairs: Vec<(String, String)>,
    pub templates: Vec<String>,
    pub onset_clusters: Vec<String>,
    /// Finals available to NL verbs; empty means every consonant.
    pub nl_finals: Vec<String>,
    pub rng_seed: u64,
}

impl Default for LexiconSpec {
    fn default() -> Self {
        let pairs = [
            ("d", "θ"),
            ("g", "ʝ"),
            ("n", "ɲ"),
            ("l", "ʎ"),
            ("ɾ", "d"),
            ("m", "b"),
            ("tʃ", "ʃ"),
            ("k", "θ"),
            ("b", "ʎ"),
            ("t", "tʃ"),
        ];
        LexiconSpec {
            n_verbs: 658,
            alternation_pairs: pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
            templates: vec!["OVF".into(), "CVCVF".into(), "OVCVF".into(), "CVCVCVF".into()],
            onset_clusters: ["pɾ", "bɾ", "tɾ", "dɾ", "kɾ", "gɾ", "fɾ", "pl", "bl", "kl", "gl", "fl"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            nl_finals: Vec::new(),
            rng_seed: 0,
        }
    }
}

enum Slot {
    Onset,
    Consonant,
    Vowel,
    Final,
}

struct Grammar {
    templates: Vec<Vec<Slot>>,
    onsets: Vec<Form>,
    consonants: Vec<Form>,
    vowels: Vec<Form>,
    nl_finals: Vec<Form>,
    pairs: Vec<(Form, Form)>,
}

impl Grammar {
    fn new(spec: &LexiconSpec, m: &Morphology) -> Result<Self, DatagenError> {
        let a = &m.alphabet;
        let single = |g: &str, what: &str| -> Result<Form, DatagenError> {
            let sym = a.symbol(g)?;
            if a.class_of(&sym) != Some(SymbolClass::Consonant) {
                return Err(DatagenError::Spec(format!("{what} {g:?} is not a consonant")));
            }
            Ok(Form::new(vec![sym]))
        };
        let mut pairs = Vec::new();
        for (x, y) in &spec.alternation_pairs {
            if x == y {
                return Err(DatagenError::Spec(format!("alternation pair {x}~{y} is not a change")));
            }
            let p = (single(x, "alternation member")?, single(y, "alternation member")?);
            if pairs.contains(&p) {
                return Err(DatagenError::Spec(format!("duplicate alternation pair {x}~{y}")));
            }
            pairs.push(p);
        }
        if pairs.is_empty() {
            return Err(DatagenError::Spec("no alternation pairs".into()));
        }
        let consonants: Vec<Form> = a
            .of_class(SymbolClass::Consonant)
            .into_iter()
            .map(|s| Form::new(vec![s]))
            .collect();
        let vowels: Vec<Form> = a
            .of_class(SymbolClass::Vowel)
            .into_iter()
            .map(|s| Form::new(vec![s]))
            .collect();
        if consonants.is_empty() || vowels.is_empty() {
            return Err(DatagenError::Spec("alphabet needs consonants and vowels".into()));
        }
        let mut onsets = consonants.clone();
        for c in &spec.onset_clusters {
            onsets.push(a.parse_form(c)?);
        }
        let nl_finals = if spec.nl_finals.is_empty() {
            consonants.clone()
        } else {
            spec.nl_finals
                .iter()
                .map(|g| single(g, "NL final"))
                .collect::<Result<_, _>>()?
        };
        let mut templates = Vec::new();
        for t in &spec.templates {
            let slots = t
                .chars()
                .map(|c| match c {
                    'O' => Ok(Slot::Onset),
                    'C' => Ok(Slot::Consonant),
                    'V' => Ok(Slot::Vowel),
                    'F' => Ok(Slot::Final),
                    _ => Err(DatagenError::Spec(format!("template {t:?}: unknown slot {c:?}"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            let finals = slots.iter().filter(|s| matches!(s, Slot::Final)).count();
            if finals != 1 || !matches!(slots.last(), Some(Slot::Final)) {
                return Err(DatagenError::Spec(format!("template {t:?} must end in a single F")));
            }
            templates.push(slots);
        }
        if templates.is_empty() {
            return Err(DatagenError::Spec("no templates".into()));
        }
        Ok(Grammar {
            templates,
            onsets,
            consonants,
            vowels,
            nl_finals,
            pairs,
        })
    }

    /// A stem body without its final consonant.
    fn body(&self, rng: &mut ChaCha8Rng) -> Form {
        let template = &self.templates[rng.gen_range(0..self.templates.len())];
        let mut out = Form::default();
        for slot in template {
            let pool = match slot {
                Slot::Onset => &self.onsets,
                Slot::Consonant => &self.consonants,
                Slot::Vowel => &self.vowels,
                Slot::Final => continue,
            };
            out = out.concat(&pool[rng.gen_range(0..pool.len())]);
        }
        out
    }
}

const ATTEMPTS_PER_VERB: usize = 2_000;

/// Generates `spec.n_verbs` paradigms, `cond.l_count(n)` of them L-class.
/// Stems never collide with each other or with `reserved` (typically the
/// test items' stems). Output depends only on the arguments.
pub fn generate_lexicon(
    spec: &LexiconSpec,
    cond: &FrequencyCondition,
    morphology: &Morphology,
    reserved: &HashSet<Form>,
) -> Result<Vec<Paradigm>, DatagenError> {
    if spec.n_verbs < 2 {
        return Err(DatagenError::TooFewVerbs(spec.n_verbs));
    }
    let grammar = Grammar::new(spec, morphology)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let n_l = cond.l_count(spec.n_verbs);
    let mut is_l: Vec<bool> = (0..spec.n_verbs).map(|i| i < n_l).collect();
    is_l.shuffle(&mut rng);

    let mut used: HashSet<Form> = reserved.clone();
    let mut lexicon = Vec::with_capacity(spec.n_verbs);
    for (i, &l) in is_l.iter().enumerate() {
        let mut attempt = 0;
        let (base, alternant) = loop {
            attempt += 1;
            if attempt > ATTEMPTS_PER_VERB {
                return Err(DatagenError::ExhaustedNamespace(ATTEMPTS_PER_VERB));
            }
            let body = grammar.body(&mut rng);
            if l {
                let (x, y) = &grammar.pairs[rng.gen_range(0..grammar.pairs.len())];
                let base = body.concat(x);
                let alt = body.concat(y);
                if !used.contains(&base) && !used.contains(&alt) {
                    break (base, Some(alt));
                }
            } else {
                let fin = &grammar.nl_finals[rng.gen_range(0..grammar.nl_finals.len())];
                let base = body.concat(fin);
                if !used.contains(&base) {
                    break (base, None);
                }
            }
        };
        used.insert(base.clone());
        if let Some(a) = &alternant {
            used.insert(a.clone());
        }
        let shape = if l { ShapeClass::L } else { ShapeClass::NL };
        lexicon.push(build_paradigm(
            format!("v{i:04}"),
            base,
            alternant,
            shape,
            &morphology.suffixes,
            &morphology.cells,
        )?);
    }
    Ok(lexicon)
}

/// All combinations of a paradigm: for every target cell, every unordered
/// pair of the remaining cells as sources (in cell order), plus the reversed
/// order when `ordered_pairs` is set. k cells give k·C(k−1, 2) combinations
/// (twice that when ordered).
pub fn enumerate_combinations(p: &Paradigm, ordered_pairs: bool) -> Vec<Combination> {
    let cells = p.cells();
    let k = cells.len();
    let mut out = Vec::new();
    for (t, (target, gold)) in cells.iter().enumerate() {
        let rest: Vec<usize> = (0..k).filter(|&i| i != t).collect();
        for (ai, &a) in rest.iter().enumerate() {
            for &b in &rest[ai + 1..] {
                let orders: &[(usize, usize)] = if ordered_pairs { &[(a, b), (b, a)] } else { &[(a, b)] };
                for &(x, y) in orders {
                    out.push(Combination {
                        lemma_id: p.lemma_id.clone(),
                        src1: crate::morpho::Source {
                            form: cells[x].1.clone(),
                            tag: cells[x].0,
                        },
                        src2: crate::morpho::Source {
                            form: cells[y].1.clone(),
                            tag: cells[y].0,
                        },
                        target_tag: *target,
                        gold: gold.clone(),
                    });
                }
            }
        }
    }
    out
}

/// Provenance of a generated split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub condition: String,
    pub l_fraction: f64,
    pub n_verbs: usize,
    pub n_l: usize,
    pub n_nl: usize,
    pub ordered_pairs: bool,
    pub cells: Vec<CellTag>,
    pub conjugation_class: String,
    pub n_train: usize,
    pub n_test_items: usize,
    pub n_test_combinations: usize,
    pub train_sha256: String,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct DataSplit {
    pub train: Vec<Combination>,
    pub test_items: Vec<TestItem>,
    /// Probe combinations for both groups, then every item's full paradigm.
    pub test: Vec<Combination>,
    pub manifest: Manifest,
}

/// Training set = every combination of every lexicon paradigm; test set =
/// the nonce items' probes and reconstructed paradigms.
pub fn build_split(
    lexicon: &[Paradigm],
    test_items: &[TestItem],
    cond: &FrequencyCondition,
    morphology: &Morphology,
    seed: u64,
    ordered_pairs: bool,
) -> Result<DataSplit, DatagenError> {
    let lexicon_stems: HashSet<&Form> = lexicon.iter().flat_map(Paradigm::stems).collect();
    for item in test_items {
        for stem in [&item.l_stem, &item.nl_stem] {
            if lexicon_stems.contains(stem) {
                return Err(DatagenError::Overlap {
                    item: item.item_id.clone(),
                    stem: stem.to_string(),
                });
            }
        }
    }
    let train: Vec<Combination> = lexicon
        .iter()
        .flat_map(|p| enumerate_combinations(p, ordered_pairs))
        .collect();
    let mut test = Vec::new();
    for group in ProbeGroup::ALL {
        for item in test_items {
            test.push(item.probe(group, morphology)?);
        }
    }
    for item in test_items {
        test.extend(enumerate_combinations(&item.paradigm(morphology)?, ordered_pairs));
    }
    let mut flags = Vec::new();
    if lexicon.is_empty() {
        flags.push("empty_lexicon".to_string());
    }
    let train_tsv = to_tsv_string(&train, morphology)?;
    let n_l = lexicon.iter().filter(|p| p.shape_class == ShapeClass::L).count();
    let manifest = Manifest {
        seed,
        condition: cond.label.clone(),
        l_fraction: cond.l_fraction,
        n_verbs: lexicon.len(),
        n_l,
        n_nl: lexicon.len() - n_l,
        ordered_pairs,
        cells: morphology.cells.clone(),
        conjugation_class: morphology.suffixes.conjugation_class().to_string(),
        n_train: train.len(),
        n_test_items: test_items.len(),
        n_test_combinations: test.len(),
        train_sha256: hex::encode(Sha256::digest(train_tsv.as_bytes())),
        flags,
    };
    Ok(DataSplit {
        train,
        test_items: test_items.to_vec(),
        test,
        manifest,
    })
}

/// One example as token sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenPair {
    pub input: Vec<Token>,
    pub target: Vec<Token>,
}

pub fn to_token_pair(c: &Combination, morphology: &Morphology) -> Result<TokenPair, MorphoError> {
    Ok(TokenPair {
        input: encode_combination(c, &morphology.alphabet)?,
        target: encode_target(c, &morphology.alphabet)?,
    })
}

/// `input tokens <TAB> target tokens`, one combination per line.
pub fn to_tsv_string(combos: &[Combination], morphology: &Morphology) -> Result<String, MorphoError> {
    let mut out = String::new();
    for c in combos {
        let pair = to_token_pair(c, morphology)?;
        let _ = writeln!(
            out,
            "{}\t{}",
            tokens_to_string(&pair.input),
            tokens_to_string(&pair.target)
        );
    }
    Ok(out)
}

pub fn write_tsv<W: Write>(combos: &[Combination], morphology: &Morphology, mut w: W) -> Result<(), DatagenError> {
    w.write_all(to_tsv_string(combos, morphology)?.as_bytes())?;
    Ok(())
}

pub fn read_tsv<R: BufRead>(r: R, morphology: &Morphology) -> Result<Vec<TokenPair>, DatagenError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (input, target) = line.split_once('\t').ok_or_else(|| DatagenError::Tsv {
            line: i + 1,
            why: "missing TAB".into(),
        })?;
        let bad = |e: MorphoError| DatagenError::Tsv {
            line: i + 1,
            why: e.to_string(),
        };
        out.push(TokenPair {
            input: parse_tokens(input, &morphology.alphabet).map_err(bad)?,
            target: parse_tokens(target, &morphology.alphabet).map_err(bad)?,
        });
    }
    Ok(out)
}

/// `lemma <TAB> class <TAB> base <TAB> alternant` per verb.
pub fn lexicon_to_tsv(lexicon: &[Paradigm]) -> String {
    let mut out = String::new();
    for p in lexicon {
        let alt = p.alternant_stem.as_ref().map(ToString::to_string).unwrap_or_default();
        let _ = writeln!(out, "{}\t{}\t{}\t{}", p.lemma_id, p.shape_class, p.base_stem, alt);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::Fixtures;

    fn reserved(m: &Morphology) -> (Vec<TestItem>, HashSet<Form>) {
        let items = Fixtures::default().test_items(m).unwrap();
        let set = items
            .iter()
            .flat_map(|i| [i.l_stem.clone(), i.nl_stem.clone()])
            .collect();
        (items, set)
    }

    fn spec(n: usize, seed: u64) -> LexiconSpec {
        LexiconSpec {
            n_verbs: n,
            rng_seed: seed,
            ..LexiconSpec::default()
        }
    }

    #[test]
    fn class_counts_follow_the_condition() {
        let m = Morphology::default();
        let (_, res) = reserved(&m);
        for (cond, want) in [
            (FrequencyCondition::l10_nl90(), 10),
            (FrequencyCondition::l90_nl10(), 90),
        ] {
            let lex = generate_lexicon(&spec(100, 7), &cond, &m, &res).unwrap();
            let n_l = lex.iter().filter(|p| p.shape_class == ShapeClass::L).count();
            assert_eq!((n_l, lex.len() - n_l), (want, 100 - want));
        }
    }

    #[test]
    fn same_seed_gives_identical_lexicon_bytes() {
        let m = Morphology::default();
        let (_, res) = reserved(&m);
        let cond = FrequencyCondition::l50_nl50();
        let a = lexicon_to_tsv(&generate_lexicon(&spec(120, 42), &cond, &m, &res).unwrap());
        let b = lexicon_to_tsv(&generate_lexicon(&spec(120, 42), &cond, &m, &res).unwrap());
        let c = lexicon_to_tsv(&generate_lexicon(&spec(120, 43), &cond, &m, &res).unwrap());
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn six_cells_give_sixty_and_three_cells_give_three() {
        let m = Morphology::default();
        let stem = m.alphabet.parse_form("naf").unwrap();
        let p = build_paradigm("n", stem.clone(), None, ShapeClass::NL, &m.suffixes, &m.cells).unwrap();
        assert_eq!(enumerate_combinations(&p, false).len(), 60);
        assert_eq!(enumerate_combinations(&p, true).len(), 120);
        let three = &m.cells[..3];
        let p3 = build_paradigm("n", stem, None, ShapeClass::NL, &m.suffixes, three).unwrap();
        assert_eq!(enumerate_combinations(&p3, false).len(), 3);
    }

    #[test]
    fn leaked_test_stem_is_an_overlap_error() {
        let m = Morphology::default();
        let (items, res) = reserved(&m);
        let cond = FrequencyCondition::l10_nl90();
        let mut lex = generate_lexicon(&spec(20, 1), &cond, &m, &res).unwrap();
        let leaked = build_paradigm(
            "leak",
            items[0].nl_stem.clone(),
            None,
            ShapeClass::NL,
            &m.suffixes,
            &m.cells,
        )
        .unwrap();
        lex.push(leaked);
        assert!(matches!(
            build_split(&lex, &items, &cond, &m, 1, false),
            Err(DatagenError::Overlap { .. })
        ));
    }

    #[test]
    fn empty_lexicon_is_flagged() {
        let m = Morphology::default();
        let (items, _) = reserved(&m);
        let split = build_split(&[], &items, &FrequencyCondition::l10_nl90(), &m, 0, false).unwrap();
        assert!(split.train.is_empty());
        assert_eq!(split.manifest.flags, vec!["empty_lexicon".to_string()]);
        assert_eq!(split.test.len(), 30 + 15 * 60);
    }

    #[test]
    fn tiny_lexicon_and_bad_specs_error() {
        let m = Morphology::default();
        let cond = FrequencyCondition::l10_nl90();
        assert!(matches!(
            generate_lexicon(&spec(1, 0), &cond, &m, &HashSet::new()),
            Err(DatagenError::TooFewVerbs(1))
        ));
        let mut s = spec(10, 0);
        s.alternation_pairs = vec![("a".into(), "t".into())];
        assert!(matches!(
            generate_lexicon(&s, &cond, &m, &HashSet::new()),
            Err(DatagenError::Spec(_))
        ));
        let mut s = spec(10, 0);
        s.templates = vec!["CV".into()];
        assert!(generate_lexicon(&s, &cond, &m, &HashSet::new()).is_err());
    }

    #[test]
    fn namespace_exhaustion_is_reported() {
        let m = Morphology::default();
        let mut s = spec(50, 0);
        s.templates = vec!["F".into()];
        s.nl_finals = vec!["t".into(), "k".into()];
        assert!(matches!(
            generate_lexicon(&s, &FrequencyCondition::l10_nl90(), &m, &HashSet::new()),
            Err(DatagenError::ExhaustedNamespace(_))
        ));
    }

    #[test]
    fn tsv_round_trips() {
        let m = Morphology::default();
        let (items, res) = reserved(&m);
        let cond = FrequencyCondition::l50_nl50();
        let lex = generate_lexicon(&spec(5, 3), &cond, &m, &res).unwrap();
        let split = build_split(&lex, &items, &cond, &m, 3, false).unwrap();
        let text = to_tsv_string(&split.train, &m).unwrap();
        let pairs = read_tsv(text.as_bytes(), &m).unwrap();
        assert_eq!(pairs.len(), 300);
        assert_eq!(pairs[0], to_token_pair(&split.train[0], &m).unwrap());
        assert!(read_tsv("a b c".as_bytes(), &m).is_err());
    }

    #[test]
    fn condition_parsing() {
        assert_eq!(FrequencyCondition::parse("90L-10NL").unwrap().l_fraction, 0.9);
        assert_eq!(FrequencyCondition::parse("0.3").unwrap().label, "30L-70NL");
        assert!(FrequencyCondition::parse("1.5").is_err());
        assert!(FrequencyCondition::parse("lots").is_err());
    }
}
