use std::collections::HashSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{read_csv, read_file, require, write_csv, write_file, Pipeline, PipelineError, Run};
use crate::datagen::{
    build_split, enumerate_combinations, generate_lexicon, lexicon_to_tsv, read_tsv, to_token_pair, to_tsv_string,
};
use crate::eval::{classify_response, Classification, Judgement, ProbeGroup, ResponseRecord, TestItem};
use crate::gnm::{item_word, parse_lexicon, score_test_set, DEFAULT_LEXICON};
use crate::morpho::{Alphabet, CellTag, Combination, Form, Symbol};
use crate::seq2seq::{beam_decode, examples_from_pairs, greedy_decode, Checkpoint, Hypothesis, Trainer, Vocab};

pub const PROBE_CSV: &str = "responses_probe.csv";
pub const PARADIGM_CSV: &str = "responses_paradigm.csv";

/// Generates one lexicon and split per run.
pub fn cmd_gen(p: &Pipeline) -> Result<Vec<PathBuf>, PipelineError> {
    p.record_config()?;
    let reserved: HashSet<Form> = p
        .items
        .iter()
        .flat_map(|i| [i.l_stem.clone(), i.nl_stem.clone()])
        .collect();
    let mut dirs = Vec::new();
    for run in p.runs() {
        let spec = crate::datagen::LexiconSpec {
            rng_seed: run.seed,
            ..p.cfg.lexicon.clone()
        };
        let m = &p.morphology;
        let lexicon = generate_lexicon(&spec, &run.condition, m, &reserved)?;
        let split = build_split(&lexicon, &p.items, &run.condition, m, run.seed, p.cfg.ordered_pairs)?;
        let dir = p.data_dir().join(run.rel_dir());
        write_file(&dir.join("train.tsv"), to_tsv_string(&split.train, m)?.as_bytes())?;
        write_file(&dir.join("test.tsv"), to_tsv_string(&split.test, m)?.as_bytes())?;
        write_file(&dir.join("lexicon.tsv"), lexicon_to_tsv(&lexicon).as_bytes())?;
        let manifest = serde_json::to_string_pretty(&split.manifest).map_err(|e| PipelineError::Data(e.to_string()))?;
        write_file(&dir.join("manifest.json"), manifest.as_bytes())?;
        log::info!(
            "{}: {} verbs ({} L), {} training combinations, seed {}",
            run.responder_id(),
            split.manifest.n_verbs,
            split.manifest.n_l,
            split.manifest.n_train,
            run.seed
        );
        dirs.push(dir);
    }
    Ok(dirs)
}

#[derive(Serialize, Default)]
struct LogCsvRow {
    update: u64,
    epoch: u64,
    loss: f64,
    grad_norm: f64,
}

pub(crate) fn model_dir(p: &Pipeline, run: &Run) -> PathBuf {
    p.dir("models").join(run.rel_dir())
}

/// Trains one model per run. Periodic checkpoints are written without
/// optimizer state; `final.ckpt` keeps it.
pub fn cmd_train(p: &Pipeline) -> Result<Vec<PathBuf>, PipelineError> {
    p.record_config()?;
    let vocab = Vocab::from_morphology(&p.morphology);
    let runs = p.runs();
    let inputs: Vec<PathBuf> = runs
        .iter()
        .map(|r| p.data_dir().join(r.rel_dir()).join("train.tsv"))
        .collect();
    require(&inputs)?;
    let mut finals = Vec::new();
    for (run, input) in runs.iter().zip(&inputs) {
        let text = read_file(input)?;
        let pairs = read_tsv(text.as_bytes(), &p.morphology)?;
        let examples = examples_from_pairs(&pairs, &vocab)?;
        let tc = crate::seq2seq::TrainConfig {
            seed: run.seed,
            ..p.cfg.train.clone()
        };
        let dir = model_dir(p, run);
        std::fs::create_dir_all(&dir).map_err(PipelineError::io(&dir))?;
        let mut trainer = Trainer::new(p.cfg.model.clone(), tc, vocab.clone())?;
        let log = trainer.run(&examples, &mut |ck: &Checkpoint| {
            ck.clone()
                .without_optimizer()
                .save(&dir.join(format!("update_{:06}.ckpt", ck.update)))
        })?;
        let rows: Vec<LogCsvRow> = log
            .iter()
            .map(|r| LogCsvRow {
                update: r.update,
                epoch: r.epoch,
                loss: r.loss,
                grad_norm: r.grad_norm,
            })
            .collect();
        write_csv(&dir.join("train_log.csv"), &rows)?;
        let last = dir.join("final.ckpt");
        trainer.checkpoint().save(&last)?;
        log::info!(
            "{}: {} updates, final loss {:.4}",
            run.responder_id(),
            trainer.update_count(),
            log.last().map_or(f64::NAN, |r| r.loss)
        );
        finals.push(last);
    }
    Ok(finals)
}

/// CSV form of a response record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub(crate) struct ResponseRow {
    pub item_id: String,
    pub responder_id: String,
    pub condition: String,
    pub target: String,
    pub predicted: String,
    pub classification: String,
    pub stem_correct: bool,
    pub suffix_correct: bool,
    pub seq_correct: bool,
}

impl ResponseRow {
    fn from_record(r: &ResponseRecord) -> Self {
        ResponseRow {
            item_id: r.item_id.clone(),
            responder_id: r.responder_id.clone(),
            condition: r.condition.clone(),
            target: r.target.to_string(),
            predicted: r.predicted.to_string(),
            classification: r.classification.to_string(),
            stem_correct: r.stem_correct,
            suffix_correct: r.suffix_correct,
            seq_correct: r.seq_correct,
        }
    }

    pub fn to_record(&self, alphabet: &Alphabet) -> Result<ResponseRecord, PipelineError> {
        let bad = |e: String| PipelineError::Data(format!("response row {}/{}: {e}", self.responder_id, self.item_id));
        let predicted = if self.predicted.trim().is_empty() {
            Form::new(Vec::new())
        } else {
            alphabet.parse_form(&self.predicted).map_err(|e| bad(e.to_string()))?
        };
        Ok(ResponseRecord {
            item_id: self.item_id.clone(),
            responder_id: self.responder_id.clone(),
            condition: self.condition.clone(),
            target: self.target.parse::<CellTag>().map_err(|e| bad(e.to_string()))?,
            predicted,
            classification: self.classification.parse::<Classification>().map_err(bad)?,
            stem_correct: self.stem_correct,
            suffix_correct: self.suffix_correct,
            seq_correct: self.seq_correct,
        })
    }
}

pub(crate) fn read_responses(p: &Pipeline, file: &str) -> Result<Vec<ResponseRecord>, PipelineError> {
    let rows: Vec<ResponseRow> = read_csv(&p.dir("eval").join(file))?;
    rows.iter().map(|r| r.to_record(&p.morphology.alphabet)).collect()
}

/// Output ids as a form. Returns `None` when the output contains a tag or
/// separator token, which can never be a well-formed response.
fn hypothesis_form(h: &Hypothesis, vocab: &Vocab, alphabet: &Alphabet) -> Result<Option<Form>, PipelineError> {
    let mut syms: Vec<Symbol> = Vec::with_capacity(h.tokens.len());
    for &id in &h.tokens {
        match alphabet.symbol(vocab.token(id)?) {
            Ok(s) => syms.push(s),
            Err(_) => return Ok(None),
        }
    }
    Ok(Some(Form::new(syms)))
}

/// Probe combinations for both groups, then every item's full paradigm.
pub fn test_combinations(
    items: &[TestItem],
    p: &Pipeline,
) -> Result<(Vec<Combination>, Vec<Combination>), PipelineError> {
    let mut probes = Vec::new();
    for group in ProbeGroup::ALL {
        for item in items {
            probes.push(item.probe(group, &p.morphology)?);
        }
    }
    let mut paradigm = Vec::new();
    for item in items {
        paradigm.extend(enumerate_combinations(
            &item.paradigm(&p.morphology)?,
            p.cfg.ordered_pairs,
        ));
    }
    Ok((probes, paradigm))
}

fn decode_all(p: &Pipeline, ck: &Checkpoint, combos: &[Combination]) -> Result<Vec<Hypothesis>, PipelineError> {
    let model = &ck.model;
    let vocab = model.vocab();
    let srcs = combos
        .iter()
        .map(|c| {
            let pair = to_token_pair(c, &p.morphology)?;
            Ok(vocab.encode(&pair.input)?)
        })
        .collect::<Result<Vec<Vec<u32>>, PipelineError>>()?;
    let dc = &p.cfg.decode;
    let mut out = Vec::with_capacity(srcs.len());
    if dc.beam_width == 1 {
        for chunk in srcs.chunks(dc.batch_size) {
            out.extend(greedy_decode(model, chunk, dc.max_len)?);
        }
    } else {
        for s in &srcs {
            let mut hyps = beam_decode(model, s, dc.beam_width, dc.max_len)?;
            if hyps.is_empty() {
                return Err(PipelineError::Numerical("beam search returned no hypothesis".into()));
            }
            out.push(hyps.swap_remove(0));
        }
    }
    Ok(out)
}

fn score(
    p: &Pipeline,
    run: &Run,
    ck: &Checkpoint,
    combos: &[Combination],
    hyps: &[Hypothesis],
) -> Result<Vec<ResponseRecord>, PipelineError> {
    let mut out = Vec::with_capacity(combos.len());
    for (c, h) in combos.iter().zip(hyps) {
        let item = p
            .items
            .iter()
            .find(|i| i.item_id == c.lemma_id)
            .ok_or_else(|| PipelineError::Data(format!("unknown item {}", c.lemma_id)))?;
        let (predicted, judgement) = match hypothesis_form(h, ck.model.vocab(), &p.morphology.alphabet)? {
            Some(f) => {
                let j = classify_response(item, &c.target_tag, &f, &p.morphology.suffixes)?;
                (f, j)
            }
            None => (
                Form::new(Vec::new()),
                Judgement {
                    classification: Classification::Other,
                    stem_correct: false,
                    suffix_correct: false,
                    seq_correct: false,
                },
            ),
        };
        out.push(ResponseRecord::new(
            &item.item_id,
            run.responder_id(),
            &run.condition.label,
            c.target_tag,
            predicted,
            judgement,
        ));
    }
    Ok(out)
}

/// Decodes the probes and the full paradigms of the test items with every
/// run's final checkpoint.
pub fn cmd_eval(p: &Pipeline) -> Result<[PathBuf; 2], PipelineError> {
    p.record_config()?;
    let runs = p.runs();
    let ckpts: Vec<PathBuf> = runs.iter().map(|r| model_dir(p, r).join("final.ckpt")).collect();
    require(&ckpts)?;
    let (probes, paradigm) = test_combinations(&p.items, p)?;
    let mut probe_rows = Vec::new();
    let mut paradigm_rows = Vec::new();
    for (run, path) in runs.iter().zip(&ckpts) {
        let ck = Checkpoint::load(path)?;
        for (combos, rows) in [(&probes, &mut probe_rows), (&paradigm, &mut paradigm_rows)] {
            let hyps = decode_all(p, &ck, combos)?;
            rows.extend(score(p, run, &ck, combos, &hyps)?.iter().map(ResponseRow::from_record));
        }
        log::info!(
            "{}: decoded {} probes and {} paradigm cells",
            run.responder_id(),
            probes.len(),
            paradigm.len()
        );
    }
    let dir = p.dir("eval");
    let out = [dir.join(PROBE_CSV), dir.join(PARADIGM_CSV)];
    write_csv(&out[0], &probe_rows)?;
    write_csv(&out[1], &paradigm_rows)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub(crate) struct WordlikenessRow {
    pub item_id: String,
    pub word: String,
    pub raw: f64,
    pub log10_raw: f64,
}

pub(crate) fn wordlikeness_path(p: &Pipeline) -> PathBuf {
    p.dir("gnm").join("wordlikeness.csv")
}

/// Scores each test item's `nl_stem#l_stem` against the reference lexicon.
pub fn cmd_gnm(p: &Pipeline) -> Result<PathBuf, PipelineError> {
    p.record_config()?;
    let text = match &p.cfg.paths.gnm_lexicon {
        Some(path) => read_file(path)?,
        None => DEFAULT_LEXICON.to_string(),
    };
    let lexicon = parse_lexicon(&text, &p.morphology.alphabet)?;
    let scores = score_test_set(&p.items, &lexicon, &p.cfg.gnm)?;
    let rows: Vec<WordlikenessRow> = p
        .items
        .iter()
        .zip(scores)
        .map(|(item, s)| WordlikenessRow {
            item_id: s.item_id,
            word: item_word(item).iter().map(Symbol::glyph).collect(),
            raw: s.raw,
            log10_raw: s.log10_raw,
        })
        .collect();
    let path = wordlikeness_path(p);
    write_csv(&path, &rows)?;
    Ok(path)
}
