//! C ABI over morphome-lab.
//!
//! Every fallible function returns an [`MlStatus`]; on failure a message is
//! available from [`ml_last_error`] on the same thread. Objects are opaque
//! handles created by `*_load`/`*_default` and released by the matching
//! `*_free`. Strings returned through out-parameters are owned by the caller
//! and must be released with [`ml_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use morphome_lab::gnm::{
    gnm_score, parse_lexicon, weighted_edit_distance, CostMatrix, GnmParams, LexEntry, DEFAULT_LEXICON,
};
use morphome_lab::morpho::Morphology;
use morphome_lab::seq2seq::{beam_decode, greedy_decode, Checkpoint, Seq2SeqError, Transformer};
use morphome_lab::stats::{ks_two_sample, log_ratio, spearman, LogRatioConfig};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlStatus {
    MlOk = 0,
    MlNullPointer = 1,
    MlInvalidUtf8 = 2,
    MlInvalidArgument = 3,
    MlIo = 4,
    MlFormat = 5,
    MlNumerical = 6,
    MlPanic = 7,
}

/// A trained model loaded from a checkpoint.
pub struct MlModel {
    model: Transformer<f32>,
}

/// A wordlikeness reference lexicon.
pub struct MlLexicon {
    entries: Vec<LexEntry>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Fail(MlStatus, String);

impl From<Seq2SeqError> for Fail {
    fn from(e: Seq2SeqError) -> Self {
        let status = match e {
            Seq2SeqError::Io(_) => MlStatus::MlIo,
            Seq2SeqError::Checkpoint(_) => MlStatus::MlFormat,
            Seq2SeqError::NonFiniteLoss { .. } => MlStatus::MlNumerical,
            _ => MlStatus::MlInvalidArgument,
        };
        Fail(status, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(MlStatus::MlInvalidArgument, msg.into())
}

/// Runs `f`, records any error or panic and returns the status.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            MlStatus::MlOk
        }
        Ok(Err(Fail(s, m))) => {
            set_error(&m);
            s
        }
        Err(_) => {
            set_error("internal panic");
            MlStatus::MlPanic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(MlStatus::MlNullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(MlStatus::MlInvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, n: usize, name: &str) -> Result<&'a [f64], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail(MlStatus::MlNullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Fail> {
    p.as_mut()
        .ok_or_else(|| Fail(MlStatus::MlNullPointer, format!("{name} is null")))
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn ml_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ml_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ml_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a checkpoint file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ml_model_load(path: *const c_char, out: *mut *mut MlModel) -> MlStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let out = out_arg(out, "out")?;
        let ck = Checkpoint::load(Path::new(path))?;
        *out = Box::into_raw(Box::new(MlModel { model: ck.model }));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from [`ml_model_load`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ml_model_free(model: *mut MlModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of tokens in the model's vocabulary.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ml_model_vocab_size(model: *const MlModel, out: *mut usize) -> MlStatus {
    guard(|| {
        let m = model
            .as_ref()
            .ok_or_else(|| Fail(MlStatus::MlNullPointer, "model is null".into()))?;
        *out_arg(out, "out")? = m.model.vocab().len();
        Ok(())
    })
}

/// Decodes one input. `input` holds whitespace-separated vocabulary tokens,
/// e.g. `"ʃ u t e s <V;IND;PRS;2;SG> # ..."`. `beam_width` 1 is greedy.
/// `max_len` counts output tokens including the end marker. On success
/// `*out_tokens` receives the space-separated output (free with
/// [`ml_string_free`]) and `*out_score` its total log-probability.
///
/// # Safety
/// `model` must be a live handle, `input` a NUL-terminated string, and the
/// out-pointers writable.
#[no_mangle]
pub unsafe extern "C" fn ml_model_decode(
    model: *const MlModel,
    input: *const c_char,
    beam_width: u32,
    max_len: u32,
    out_tokens: *mut *mut c_char,
    out_score: *mut f64,
) -> MlStatus {
    guard(|| {
        let m = &model
            .as_ref()
            .ok_or_else(|| Fail(MlStatus::MlNullPointer, "model is null".into()))?
            .model;
        let input = str_arg(input, "input")?;
        let out_tokens = out_arg(out_tokens, "out_tokens")?;
        let out_score = out_arg(out_score, "out_score")?;
        let vocab = m.vocab();
        let src = input
            .split_whitespace()
            .map(|t| vocab.id(t))
            .collect::<Result<Vec<u32>, _>>()?;
        if src.is_empty() {
            return Err(invalid("input is empty"));
        }
        let hyp = if beam_width <= 1 {
            greedy_decode(m, &[src], max_len as usize)?.remove(0)
        } else {
            beam_decode(m, &src, beam_width as usize, max_len as usize)?
                .into_iter()
                .next()
                .ok_or_else(|| Fail(MlStatus::MlNumerical, "no complete hypothesis".into()))?
        };
        let text = vocab.decode(&hyp.tokens)?.join(" ");
        *out_tokens = CString::new(text).map_err(|e| invalid(e.to_string()))?.into_raw();
        *out_score = hyp.score;
        Ok(())
    })
}

/// Smoothed, clamped log-ratio `log_base((natural + alpha) / (l + alpha))`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ml_log_ratio(
    natural: u64,
    l_shaped: u64,
    base: f64,
    alpha: f64,
    clamp: f64,
    out: *mut f64,
) -> MlStatus {
    guard(|| {
        if !(base > 1.0 && alpha > 0.0 && clamp > 0.0) {
            return Err(invalid("need base > 1, alpha > 0, clamp > 0"));
        }
        *out_arg(out, "out")? = log_ratio(natural, l_shaped, &LogRatioConfig { base, alpha, clamp });
        Ok(())
    })
}

/// Spearman's rank correlation and its two-sided p-value.
///
/// # Safety
/// `x` and `y` must point to `n` readable doubles; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ml_spearman(x: *const f64, y: *const f64, n: usize, rho: *mut f64, p: *mut f64) -> MlStatus {
    guard(|| {
        let r = spearman(slice_arg(x, n, "x")?, slice_arg(y, n, "y")?).map_err(|e| invalid(e.to_string()))?;
        *out_arg(rho, "rho")? = r.rho;
        *out_arg(p, "p")? = r.p_value;
        Ok(())
    })
}

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
///
/// # Safety
/// `a` and `b` must point to `na` and `nb` readable doubles; outputs must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ml_ks_two_sample(
    a: *const f64,
    na: usize,
    b: *const f64,
    nb: usize,
    d: *mut f64,
    p: *mut f64,
) -> MlStatus {
    guard(|| {
        let r = ks_two_sample(slice_arg(a, na, "a")?, slice_arg(b, nb, "b")?).map_err(|e| invalid(e.to_string()))?;
        *out_arg(d, "d")? = r.d_stat;
        *out_arg(p, "p")? = r.p_value;
        Ok(())
    })
}

fn word(text: &str, m: &Morphology) -> Result<Vec<morphome_lab::morpho::Symbol>, Fail> {
    if text.contains('#') {
        parse_lexicon(text, &m.alphabet)
            .map_err(|e| invalid(e.to_string()))?
            .into_iter()
            .next()
            .map(|e| e.word)
            .ok_or_else(|| invalid("empty word"))
    } else {
        m.alphabet
            .parse_form(text)
            .map(|f| f.symbols().to_vec())
            .map_err(|e| invalid(e.to_string()))
    }
}

/// Unit-cost edit distance between two words over the default inventory.
/// Words are forms (`ʃuso`, or space-separated glyphs) optionally joined by
/// `#`.
///
/// # Safety
/// `a` and `b` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ml_edit_distance(a: *const c_char, b: *const c_char, out: *mut f64) -> MlStatus {
    guard(|| {
        let m = Morphology::default();
        let a = word(str_arg(a, "a")?, &m)?;
        let b = word(str_arg(b, "b")?, &m)?;
        *out_arg(out, "out")? = weighted_edit_distance(&a, &b, &CostMatrix::unit());
        Ok(())
    })
}

/// The bundled reference lexicon.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ml_lexicon_default(out: *mut *mut MlLexicon) -> MlStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let entries = parse_lexicon(DEFAULT_LEXICON, &Morphology::default().alphabet)
            .map_err(|e| Fail(MlStatus::MlFormat, e.to_string()))?;
        *out = Box::into_raw(Box::new(MlLexicon { entries }));
        Ok(())
    })
}

/// Loads a lexicon file of `base#alternant[<TAB>weight]` lines.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ml_lexicon_load(path: *const c_char, out: *mut *mut MlLexicon) -> MlStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let out = out_arg(out, "out")?;
        let text = std::fs::read_to_string(path).map_err(|e| Fail(MlStatus::MlIo, format!("{path}: {e}")))?;
        let entries = parse_lexicon(&text, &Morphology::default().alphabet)
            .map_err(|e| Fail(MlStatus::MlFormat, e.to_string()))?;
        *out = Box::into_raw(Box::new(MlLexicon { entries }));
        Ok(())
    })
}

/// # Safety
/// `lexicon` must be null or a live lexicon handle.
#[no_mangle]
pub unsafe extern "C" fn ml_lexicon_free(lexicon: *mut MlLexicon) {
    if !lexicon.is_null() {
        drop(Box::from_raw(lexicon));
    }
}

/// Wordlikeness of `word` (e.g. `"ʃut#ʃus"`) with unit edit costs and decay
/// scale `sensitivity`. Writes the raw sum.
///
/// # Safety
/// `lexicon` must be a live handle, `word` a NUL-terminated string and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ml_gnm_score(
    lexicon: *const MlLexicon,
    word_text: *const c_char,
    sensitivity: f64,
    out: *mut f64,
) -> MlStatus {
    guard(|| {
        let lex = lexicon
            .as_ref()
            .ok_or_else(|| Fail(MlStatus::MlNullPointer, "lexicon is null".into()))?;
        let w = word(str_arg(word_text, "word")?, &Morphology::default())?;
        let params = GnmParams {
            sensitivity,
            costs: CostMatrix::unit(),
        };
        let s = gnm_score("", &w, &lex.entries, &params).map_err(|e| invalid(e.to_string()))?;
        *out_arg(out, "out")? = s.raw;
        Ok(())
    })
}
