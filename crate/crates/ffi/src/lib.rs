//! C ABI over `review_rating`.
//!
//! Every fallible function returns an [`RrStatus`] and reports its result
//! through an out-pointer. On failure a message is kept per thread and can
//! be read with [`rr_last_error`] until the next failing call on that
//! thread. Handles are opaque; every `*_bundled`/`*_load` constructor has a
//! matching `*_free`. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use review_rating::aspects::{AspectExtractor, AspectPhrase};
use review_rating::corpus::Stars;
use review_rating::embeddings::{featurize_tokens, training_tokens, EmbeddingModel, Scheme};
use review_rating::eval::{mae, rmse};
use review_rating::lexicon::{Polarity, SentimentLexicon};
use review_rating::models::Predictor;
use review_rating::textproc::PerceptronTagger;
use review_rating::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Io = 4,
    Data = 5,
    DimensionMismatch = 6,
    BufferTooSmall = 7,
    Internal = 8,
    Panic = 9,
}

/// Feature schemes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RrScheme {
    Bl = 0,
    W2v = 1,
    W2vApe = 2,
    W2vPape = 3,
}

impl From<Scheme> for RrScheme {
    fn from(s: Scheme) -> Self {
        match s {
            Scheme::Bl => RrScheme::Bl,
            Scheme::W2v => RrScheme::W2v,
            Scheme::W2vApe => RrScheme::W2vApe,
            Scheme::W2vPape => RrScheme::W2vPape,
        }
    }
}

pub struct RrLexicon(SentimentLexicon);

pub struct RrTagger(PerceptronTagger);

pub struct RrEmbeddings(EmbeddingModel);

pub struct RrModel(Predictor);

/// Phrases extracted from one text. Strings stay valid until the list is
/// freed.
pub struct RrPhraseList {
    phrases: Vec<AspectPhrase>,
    sentiment: Vec<CString>,
    target: Vec<CString>,
}

/// One aspect phrase. `polarity` is 1 for positive, -1 for negative.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RrPhrase {
    pub sentiment_word: *const c_char,
    pub target_word: *const c_char,
    pub polarity: c_int,
    pub segment_index: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(RrStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } => RrStatus::Io,
            Error::DimensionMismatch { .. } => RrStatus::DimensionMismatch,
            Error::Config { .. } | Error::InvalidInput(_) => RrStatus::InvalidArgument,
            Error::Internal(_) => RrStatus::Internal,
            _ => RrStatus::Data,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', "\\0")).expect("nul bytes replaced");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

/// Runs `f`, turning errors and panics into a status plus a stored message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RrStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("panic: {message}"));
            RrStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(RrStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(RrStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn stars(p: *const u8, n: usize, what: &str) -> Result<Vec<Stars>, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    let raw: &[u8] = std::slice::from_raw_parts(p, n);
    raw.iter()
        .map(|&v| {
            Stars::new(v).ok_or_else(|| Failure(RrStatus::InvalidArgument, format!("{what}: {v} is not a star rating")))
        })
        .collect()
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failing call on this thread, or null. Owned by the
/// library; valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rr_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn rr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Mean absolute error over `n` star ratings (each 1 to 5).
///
/// # Safety
/// `preds` and `truths` must point to `n` readable bytes; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn rr_mae(preds: *const u8, truths: *const u8, n: usize, out: *mut f64) -> RrStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = mae(&stars(preds, n, "preds")?, &stars(truths, n, "truths")?)?;
        Ok(())
    })
}

/// Root mean squared error over `n` star ratings (each 1 to 5).
///
/// # Safety
/// As for [`rr_mae`].
#[no_mangle]
pub unsafe extern "C" fn rr_rmse(preds: *const u8, truths: *const u8, n: usize, out: *mut f64) -> RrStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = rmse(&stars(preds, n, "preds")?, &stars(truths, n, "truths")?)?;
        Ok(())
    })
}

/// The opinion lexicon shipped with the library.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rr_lexicon_bundled(out: *mut *mut RrLexicon) -> RrStatus {
    guard(|| {
        *out_ptr(out, "out")? = boxed(RrLexicon(SentimentLexicon::shared().clone()));
        Ok(())
    })
}

/// Loads a lexicon from positive and negative word-list files.
///
/// # Safety
/// Paths must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rr_lexicon_load(
    positive_path: *const c_char,
    negative_path: *const c_char,
    out: *mut *mut RrLexicon,
) -> RrStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let pos = text(positive_path, "positive_path")?;
        let neg = text(negative_path, "negative_path")?;
        *out = boxed(RrLexicon(SentimentLexicon::load(Path::new(pos), Path::new(neg))?));
        Ok(())
    })
}

/// Writes 1 (positive), -1 (negative) or 0 (not in the lexicon). The word
/// is lowercased before lookup.
///
/// # Safety
/// `lexicon` must be a live handle, `word` a NUL-terminated string and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rr_lexicon_polarity(
    lexicon: *const RrLexicon,
    word: *const c_char,
    out: *mut c_int,
) -> RrStatus {
    guard(|| {
        let lex = borrow(lexicon, "lexicon")?;
        let out = out_ptr(out, "out")?;
        *out = polarity_code(lex.0.polarity(&text(word, "word")?.to_lowercase()));
        Ok(())
    })
}

fn polarity_code(p: Option<Polarity>) -> c_int {
    match p {
        Some(Polarity::Positive) => 1,
        Some(Polarity::Negative) => -1,
        None => 0,
    }
}

/// # Safety
/// `lexicon` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn rr_lexicon_free(lexicon: *mut RrLexicon) {
    free(lexicon)
}

/// The part-of-speech tagger shipped with the library.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rr_tagger_bundled(out: *mut *mut RrTagger) -> RrStatus {
    guard(|| {
        *out_ptr(out, "out")? = boxed(RrTagger(PerceptronTagger::shared().clone()));
        Ok(())
    })
}

/// Loads a tagger model file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rr_tagger_load(path: *const c_char, out: *mut *mut RrTagger) -> RrStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = boxed(RrTagger(PerceptronTagger::load(Path::new(text(path, "path")?))?));
        Ok(())
    })
}

/// # Safety
/// `tagger` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn rr_tagger_free(tagger: *mut RrTagger) {
    free(tagger)
}

/// Extracts the aspect phrases of `text`. `max_distance` of 0 means no
/// distance limit.
///
/// # Safety
/// Handles must be live, `text` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rr_extract_phrases(
    lexicon: *const RrLexicon,
    tagger: *const RrTagger,
    text_ptr: *const c_char,
    max_distance: usize,
    out: *mut *mut RrPhraseList,
) -> RrStatus {
    guard(|| {
        let lex = borrow(lexicon, "lexicon")?;
        let tagger = borrow(tagger, "tagger")?;
        let out = out_ptr(out, "out")?;
        let input = text(text_ptr, "text")?;
        let phrases = extractor(lex, tagger, max_distance).extract_text(input);
        let cstr = |s: &str| CString::new(s).map_err(|_| Failure(RrStatus::Internal, "nul byte in word".into()));
        let sentiment = phrases.iter().map(|p| cstr(&p.sentiment_word)).collect::<Result<_, _>>()?;
        let target = phrases.iter().map(|p| cstr(&p.target_word)).collect::<Result<_, _>>()?;
        *out = boxed(RrPhraseList {
            phrases,
            sentiment,
            target,
        });
        Ok(())
    })
}

fn extractor<'a>(lex: &'a RrLexicon, tagger: &'a RrTagger, max_distance: usize) -> AspectExtractor<'a> {
    AspectExtractor::new(&lex.0, &tagger.0).with_max_distance((max_distance > 0).then_some(max_distance))
}

/// Number of phrases in a list; 0 for a null list.
///
/// # Safety
/// `list` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rr_phrase_list_len(list: *const RrPhraseList) -> usize {
    list.as_ref().map_or(0, |l| l.phrases.len())
}

/// Copies phrase `index` into `out`. The strings it points to belong to
/// the list.
///
/// # Safety
/// `list` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rr_phrase_list_get(list: *const RrPhraseList, index: usize, out: *mut RrPhrase) -> RrStatus {
    guard(|| {
        let l = borrow(list, "list")?;
        let out = out_ptr(out, "out")?;
        let p = l.phrases.get(index).ok_or_else(|| {
            Failure(
                RrStatus::InvalidArgument,
                format!("index {index} out of range (list has {})", l.phrases.len()),
            )
        })?;
        *out = RrPhrase {
            sentiment_word: l.sentiment[index].as_ptr(),
            target_word: l.target[index].as_ptr(),
            polarity: polarity_code(Some(p.polarity)),
            segment_index: p.segment_index,
        };
        Ok(())
    })
}

/// # Safety
/// `list` must be null or a live handle; it and its strings are invalid
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn rr_phrase_list_free(list: *mut RrPhraseList) {
    free(list)
}

/// Loads word vectors in the text format (`<count> <dim>` header).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rr_embeddings_load(path: *const c_char, out: *mut *mut RrEmbeddings) -> RrStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = boxed(RrEmbeddings(EmbeddingModel::load(Path::new(text(path, "path")?))?));
        Ok(())
    })
}

/// Vector dimension; 0 for a null handle.
///
/// # Safety
/// `embeddings` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rr_embeddings_dim(embeddings: *const RrEmbeddings) -> usize {
    embeddings.as_ref().map_or(0, |e| e.0.dim())
}

/// Vocabulary size; 0 for a null handle.
///
/// # Safety
/// `embeddings` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rr_embeddings_len(embeddings: *const RrEmbeddings) -> usize {
    embeddings.as_ref().map_or(0, |e| e.0.len())
}

/// # Safety
/// `embeddings` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn rr_embeddings_free(embeddings: *mut RrEmbeddings) {
    free(embeddings)
}

/// Embedding features of `text` under `scheme` (not `Bl`): D, 2D or 3D
/// values. The required length is always written to `written`; when
/// `capacity` is too small nothing else is written and the call returns
/// `BufferTooSmall`.
///
/// # Safety
/// Handles must be live, `text` NUL-terminated, `out` writable for
/// `capacity` doubles (or null when `capacity` is 0) and `written` writable.
#[no_mangle]
pub unsafe extern "C" fn rr_featurize(
    embeddings: *const RrEmbeddings,
    lexicon: *const RrLexicon,
    tagger: *const RrTagger,
    text_ptr: *const c_char,
    scheme: RrScheme,
    out: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> RrStatus {
    guard(|| {
        let emb = borrow(embeddings, "embeddings")?;
        let written = out_ptr(written, "written")?;
        let scheme = match scheme {
            RrScheme::Bl => {
                return Err(Failure(
                    RrStatus::InvalidArgument,
                    "bl features come from a trained model's vocabulary".into(),
                ))
            }
            RrScheme::W2v => Scheme::W2v,
            RrScheme::W2vApe => Scheme::W2vApe,
            RrScheme::W2vPape => Scheme::W2vPape,
        };
        let input = text(text_ptr, "text")?;
        let phrases = if scheme == Scheme::W2v {
            Vec::new()
        } else {
            let lex = borrow(lexicon, "lexicon")?;
            let tagger = borrow(tagger, "tagger")?;
            extractor(lex, tagger, 0).extract_text(input)
        };
        let values = featurize_tokens(&emb.0, &training_tokens(input), &phrases, scheme)?.to_dense();
        *written = values.len();
        copy_out(&values, out, capacity)
    })
}

unsafe fn copy_out(values: &[f64], out: *mut f64, capacity: usize) -> Result<(), Failure> {
    if capacity < values.len() {
        return Err(Failure(
            RrStatus::BufferTooSmall,
            format!("need room for {} values, got {capacity}", values.len()),
        ));
    }
    if out.is_null() {
        return Err(null("out"));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    Ok(())
}

/// Loads a saved model and, for embedding schemes, the vectors it names.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rr_model_load(path: *const c_char, out: *mut *mut RrModel) -> RrStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = boxed(RrModel(Predictor::load(Path::new(text(path, "path")?))?));
        Ok(())
    })
}

/// Feature scheme of a model.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rr_model_scheme(model: *const RrModel, out: *mut RrScheme) -> RrStatus {
    guard(|| {
        let m = borrow(model, "model")?;
        *out_ptr(out, "out")? = m.0.scheme().into();
        Ok(())
    })
}

/// Input dimension of a model; 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rr_model_feature_dim(model: *const RrModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.feature_dim())
}

/// Star rating (1 to 5) for a prepared feature vector of the model's
/// dimension.
///
/// # Safety
/// `model` must be a live handle, `features` readable for `n` doubles and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rr_model_predict_features(
    model: *const RrModel,
    features: *const f64,
    n: usize,
    out: *mut u8,
) -> RrStatus {
    guard(|| {
        let m = borrow(model, "model")?;
        let out = out_ptr(out, "out")?;
        if features.is_null() {
            return Err(null("features"));
        }
        let x = std::slice::from_raw_parts(features, n);
        *out = m.0.saved().model.predict(x)?.get();
        Ok(())
    })
}

/// Star rating (1 to 5) for raw review text. The lexicon and tagger are
/// only read by phrase schemes and may be null otherwise.
///
/// # Safety
/// `model` must be a live handle, other handles live or null, `text`
/// NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rr_model_predict_text(
    model: *const RrModel,
    lexicon: *const RrLexicon,
    tagger: *const RrTagger,
    text_ptr: *const c_char,
    out: *mut u8,
) -> RrStatus {
    guard(|| {
        let m = borrow(model, "model")?;
        let out = out_ptr(out, "out")?;
        let input = text(text_ptr, "text")?;
        let phrases = if matches!(m.0.scheme(), Scheme::W2vApe | Scheme::W2vPape) {
            let lex = borrow(lexicon, "lexicon")?;
            let tagger = borrow(tagger, "tagger")?;
            extractor(lex, tagger, 0).extract_text(input)
        } else {
            Vec::new()
        };
        *out = m.0.predict(&training_tokens(input), &phrases)?.get();
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn rr_model_free(model: *mut RrModel) {
    free(model)
}
