//! C ABI for the harmfilter library: load or train a Kneser-Ney model behind
//! an opaque handle, score text, and classify against a perplexity
//! threshold.
//!
//! Conventions: functions return an [`HfStatus`] code; results go to out
//! pointers. On any non-`Ok` status, [`hf_last_error_message`] returns a
//! human-readable description valid until the next failing call on the same
//! thread. Handles must be released with [`hf_model_free`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::path::PathBuf;

use libc::c_char;

use harmfilter::corpus::{read_jsonlines, LabelRule};
use harmfilter::ngram::{read_arpa, train_model, write_arpa, KneserNeyModel};
use harmfilter::textproc::lm_tokenize;

/// Status code of a C API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HfStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// A numeric argument was out of range.
    InvalidArgument = 3,
    /// A file could not be read or written.
    IoError = 4,
    /// A model file could not be parsed.
    ParseError = 5,
    /// Training failed (empty corpus, degenerate counts, ...).
    TrainError = 6,
}

/// Opaque model handle.
pub struct HfModel {
    inner: KneserNeyModel,
}

/// Score of one piece of text.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct HfScore {
    /// Sum of per-token log10 probabilities.
    pub log10_prob: f64,
    /// Number of scored tokens (the end-of-document marker included).
    pub tokens: u64,
    /// 10^(-log10_prob / tokens).
    pub perplexity: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: String) {
    let sanitized = CString::new(message.replace('\0', " "))
        .unwrap_or_else(|_| CString::new("error message unavailable").expect("static"));
    LAST_ERROR.with(|slot| *slot.borrow_mut() = sanitized);
}

fn fail(status: HfStatus, message: String) -> HfStatus {
    set_error(message);
    status
}

fn status_of(err: &harmfilter::Error) -> HfStatus {
    match err {
        harmfilter::Error::Io { .. } => HfStatus::IoError,
        harmfilter::Error::ArpaFormat { .. } | harmfilter::Error::BadModelFile { .. } => {
            HfStatus::ParseError
        }
        harmfilter::Error::BadOrder { .. }
        | harmfilter::Error::BadTheta(_)
        | harmfilter::Error::BadParameter(_) => HfStatus::InvalidArgument,
        _ => HfStatus::TrainError,
    }
}

/// Message for the most recent failure on this thread. Never null; empty
/// before the first failure. The pointer is invalidated by the next failing
/// call on the same thread.
#[no_mangle]
pub extern "C" fn hf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

unsafe fn utf8_arg<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, HfStatus> {
    if ptr.is_null() {
        return Err(fail(
            HfStatus::NullArgument,
            format!("{name} must not be null"),
        ));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| fail(HfStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

/// Load an ARPA model file.
///
/// # Safety
/// `path` must be a valid NUL-terminated string; `out_model` must point to
/// writable storage for one pointer. On `Ok` the caller owns the handle and
/// must release it with [`hf_model_free`].
#[no_mangle]
pub unsafe extern "C" fn hf_model_load_arpa(
    path: *const c_char,
    out_model: *mut *mut HfModel,
) -> HfStatus {
    if out_model.is_null() {
        return fail(HfStatus::NullArgument, "out_model must not be null".into());
    }
    let path = match utf8_arg(path, "path") {
        Ok(p) => p,
        Err(status) => return status,
    };
    match read_arpa(PathBuf::from(path)) {
        Ok(model) => {
            *out_model = Box::into_raw(Box::new(HfModel { inner: model }));
            HfStatus::Ok
        }
        Err(e) => fail(status_of(&e), e.to_string()),
    }
}

/// Train a model on a JSONLines corpus (objects with a "content" field),
/// tokenized with the fixed language-model tokenizer.
///
/// # Safety
/// `input_jsonl` must be a valid NUL-terminated string; `out_model` must
/// point to writable storage for one pointer. On `Ok` the caller owns the
/// handle.
#[no_mangle]
pub unsafe extern "C" fn hf_model_train(
    input_jsonl: *const c_char,
    order: u32,
    fallback_discounts: bool,
    out_model: *mut *mut HfModel,
) -> HfStatus {
    if out_model.is_null() {
        return fail(HfStatus::NullArgument, "out_model must not be null".into());
    }
    let input = match utf8_arg(input_jsonl, "input_jsonl") {
        Ok(p) => p,
        Err(status) => return status,
    };
    let outcome = match read_jsonlines(PathBuf::from(input), LabelRule::None) {
        Ok(o) => o,
        Err(e) => return fail(status_of(&e), e.to_string()),
    };
    let docs: Vec<_> = outcome
        .documents
        .iter()
        .map(|d| lm_tokenize(&d.content))
        .collect();
    match train_model(&docs, order as usize, fallback_discounts) {
        Ok(trained) => {
            *out_model = Box::into_raw(Box::new(HfModel {
                inner: trained.model,
            }));
            HfStatus::Ok
        }
        Err(e) => fail(status_of(&e), e.to_string()),
    }
}

/// Write the model to `path` in ARPA format.
///
/// # Safety
/// `model` must be a live handle from this library; `path` a valid
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hf_model_save_arpa(
    model: *const HfModel,
    path: *const c_char,
) -> HfStatus {
    if model.is_null() {
        return fail(HfStatus::NullArgument, "model must not be null".into());
    }
    let path = match utf8_arg(path, "path") {
        Ok(p) => p,
        Err(status) => return status,
    };
    match write_arpa(&(*model).inner, PathBuf::from(path)) {
        Ok(()) => HfStatus::Ok,
        Err(e) => fail(status_of(&e), e.to_string()),
    }
}

/// The model's n-gram order, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn hf_model_order(model: *const HfModel) -> u32 {
    if model.is_null() {
        return 0;
    }
    (*model).inner.order() as u32
}

/// Vocabulary size including the sentinels, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn hf_model_vocab_size(model: *const HfModel) -> u64 {
    if model.is_null() {
        return 0;
    }
    (*model).inner.vocab().len() as u64
}

/// Score a UTF-8 text: log10 probability, token count, perplexity.
///
/// # Safety
/// `model` must be a live handle; `text` a valid NUL-terminated string;
/// `out_score` writable storage for one [`HfScore`].
#[no_mangle]
pub unsafe extern "C" fn hf_score_text(
    model: *const HfModel,
    text: *const c_char,
    out_score: *mut HfScore,
) -> HfStatus {
    if model.is_null() || out_score.is_null() {
        return fail(
            HfStatus::NullArgument,
            "model and out_score must not be null".into(),
        );
    }
    let text = match utf8_arg(text, "text") {
        Ok(t) => t,
        Err(status) => return status,
    };
    let (log10_prob, tokens, perplexity) = (*model).inner.score_text(text);
    *out_score = HfScore {
        log10_prob,
        tokens,
        perplexity,
    };
    HfStatus::Ok
}

/// Classify a UTF-8 text: harmful iff its perplexity is at or below `theta`.
///
/// # Safety
/// `model` must be a live handle; `text` a valid NUL-terminated string;
/// `out_harmful` writable storage for one bool.
#[no_mangle]
pub unsafe extern "C" fn hf_classify_text(
    model: *const HfModel,
    text: *const c_char,
    theta: f64,
    out_harmful: *mut bool,
) -> HfStatus {
    if model.is_null() || out_harmful.is_null() {
        return fail(
            HfStatus::NullArgument,
            "model and out_harmful must not be null".into(),
        );
    }
    if !theta.is_finite() || theta <= 0.0 {
        return fail(
            HfStatus::InvalidArgument,
            format!("theta must be finite and positive, got {theta}"),
        );
    }
    let text = match utf8_arg(text, "text") {
        Ok(t) => t,
        Err(status) => return status,
    };
    let (_, _, perplexity) = (*model).inner.score_text(text);
    *out_harmful = perplexity <= theta;
    HfStatus::Ok
}

/// Release a model handle. Null is a no-op.
///
/// # Safety
/// `model` must be null or a handle obtained from this library that has not
/// been freed yet.
#[no_mangle]
pub unsafe extern "C" fn hf_model_free(model: *mut HfModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
