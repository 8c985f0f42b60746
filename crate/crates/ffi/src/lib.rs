//! C ABI over the `bioner` library.
//!
//! Every fallible function returns a [`BionerStatus`]; on anything other than
//! `BIONER_STATUS_OK` a message is available from
//! [`bioner_last_error_message`] on the same thread. Objects are opaque
//! handles released with their matching `*_free`. Strings returned through
//! `out` parameters are owned by the caller and released with
//! [`bioner_string_free`]. Structured results are JSON.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bioner::eval::evaluate_corpus;
use bioner::head::{HeadFile, HeadTagger};
use bioner::ontology::SynonymIndex;
use bioner::tagio::{decode, parse_conll, tokenize, tokens_from_words, LabelSpace, ProbRecord, TagSchema};
use bioner::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BionerStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Parse = 4,
    Io = 5,
    Panic = 6,
}

/// Tagging schema of a label space.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BionerSchema {
    Bio = 0,
    Io = 1,
}

/// Ordered output labels for a set of entity classes.
pub struct BionerLabelSpace(LabelSpace);

/// Synonym index used for dictionary tagging.
pub struct BionerIndex(SynonymIndex);

/// Trained dense tagging head with its featurizer.
pub struct BionerHead(HeadTagger);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(BionerStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io(_) | Error::File { .. } => BionerStatus::Io,
            e if e.is_usage() => BionerStatus::InvalidArgument,
            _ => BionerStatus::Parse,
        };
        Failure(status, e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure(BionerStatus::Parse, e.to_string())
    }
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> BionerStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BionerStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(&format!("internal panic: {message}"));
            BionerStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(BionerStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(BionerStatus::InvalidUtf8, format!("`{what}`: {e}")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|e| Failure(BionerStatus::Parse, e.to_string()))?;
    write_out(out, c.into_raw(), "out")
}

fn check_out<T>(out: *mut T) -> Result<(), Failure> {
    if out.is_null() {
        Err(null("out"))
    } else {
        Ok(())
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bioner_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL if none.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bioner_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be NULL or a pointer obtained from this library that has not
/// been freed yet.
#[no_mangle]
pub unsafe extern "C" fn bioner_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a label space from comma-separated class names.
///
/// # Safety
/// `classes` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bioner_label_space_new(
    classes: *const c_char,
    schema: BionerSchema,
    out: *mut *mut BionerLabelSpace,
) -> BionerStatus {
    guard(|| {
        check_out(out)?;
        let classes: Vec<&str> = read_str(classes, "classes")?.split(',').map(str::trim).collect();
        let schema = match schema {
            BionerSchema::Bio => TagSchema::Bio,
            BionerSchema::Io => TagSchema::Io,
        };
        let space = LabelSpace::new(&classes, schema)?;
        write_out(out, Box::into_raw(Box::new(BionerLabelSpace(space))), "out")
    })
}

/// Number of labels in the space, or 0 for NULL.
///
/// # Safety
/// `space` must be NULL or a live handle from [`bioner_label_space_new`].
#[no_mangle]
pub unsafe extern "C" fn bioner_label_space_len(space: *const BionerLabelSpace) -> usize {
    space.as_ref().map_or(0, |s| s.0.len())
}

/// Writes the labels of the space as a JSON array of strings.
///
/// # Safety
/// `space` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bioner_label_space_labels_json(
    space: *const BionerLabelSpace,
    out: *mut *mut c_char,
) -> BionerStatus {
    guard(|| {
        check_out(out)?;
        let space = handle(space, "space")?;
        write_string(out, serde_json::to_string(space.0.labels())?)
    })
}

/// # Safety
/// `space` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bioner_label_space_free(space: *mut BionerLabelSpace) {
    if !space.is_null() {
        drop(Box::from_raw(space));
    }
}

/// Tokenizes `text` into a JSON array of `{text, span: [start, end]}` tokens.
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bioner_tokenize_json(text: *const c_char, out: *mut *mut c_char) -> BionerStatus {
    guard(|| {
        check_out(out)?;
        let tokens = tokenize(read_str(text, "text")?);
        write_string(out, serde_json::to_string(&tokens)?)
    })
}

/// Loads a synonym index from a JSON file.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bioner_index_load(path: *const c_char, out: *mut *mut BionerIndex) -> BionerStatus {
    guard(|| {
        check_out(out)?;
        let path = read_str(path, "path")?;
        let json = std::fs::read_to_string(path).map_err(|e| Failure::from(Error::file(path, e)))?;
        let index = SynonymIndex::from_json(&json)?;
        write_out(out, Box::into_raw(Box::new(BionerIndex(index))), "out")
    })
}

/// Builds a synonym index from its JSON serialization.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bioner_index_from_json(json: *const c_char, out: *mut *mut BionerIndex) -> BionerStatus {
    guard(|| {
        check_out(out)?;
        let index = SynonymIndex::from_json(read_str(json, "json")?)?;
        write_out(out, Box::into_raw(Box::new(BionerIndex(index))), "out")
    })
}

/// Number of distinct normalized keys, or 0 for NULL.
///
/// # Safety
/// `index` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bioner_index_len(index: *const BionerIndex) -> usize {
    index.as_ref().map_or(0, |i| i.0.len())
}

/// # Safety
/// `index` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bioner_index_free(index: *mut BionerIndex) {
    if !index.is_null() {
        drop(Box::from_raw(index));
    }
}

/// Tags `text` by dictionary lookup; writes a JSON array of entities.
///
/// # Safety
/// `index` must be a live handle, `text` a valid NUL-terminated string and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bioner_dictionary_tag_json(
    index: *const BionerIndex,
    text: *const c_char,
    out: *mut *mut c_char,
) -> BionerStatus {
    guard(|| {
        check_out(out)?;
        let index = handle(index, "index")?;
        let entities = index.0.tag(read_str(text, "text")?);
        write_string(out, serde_json::to_string(&entities)?)
    })
}

/// Decodes one probability record `{"tokens": [...], "probs": [[...], ...]}`
/// into a JSON array of entities.
///
/// Token offsets assume the tokens are joined by single spaces.
///
/// # Safety
/// `space` must be a live handle, `record` a valid NUL-terminated string and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bioner_decode_json(
    space: *const BionerLabelSpace,
    record: *const c_char,
    threshold: f64,
    out: *mut *mut c_char,
) -> BionerStatus {
    guard(|| {
        check_out(out)?;
        let space = &handle(space, "space")?.0;
        let record: ProbRecord = serde_json::from_str(read_str(record, "record")?)?;
        let tokens = tokens_from_words(&record.tokens).ok_or_else(|| {
            Failure(
                BionerStatus::InvalidArgument,
                "tokens must be non-empty and contain no whitespace".into(),
            )
        })?;
        let matrix = record.matrix(space.len())?;
        let entities = decode(&matrix, &tokens, space, threshold)?;
        write_string(out, serde_json::to_string(&entities)?)
    })
}

/// Scores probability records against gold CoNLL text.
///
/// `pred_jsonl` holds one probability record per line, aligned with the
/// gold sentences. The macro F1 is written to `macro_f1`; if `report` is not
/// NULL the full per-class report is written there as JSON.
///
/// # Safety
/// `space` must be a live handle, the strings valid and NUL-terminated, and
/// `macro_f1` a valid pointer. `report` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn bioner_evaluate(
    space: *const BionerLabelSpace,
    gold_conll: *const c_char,
    pred_jsonl: *const c_char,
    threshold: f64,
    macro_f1: *mut f64,
    report: *mut *mut c_char,
) -> BionerStatus {
    guard(|| {
        check_out(macro_f1)?;
        let space = &handle(space, "space")?.0;
        let gold = parse_conll(read_str(gold_conll, "gold_conll")?.as_bytes())?;
        let preds = bioner::tagio::read_prob_records(read_str(pred_jsonl, "pred_jsonl")?.as_bytes())?;
        let result = evaluate_corpus(&preds, &gold, space, threshold)?;
        if !report.is_null() {
            write_string(report, result.to_json())?;
        }
        write_out(macro_f1, result.macro_f1, "macro_f1")
    })
}

/// Loads a trained head from its JSON file.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bioner_head_load(path: *const c_char, out: *mut *mut BionerHead) -> BionerStatus {
    guard(|| {
        check_out(out)?;
        let path = read_str(path, "path")?;
        let json = std::fs::read_to_string(path).map_err(|e| Failure::from(Error::file(path, e)))?;
        let file: HeadFile = serde_json::from_str(&json)?;
        let tagger = HeadTagger::from_file(&file)?;
        write_out(out, Box::into_raw(Box::new(BionerHead(tagger))), "out")
    })
}

/// Tags `text` with the head; writes a JSON array of entities.
///
/// # Safety
/// `head` must be a live handle, `text` a valid NUL-terminated string and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bioner_head_predict_json(
    head: *const BionerHead,
    text: *const c_char,
    out: *mut *mut c_char,
) -> BionerStatus {
    guard(|| {
        check_out(out)?;
        let head = handle(head, "head")?;
        let entities = head.0.tag_text(read_str(text, "text")?)?;
        write_string(out, serde_json::to_string(&entities)?)
    })
}

/// # Safety
/// `head` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bioner_head_free(head: *mut BionerHead) {
    if !head.is_null() {
        drop(Box::from_raw(head));
    }
}
