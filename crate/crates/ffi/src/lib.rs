//! C ABI over the stancetopic library.
//!
//! Every fallible function returns an [`StStatus`]; on failure the message is
//! available from [`st_last_error_message`] on the same thread. Handles are
//! opaque, created by `*_load`/`*_builtin`/`*_default` and released with the
//! matching `*_free`. Strings are NUL-terminated UTF-8.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use stancetopic::corpus::extract_hashtags;
use stancetopic::error::Error;
use stancetopic::geo::Gazetteer;
use stancetopic::lda::{infer, LdaModel};
use stancetopic::stance::{HashtagLexicon, StanceLabel};
use stancetopic::stats;
use stancetopic::text::{tokenize, StopwordList, Vocabulary};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Argument = 3,
    Io = 4,
    Parse = 5,
    Format = 6,
    MissingArtifact = 7,
    BufferTooSmall = 8,
    Internal = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StStance {
    Unlabeled = 0,
    Control = 1,
    Rights = 2,
}

/// Trained topic model with its vocabulary and the default stopword list.
pub struct StModel {
    model: LdaModel,
    vocab: Vocabulary,
    stopwords: StopwordList,
}

pub struct StLexicon(HashtagLexicon);

pub struct StGazetteer(Gazetteer);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> StStatus {
    match e {
        Error::Io(_) | Error::Path { .. } => StStatus::Io,
        Error::Argument(_) => StStatus::Argument,
        Error::Parse { .. } => StStatus::Parse,
        Error::Format(_) => StStatus::Format,
        Error::MissingArtifact { .. } => StStatus::MissingArtifact,
        Error::Internal(_) => StStatus::Internal,
    }
}

struct Fail(StStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard<F>(f: F) -> StStatus
where
    F: FnOnce() -> Result<(), Fail>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => StStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside stancetopic".into());
            StStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(StStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(StStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Fail> {
    p.as_mut()
        .ok_or_else(|| Fail(StStatus::NullPointer, format!("{name} is null")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| Fail(StStatus::NullPointer, format!("{name} is null")))
}

unsafe fn slice_arg<'a>(p: *const f64, n: usize, name: &str) -> Result<&'a [f64], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail(StStatus::NullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

/// Message of the last failure on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn st_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn st_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a model file and the vocabulary it was trained with.
///
/// # Safety
/// Path arguments must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn st_model_load(
    model_path: *const c_char,
    vocab_path: *const c_char,
    out: *mut *mut StModel,
) -> StStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let model = LdaModel::load(Path::new(str_arg(model_path, "model_path")?))?;
        let vocab = Vocabulary::load(Path::new(str_arg(vocab_path, "vocab_path")?))?;
        model.check_vocabulary(&vocab)?;
        *out = Box::into_raw(Box::new(StModel {
            model,
            vocab,
            stopwords: StopwordList::default_english(),
        }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`st_model_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn st_model_free(model: *mut StModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn st_model_num_topics(model: *const StModel, out: *mut usize) -> StStatus {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(model, "model")?.model.topics();
        Ok(())
    })
}

/// Tokenises `text`, infers its topic proportions and writes them to
/// `theta[0..len]`; `len` must equal the topic count.
///
/// # Safety
/// `theta` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn st_model_infer_text(
    model: *const StModel,
    text: *const c_char,
    iterations: usize,
    seed: u64,
    theta: *mut f64,
    len: usize,
) -> StStatus {
    guard(|| {
        let m = ref_arg(model, "model")?;
        let text = str_arg(text, "text")?;
        let k = m.model.topics();
        if len < k {
            return Err(Fail(
                StStatus::BufferTooSmall,
                format!("theta buffer holds {len} values, model has {k} topics"),
            ));
        }
        if theta.is_null() {
            return Err(Fail(StStatus::NullPointer, "theta is null".into()));
        }
        let doc = m.vocab.encode(&tokenize(text, &m.stopwords));
        let t = infer(&m.model, &doc, iterations, seed);
        std::slice::from_raw_parts_mut(theta, k).copy_from_slice(t.as_slice());
        Ok(())
    })
}

/// The built-in hashtag lexicon.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn st_lexicon_default(out: *mut *mut StLexicon) -> StStatus {
    guard(|| {
        *out_arg(out, "out")? = Box::into_raw(Box::new(StLexicon(HashtagLexicon::default())));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn st_lexicon_load(path: *const c_char, out: *mut *mut StLexicon) -> StStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let lex = HashtagLexicon::load(Path::new(str_arg(path, "path")?))?;
        *out = Box::into_raw(Box::new(StLexicon(lex)));
        Ok(())
    })
}

/// # Safety
/// `lexicon` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn st_lexicon_free(lexicon: *mut StLexicon) {
    if !lexicon.is_null() {
        drop(Box::from_raw(lexicon));
    }
}

/// Labels a tweet text by majority vote over its hashtags.
///
/// # Safety
/// `lexicon` must be a live handle, `text` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn st_lexicon_label(
    lexicon: *const StLexicon,
    text: *const c_char,
    out: *mut StStance,
) -> StStatus {
    guard(|| {
        let lex = ref_arg(lexicon, "lexicon")?;
        let tags = extract_hashtags(str_arg(text, "text")?);
        *out_arg(out, "out")? = match lex.0.label_tags(&tags) {
            StanceLabel::Control => StStance::Control,
            StanceLabel::Rights => StStance::Rights,
            StanceLabel::Unlabeled => StStance::Unlabeled,
        };
        Ok(())
    })
}

/// The built-in US gazetteer.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn st_gazetteer_builtin(out: *mut *mut StGazetteer) -> StStatus {
    guard(|| {
        *out_arg(out, "out")? = Box::into_raw(Box::new(StGazetteer(Gazetteer::builtin())));
        Ok(())
    })
}

/// Loads an alias table and an optional (NULL) ambiguity list.
///
/// # Safety
/// Non-null strings must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn st_gazetteer_load(
    table: *const c_char,
    ambiguity: *const c_char,
    out: *mut *mut StGazetteer,
) -> StStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let table = str_arg(table, "table")?;
        let amb = if ambiguity.is_null() {
            None
        } else {
            Some(Path::new(str_arg(ambiguity, "ambiguity")?))
        };
        *out = Box::into_raw(Box::new(StGazetteer(Gazetteer::load(Path::new(table), amb)?)));
        Ok(())
    })
}

/// # Safety
/// `gazetteer` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn st_gazetteer_free(gazetteer: *mut StGazetteer) {
    if !gazetteer.is_null() {
        drop(Box::from_raw(gazetteer));
    }
}

/// Resolves a profile location to a two-letter state code written to
/// `code[0..3]` (NUL-terminated); an empty string means unresolved.
///
/// # Safety
/// `code` must point to at least 3 writable bytes.
#[no_mangle]
pub unsafe extern "C" fn st_gazetteer_resolve(
    gazetteer: *const StGazetteer,
    location: *const c_char,
    code: *mut c_char,
) -> StStatus {
    guard(|| {
        let g = ref_arg(gazetteer, "gazetteer")?;
        let loc = str_arg(location, "location")?;
        if code.is_null() {
            return Err(Fail(StStatus::NullPointer, "code is null".into()));
        }
        let buf = std::slice::from_raw_parts_mut(code, 3);
        buf.fill(0);
        if let Some(s) = g.0.resolve(loc) {
            for (dst, b) in buf.iter_mut().zip(s.code().bytes()) {
                *dst = b as c_char;
            }
        }
        Ok(())
    })
}

/// Sample Pearson correlation of `x[0..n]` and `y[0..n]`.
///
/// # Safety
/// `x` and `y` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn st_pearson(x: *const f64, y: *const f64, n: usize, out: *mut f64) -> StStatus {
    guard(|| {
        let r = stats::pearson(slice_arg(x, n, "x")?, slice_arg(y, n, "y")?)?;
        *out_arg(out, "out")? = r;
        Ok(())
    })
}

/// Ordinary least squares of `y` on `x`.
///
/// # Safety
/// `x` and `y` must point to `n` readable doubles; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn st_least_squares(
    x: *const f64,
    y: *const f64,
    n: usize,
    slope: *mut f64,
    intercept: *mut f64,
    r_squared: *mut f64,
) -> StStatus {
    guard(|| {
        let fit = stats::least_squares(slice_arg(x, n, "x")?, slice_arg(y, n, "y")?)?;
        *out_arg(slope, "slope")? = fit.slope;
        *out_arg(intercept, "intercept")? = fit.intercept;
        *out_arg(r_squared, "r_squared")? = fit.r_squared;
        Ok(())
    })
}
