//! C interface to fairlens.
//!
//! Every function returns an [`FlStatus`]. On failure a message is available
//! from [`fl_last_error`] on the same thread until the next call. Strings
//! handed out through `out` parameters are owned by the caller and must be
//! released with [`fl_string_free`]; handles are released with their
//! matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fairlens::metamorphic::{attribute_usage, interpret, synthesize_full_suite, synthesize_suite, MetamorphicSuite};
use fairlens::metrics::{bls, cbs, pass_at_attribute, welch_t_test, Corpus, MetricsReport, SnippetRecord};
use fairlens::prompt::{render_prompt, PromptStrategy};
use fairlens::sandbox::{execute_snippet, BuiltinExecutor, DEFAULT_TIMEOUT_SECS};
use fairlens::task::{parse_task_unchecked, validate_task, TaskDefinition};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidArgument = 4,
    MetricUndefined = 5,
    ExecutionError = 6,
    Panic = 7,
}

/// A parsed task definition.
pub struct FlTask {
    inner: TaskDefinition,
}

/// A metamorphic test suite for one task.
pub struct FlSuite {
    inner: MetamorphicSuite,
}

/// A collection of snippet records for metric computation.
pub struct FlCorpus {
    inner: Corpus,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(FlStatus, String);

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FlStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FlStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            FlStatus::Panic
        }
    }
}

fn fail<T>(status: FlStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, msg.into()))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return fail(FlStatus::NullPointer, format!("`{name}` is null"));
    }
    CStr::from_ptr(p).to_str().or_else(|_| fail(FlStatus::InvalidUtf8, format!("`{name}` is not valid UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure(FlStatus::NullPointer, format!("`{name}` is null")))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return fail(FlStatus::NullPointer, "output pointer is null");
    }
    out.write(value);
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s).or_else(|_| fail(FlStatus::InvalidArgument, "result contains a nul byte"))?;
    put(out, c.into_raw())
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("value serializes")
}

/// Message describing the last failure on this thread, or null. The pointer
/// stays valid until the next fairlens call on the same thread.
#[no_mangle]
pub extern "C" fn fl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn fl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a task document. Schema errors fail; neutrality rules are checked
/// separately with [`fl_task_validate`].
///
/// # Safety
/// `json_text` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fl_task_parse(json_text: *const c_char, out: *mut *mut FlTask) -> FlStatus {
    guard(|| {
        let t = text(json_text, "json_text")?;
        let task = parse_task_unchecked(t).or_else(|e| fail(FlStatus::ParseError, e.to_string()))?;
        put(out, Box::into_raw(Box::new(FlTask { inner: task })))
    })
}

/// # Safety
/// `task` must come from [`fl_task_parse`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fl_task_free(task: *mut FlTask) {
    if !task.is_null() {
        drop(Box::from_raw(task));
    }
}

/// Writes the task id.
///
/// # Safety
/// `task` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fl_task_id(task: *const FlTask, out: *mut *mut c_char) -> FlStatus {
    guard(|| put_string(out, handle(task, "task")?.inner.task_id.clone()))
}

/// Writes the rule violations as a JSON array (empty when valid).
///
/// # Safety
/// `task` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fl_task_validate(task: *const FlTask, out_json: *mut *mut c_char) -> FlStatus {
    guard(|| {
        let v: Vec<String> = validate_task(&handle(task, "task")?.inner).iter().map(|v| v.to_string()).collect();
        put_string(out_json, json(&v))
    })
}

/// Renders the code prompt for `strategy` (`default`, `cot` or `pcot`).
///
/// # Safety
/// `task` must be a live handle, `strategy` a nul-terminated string and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fl_prompt_render(task: *const FlTask, strategy: *const c_char, out: *mut *mut c_char) -> FlStatus {
    guard(|| {
        let task = handle(task, "task")?;
        let s: PromptStrategy = text(strategy, "strategy")?.parse().or_else(|e| fail(FlStatus::InvalidArgument, format!("{e}")))?;
        put_string(out, render_prompt(&task.inner, s).rendered_text)
    })
}

/// Samples a suite of at most `budget` tuples.
///
/// # Safety
/// `task` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fl_suite_synthesize(task: *const FlTask, budget: usize, seed: u64, out: *mut *mut FlSuite) -> FlStatus {
    guard(|| {
        let suite =
            synthesize_suite(&handle(task, "task")?.inner, budget, seed).or_else(|e| fail(FlStatus::InvalidArgument, e.to_string()))?;
        put(out, Box::into_raw(Box::new(FlSuite { inner: suite })))
    })
}

/// Builds the exhaustive suite over every non-sensitive combination.
///
/// # Safety
/// `task` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fl_suite_full(task: *const FlTask, out: *mut *mut FlSuite) -> FlStatus {
    guard(|| {
        let suite = synthesize_full_suite(&handle(task, "task")?.inner).or_else(|e| fail(FlStatus::InvalidArgument, e.to_string()))?;
        put(out, Box::into_raw(Box::new(FlSuite { inner: suite })))
    })
}

/// Number of tuples in the suite.
///
/// # Safety
/// `suite` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fl_suite_len(suite: *const FlSuite, out: *mut usize) -> FlStatus {
    guard(|| put(out, handle(suite, "suite")?.inner.tuples.len()))
}

/// # Safety
/// `suite` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fl_suite_to_json(suite: *const FlSuite, out_json: *mut *mut c_char) -> FlStatus {
    guard(|| put_string(out_json, handle(suite, "suite")?.inner.to_json()))
}

/// # Safety
/// `suite` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fl_suite_free(suite: *mut FlSuite) {
    if !suite.is_null() {
        drop(Box::from_raw(suite));
    }
}

/// Runs `code` against `suite` with the built-in interpreter and writes a
/// snippet record as JSON: executability, the bias verdict and attribute
/// usage. The record can be fed to [`fl_corpus_add_json`].
///
/// # Safety
/// Handles must be live, strings nul-terminated and `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn fl_snippet_evaluate(
    task: *const FlTask,
    suite: *const FlSuite,
    snippet_id: *const c_char,
    code: *const c_char,
    out_json: *mut *mut c_char,
) -> FlStatus {
    guard(|| {
        let task = &handle(task, "task")?.inner;
        let suite = &handle(suite, "suite")?.inner;
        let id = text(snippet_id, "snippet_id")?;
        let code = text(code, "code")?;
        if suite.task_id != task.task_id {
            return fail(FlStatus::InvalidArgument, "suite was built for a different task");
        }
        let verdict = execute_snippet(&BuiltinExecutor::default(), id, task, code, suite, DEFAULT_TIMEOUT_SECS)
            .or_else(|e| fail(FlStatus::ExecutionError, e.to_string()))?;
        let bias = if verdict.executable {
            Some(interpret(&verdict, suite).or_else(|e| fail(FlStatus::ExecutionError, e.to_string()))?)
        } else {
            None
        };
        let record = SnippetRecord {
            snippet: id.to_string(),
            task_id: task.task_id.clone(),
            executable: verdict.executable,
            bias,
            usage: attribute_usage(id, code, task).ok(),
        };
        put_string(out_json, json(&record))
    })
}

/// Classifies each task attribute as TP, TN, FP or FN for `code`; JSON out.
///
/// # Safety
/// `task` must be live, strings nul-terminated and `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn fl_attribute_usage(
    task: *const FlTask,
    snippet_id: *const c_char,
    code: *const c_char,
    out_json: *mut *mut c_char,
) -> FlStatus {
    guard(|| {
        let task = &handle(task, "task")?.inner;
        let usage = attribute_usage(text(snippet_id, "snippet_id")?, text(code, "code")?, task)
            .or_else(|e| fail(FlStatus::ParseError, e.to_string()))?;
        put_string(out_json, json(&usage))
    })
}

/// Creates an empty corpus.
///
/// # Safety
/// `label` must be nul-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fl_corpus_new(label: *const c_char, out: *mut *mut FlCorpus) -> FlStatus {
    guard(|| {
        let label = text(label, "label")?;
        put(out, Box::into_raw(Box::new(FlCorpus { inner: Corpus::new(label, Vec::new()) })))
    })
}

/// Appends a snippet record given as JSON.
///
/// # Safety
/// `corpus` must be a live handle; `record_json` must be nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn fl_corpus_add_json(corpus: *mut FlCorpus, record_json: *const c_char) -> FlStatus {
    guard(|| {
        let c = corpus.as_mut().ok_or_else(|| Failure(FlStatus::NullPointer, "`corpus` is null".into()))?;
        let rec: SnippetRecord =
            serde_json::from_str(text(record_json, "record_json")?).or_else(|e| fail(FlStatus::ParseError, e.to_string()))?;
        c.inner.records.push(rec);
        Ok(())
    })
}

/// # Safety
/// `corpus` must come from [`fl_corpus_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fl_corpus_free(corpus: *mut FlCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Code bias score in percent, overall when `dimension` is null.
///
/// # Safety
/// `corpus` must be live; `dimension` null or nul-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fl_metric_cbs(corpus: *const FlCorpus, dimension: *const c_char, out: *mut f64) -> FlStatus {
    guard(|| {
        let c = handle(corpus, "corpus")?;
        let dim = if dimension.is_null() { None } else { Some(text(dimension, "dimension")?) };
        let v = cbs(&c.inner, dim).or_else(|e| fail(FlStatus::MetricUndefined, e.to_string()))?;
        put(out, v)
    })
}

/// Per-value favored ratios of one dimension as JSON.
///
/// # Safety
/// `corpus` must be live; `dimension` nul-terminated; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn fl_metric_bls(corpus: *const FlCorpus, dimension: *const c_char, out_json: *mut *mut c_char) -> FlStatus {
    guard(|| {
        let c = handle(corpus, "corpus")?;
        let m = bls(&c.inner, text(dimension, "dimension")?).or_else(|e| fail(FlStatus::InvalidArgument, e.to_string()))?;
        put_string(out_json, json(&m))
    })
}

/// # Safety
/// `corpus` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fl_metric_pass_at_attribute(corpus: *const FlCorpus, out: *mut f64) -> FlStatus {
    guard(|| {
        let v = pass_at_attribute(&handle(corpus, "corpus")?.inner).or_else(|e| fail(FlStatus::MetricUndefined, e.to_string()))?;
        put(out, v)
    })
}

/// Full metrics report of the corpus as JSON.
///
/// # Safety
/// `corpus` must be live; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn fl_corpus_report(corpus: *const FlCorpus, out_json: *mut *mut c_char) -> FlStatus {
    guard(|| put_string(out_json, json(&MetricsReport::from_corpus(&handle(corpus, "corpus")?.inner))))
}

/// Welch's two-sample t-test with a two-sided p-value.
///
/// # Safety
/// `a` and `b` must point to `na` and `nb` readable doubles; outputs must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn fl_welch_t_test(a: *const f64, na: usize, b: *const f64, nb: usize, out_t: *mut f64, out_p: *mut f64) -> FlStatus {
    guard(|| {
        if a.is_null() || b.is_null() {
            return fail(FlStatus::NullPointer, "sample pointer is null");
        }
        let (xs, ys) = (std::slice::from_raw_parts(a, na), std::slice::from_raw_parts(b, nb));
        let r = welch_t_test(xs, ys).or_else(|e| fail(FlStatus::InvalidArgument, e.to_string()))?;
        put(out_t, r.t)?;
        put(out_p, r.p_value)
    })
}

/// Library version, statically allocated.
#[no_mangle]
pub extern "C" fn fl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
