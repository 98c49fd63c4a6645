//! C ABI over the ordex library.
//!
//! Every fallible function returns an [`OrdexStatus`]; on failure the message
//! is available from [`ordex_last_error`] on the same thread. Strings handed
//! out by the library must be released with [`ordex_string_free`]; handles
//! with their matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use ordex::distill::DistilledText;
use ordex::eval::{metrics, ConfusionCounts};
use ordex::gateway::{GenerationParams, ScriptedBackend};
use ordex::ingest::Jurisdiction;
use ordex::ordinance::{
    build_wind_tree_with, effective_setback, extract_ordinances, parse_setback_statement,
    ExtractConfig, FeatureType, ReferenceTurbine, SetbackSpec,
};
use ordex::text::{estimate_tokens, ngram_similarity};
use ordex::tree::{run, validate, ConversationGraph};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrdexStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    /// The input was valid but yields no value (e.g. an unresolved setback).
    NoValue = 4,
    RunFailed = 5,
    Panic = 6,
}

/// Accuracy, precision and recall as fractions; NaN when undefined.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct OrdexMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Opaque decision-tree handle.
pub struct OrdexGraph {
    graph: ConversationGraph,
}

/// Opaque scripted-backend handle.
pub struct OrdexBackend {
    backend: ScriptedBackend,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(OrdexStatus, String);

type FfiResult<T> = Result<T, Failure>;

fn invalid(e: impl std::fmt::Display) -> Failure {
    Failure(OrdexStatus::InvalidInput, e.to_string())
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Run `f`, recording any failure or panic as the thread's last error.
fn guard(f: impl FnOnce() -> FfiResult<()>) -> OrdexStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            OrdexStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_last_error(&format!("internal error: {msg}"));
            OrdexStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(Failure(
            OrdexStatus::NullArgument,
            format!("{name} is null"),
        ));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        Failure(
            OrdexStatus::InvalidUtf8,
            format!("{name} is not valid UTF-8"),
        )
    })
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> FfiResult<&'a T> {
    p.as_ref()
        .ok_or_else(|| Failure(OrdexStatus::NullArgument, format!("{name} is null")))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> FfiResult<()> {
    if out.is_null() {
        return Err(Failure(
            OrdexStatus::NullArgument,
            "output pointer is null".into(),
        ));
    }
    out.write(value);
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> FfiResult<()> {
    let c = CString::new(s).map_err(|_| invalid("output contains a NUL byte"))?;
    write_out(out, c.into_raw())
}

fn to_json(v: &impl serde::Serialize) -> FfiResult<String> {
    serde_json::to_string(v).map_err(|e| Failure(OrdexStatus::RunFailed, e.to_string()))
}

fn turbine(hub_height_ft: f64, blade_length_ft: f64) -> FfiResult<ReferenceTurbine> {
    ReferenceTurbine::new(hub_height_ft, blade_length_ft).map_err(invalid)
}

fn feature(name: &str) -> FfiResult<FeatureType> {
    name.parse().map_err(invalid)
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn ordex_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn ordex_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Release a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ordex_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Fraction of the candidate's distinct n-grams found in the source.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ordex_ngram_similarity(
    candidate: *const c_char,
    source: *const c_char,
    n: usize,
    out: *mut f64,
) -> OrdexStatus {
    guard(|| {
        let cand = str_arg(candidate, "candidate")?;
        let src = str_arg(source, "source")?;
        if n == 0 {
            return Err(invalid("n must be at least 1"));
        }
        write_out(out, ngram_similarity(cand, src, n))
    })
}

/// Token estimate used for chunk budgets.
///
/// # Safety
/// `text` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ordex_estimate_tokens(
    text: *const c_char,
    out: *mut usize,
) -> OrdexStatus {
    guard(|| write_out(out, estimate_tokens(str_arg(text, "text")?)))
}

/// Effective setback in feet for a JSON setback spec and reference turbine.
///
/// # Safety
/// `spec_json` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ordex_effective_setback(
    spec_json: *const c_char,
    hub_height_ft: f64,
    blade_length_ft: f64,
    out: *mut f64,
) -> OrdexStatus {
    guard(|| {
        let spec: SetbackSpec =
            serde_json::from_str(str_arg(spec_json, "spec_json")?).map_err(invalid)?;
        spec.validate().map_err(invalid)?;
        let t = turbine(hub_height_ft, blade_length_ft)?;
        let feet = effective_setback(&spec, &t)
            .ok_or_else(|| Failure(OrdexStatus::NoValue, "setback has no value in feet".into()))?;
        write_out(out, feet)
    })
}

/// Parse a final answer such as "The setback is 1,250 feet." into
/// `{"value": 1250.0, "unit": "feet"}`.
///
/// # Safety
/// `text` must be NUL-terminated; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ordex_parse_setback_statement(
    text: *const c_char,
    out_json: *mut *mut c_char,
) -> OrdexStatus {
    guard(|| {
        let (value, unit) = parse_setback_statement(str_arg(text, "text")?).map_err(invalid)?;
        write_string(
            out_json,
            to_json(&serde_json::json!({ "value": value, "unit": unit }))?,
        )
    })
}

/// Metrics from confusion counts.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ordex_metrics(
    correct_tp: u64,
    incorrect_tp: u64,
    false_negative: u64,
    false_positive: u64,
    true_negative: u64,
    out: *mut OrdexMetrics,
) -> OrdexStatus {
    guard(|| {
        let m = metrics(&ConfusionCounts::new(
            correct_tp,
            incorrect_tp,
            false_negative,
            false_positive,
            true_negative,
        ));
        write_out(
            out,
            OrdexMetrics {
                accuracy: m.accuracy.unwrap_or(f64::NAN),
                precision: m.precision.unwrap_or(f64::NAN),
                recall: m.recall.unwrap_or(f64::NAN),
            },
        )
    })
}

/// Load a tree from TOML. The graph is not validated; see
/// [`ordex_graph_validate`].
///
/// # Safety
/// `toml` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ordex_graph_from_toml(
    toml: *const c_char,
    out: *mut *mut OrdexGraph,
) -> OrdexStatus {
    guard(|| {
        let graph = ConversationGraph::from_toml(str_arg(toml, "toml")?).map_err(invalid)?;
        write_out(out, Box::into_raw(Box::new(OrdexGraph { graph })))
    })
}

/// The built-in tree for a feature (e.g. "structures_nonparticipating").
///
/// # Safety
/// `feature_name` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ordex_graph_builtin(
    feature_name: *const c_char,
    hub_height_ft: f64,
    blade_length_ft: f64,
    out: *mut *mut OrdexGraph,
) -> OrdexStatus {
    guard(|| {
        let f = feature(str_arg(feature_name, "feature")?)?;
        let graph = build_wind_tree_with(f, &turbine(hub_height_ft, blade_length_ft)?);
        write_out(out, Box::into_raw(Box::new(OrdexGraph { graph })))
    })
}

/// Structural problems as a JSON array of messages; `[]` when valid.
///
/// # Safety
/// `graph` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ordex_graph_validate(
    graph: *const OrdexGraph,
    out_json: *mut *mut c_char,
) -> OrdexStatus {
    guard(|| {
        let g = ref_arg(graph, "graph")?;
        let messages: Vec<String> = validate(&g.graph).iter().map(|v| v.to_string()).collect();
        write_string(out_json, to_json(&messages)?)
    })
}

/// Serialize a tree to TOML. Trees with custom prompts or conditions fail
/// with `InvalidInput`.
///
/// # Safety
/// `graph` must be a live handle; `out_toml` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ordex_graph_to_toml(
    graph: *const OrdexGraph,
    out_toml: *mut *mut c_char,
) -> OrdexStatus {
    guard(|| {
        let g = ref_arg(graph, "graph")?;
        write_string(out_toml, g.graph.to_toml().map_err(invalid)?)
    })
}

/// # Safety
/// `graph` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ordex_graph_free(graph: *mut OrdexGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// An empty scripted backend; add replies with [`ordex_backend_add`].
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ordex_backend_scripted_new(out: *mut *mut OrdexBackend) -> OrdexStatus {
    guard(|| {
        write_out(
            out,
            Box::into_raw(Box::new(OrdexBackend {
                backend: ScriptedBackend::keyed(),
            })),
        )
    })
}

/// A scripted backend loaded from every `*.json` script in `dir`.
///
/// # Safety
/// `dir` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ordex_backend_scripted_from_dir(
    dir: *const c_char,
    out: *mut *mut OrdexBackend,
) -> OrdexStatus {
    guard(|| {
        let backend = ScriptedBackend::from_dir(str_arg(dir, "dir")?.as_ref()).map_err(invalid)?;
        write_out(out, Box::into_raw(Box::new(OrdexBackend { backend })))
    })
}

/// Reply `response` to a user message equal to `user`, or containing it
/// when `contains` is nonzero.
///
/// # Safety
/// `backend` must be a live handle not in use by another thread.
#[no_mangle]
pub unsafe extern "C" fn ordex_backend_add(
    backend: *mut OrdexBackend,
    user: *const c_char,
    response: *const c_char,
    contains: c_int,
) -> OrdexStatus {
    guard(|| {
        let b = backend
            .as_mut()
            .ok_or_else(|| Failure(OrdexStatus::NullArgument, "backend is null".into()))?;
        let user = str_arg(user, "user")?;
        let response = str_arg(response, "response")?;
        let current = std::mem::replace(&mut b.backend, ScriptedBackend::keyed());
        b.backend = if contains != 0 {
            current.on_containing(user, response)
        } else {
            current.on(user, response)
        };
        Ok(())
    })
}

/// Requests the backend has received. Returns 0 for a null handle.
///
/// # Safety
/// `backend` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ordex_backend_calls(backend: *const OrdexBackend) -> usize {
    backend.as_ref().map_or(0, |b| b.backend.calls())
}

/// # Safety
/// `backend` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ordex_backend_free(backend: *mut OrdexBackend) {
    if !backend.is_null() {
        drop(Box::from_raw(backend));
    }
}

/// Walk `graph` over `text`; the outcome (leaf or no-match, with path and
/// transcript) is written as JSON.
///
/// # Safety
/// Handles must be live; strings NUL-terminated; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn ordex_run(
    graph: *const OrdexGraph,
    text: *const c_char,
    feature_name: *const c_char,
    backend: *const OrdexBackend,
    out_json: *mut *mut c_char,
) -> OrdexStatus {
    guard(|| {
        let g = ref_arg(graph, "graph")?;
        let b = ref_arg(backend, "backend")?;
        let f = feature(str_arg(feature_name, "feature")?)?;
        let outcome = run(
            &g.graph,
            str_arg(text, "text")?,
            f,
            &b.backend,
            &GenerationParams::default(),
        )
        .map_err(|e| Failure(OrdexStatus::RunFailed, e.to_string()))?;
        write_string(out_json, to_json(&outcome)?)
    })
}

/// Extract ordinance records from distilled text with the built-in trees.
/// `features` is "all" or a comma-separated list. Writes a JSON array of
/// records in `features` order.
///
/// # Safety
/// `backend` must be a live handle; strings NUL-terminated; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn ordex_extract(
    county: *const c_char,
    state: *const c_char,
    distilled_text: *const c_char,
    features: *const c_char,
    backend: *const OrdexBackend,
    out_json: *mut *mut c_char,
) -> OrdexStatus {
    guard(|| {
        let jurisdiction = Jurisdiction::new(str_arg(county, "county")?, str_arg(state, "state")?)
            .map_err(invalid)?;
        let list = str_arg(features, "features")?;
        let features: Vec<FeatureType> = if list.trim() == "all" {
            FeatureType::ALL.to_vec()
        } else {
            list.split(',')
                .map(|s| feature(s.trim()))
                .collect::<FfiResult<_>>()?
        };
        let b = ref_arg(backend, "backend")?;
        let distilled = DistilledText {
            jurisdiction,
            excerpts: Vec::new(),
            combined: str_arg(distilled_text, "distilled_text")?.to_string(),
        };
        let records =
            extract_ordinances(&distilled, &features, &b.backend, &ExtractConfig::default());
        write_string(out_json, to_json(&records)?)
    })
}
