//! C ABI over `dqip-core`.
//!
//! Objects cross the boundary as opaque pointers created by `*_new` or
//! `*_run` functions and released with the matching `*_free`. Every fallible
//! call returns a [`DqipStatus`]; the message of the last failure on the
//! calling thread is available from [`dqip_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use dqip_core::cli::{run, ExperimentConfig, ExperimentReport};
use dqip_core::error::Error;
use dqip_core::ghz::{build_pghz, ghz_output_fidelity, GhzProtocolParams};
use dqip_core::network::NetworkGraph;
use dqip_core::qcore::{Gate, QuantumState};

/// Result codes. Zero is success; the rest mirror the library's error kinds.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DqipStatus {
    Ok = 0,
    Layout = 1,
    Validation = 2,
    Disconnected = 3,
    Capacity = 4,
    Protocol = 5,
    Shape = 6,
    Config = 7,
    Unsupported = 8,
    Io = 9,
    Json = 10,
    NullPointer = 11,
    InvalidUtf8 = 12,
    Panic = 13,
}

impl From<&Error> for DqipStatus {
    fn from(e: &Error) -> Self {
        match e.kind() {
            "layout" => DqipStatus::Layout,
            "validation" => DqipStatus::Validation,
            "disconnected" => DqipStatus::Disconnected,
            "capacity" => DqipStatus::Capacity,
            "protocol" => DqipStatus::Protocol,
            "shape" => DqipStatus::Shape,
            "config" => DqipStatus::Config,
            "unsupported" => DqipStatus::Unsupported,
            "io" => DqipStatus::Io,
            _ => DqipStatus::Json,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(DqipStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure((&e).into(), e.to_string())
    }
}

/// Runs `f`, records any failure and converts panics into `Panic`.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DqipStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DqipStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            DqipStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure(DqipStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    non_null(p, what)?;
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(DqipStatus::InvalidUtf8, format!("{what}: {e}")))
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dqip_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn dqip_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Pure state on a fixed number of qubits.
pub struct DqipState(QuantumState);

/// Allocates `|0...0>` on `num_qubits` qubits.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn dqip_state_new(num_qubits: usize, out: *mut *mut DqipState) -> DqipStatus {
    guard(|| {
        non_null(out, "out")?;
        if num_qubits == 0 || num_qubits > dqip_core::qcore::QUBIT_CEILING {
            return Err(Failure(
                DqipStatus::Capacity,
                format!("{num_qubits} qubits is outside 1..={}", dqip_core::qcore::QUBIT_CEILING),
            ));
        }
        *out = Box::into_raw(Box::new(DqipState(QuantumState::zero(num_qubits))));
        Ok(())
    })
}

/// Releases a state. Null is ignored.
///
/// # Safety
/// `state` must come from [`dqip_state_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dqip_state_free(state: *mut DqipState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Applies a named gate (`h`, `x`, `z`, `cnot`, `cz`, `swap`, `cswap`).
/// Multi-qubit gates take `[control, target]` or `[control, a, b]`.
///
/// # Safety
/// `state` must be live, `name` a NUL-terminated string and `targets` point
/// to `num_targets` entries.
#[no_mangle]
pub unsafe extern "C" fn dqip_state_apply(
    state: *mut DqipState,
    name: *const c_char,
    targets: *const usize,
    num_targets: usize,
) -> DqipStatus {
    guard(|| {
        non_null(state, "state")?;
        non_null(targets, "targets")?;
        let gate = match read_str(name, "name")? {
            "h" => Gate::h(),
            "x" => Gate::x(),
            "z" => Gate::z(),
            "cnot" => Gate::cnot(),
            "cz" => Gate::cz(),
            "swap" => Gate::swap(),
            "cswap" => Gate::cswap(),
            other => return Err(Failure(DqipStatus::Validation, format!("unknown gate {other:?}"))),
        };
        let targets = std::slice::from_raw_parts(targets, num_targets);
        (*state).0.apply(&gate, targets)?;
        Ok(())
    })
}

/// Probability that measuring `qubit` gives 1.
///
/// # Safety
/// `state` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dqip_state_prob_one(state: *const DqipState, qubit: usize, out: *mut f64) -> DqipStatus {
    guard(|| {
        non_null(state, "state")?;
        non_null(out, "out")?;
        let s = &(*state).0;
        if qubit >= s.num_qubits() {
            return Err(Failure(DqipStatus::Layout, format!("qubit {qubit} out of range")));
        }
        *out = s.prob_one(qubit);
        Ok(())
    })
}

/// Fidelity `|<a|b>|` of two states of equal size.
///
/// # Safety
/// Both states must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dqip_state_fidelity(a: *const DqipState, b: *const DqipState, out: *mut f64) -> DqipStatus {
    guard(|| {
        non_null(a, "a")?;
        non_null(b, "b")?;
        non_null(out, "out")?;
        *out = (*a).0.inner(&(*b).0)?.norm();
        Ok(())
    })
}

/// Honest run of the GHZ certification protocol on a path of `nodes` nodes
/// with `copies` test copies per node.
///
/// # Safety
/// `acceptance` and `output_fidelity` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dqip_ghz_certify_path(
    nodes: usize,
    copies: usize,
    acceptance: *mut f64,
    output_fidelity: *mut f64,
) -> DqipStatus {
    guard(|| {
        non_null(acceptance, "acceptance")?;
        non_null(output_fidelity, "output_fidelity")?;
        if nodes == 0 {
            return Err(Failure(DqipStatus::Validation, "a network needs at least one node".into()));
        }
        let params = GhzProtocolParams {
            nodes,
            copies,
            epsilon: 0.1,
            delta: 0.1,
            seed: 0,
        };
        let (spec, honest) = build_pghz(&NetworkGraph::path(nodes), &params)?;
        let (p, f) = ghz_output_fidelity(&spec, &honest)?;
        *acceptance = p;
        *output_fidelity = f;
        Ok(())
    })
}

/// Result of one experiment config.
pub struct DqipReport {
    report: ExperimentReport,
    json: CString,
    csv: CString,
}

/// Runs an experiment given as JSON text.
///
/// # Safety
/// `config_json` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dqip_run(config_json: *const c_char, out: *mut *mut DqipReport) -> DqipStatus {
    guard(|| {
        non_null(out, "out")?;
        let config = ExperimentConfig::from_json(read_str(config_json, "config_json")?)?;
        let report = run(&config)?;
        let json = CString::new(report.to_json()?).expect("JSON has no NUL");
        let csv = CString::new(report.to_csv()?).expect("CSV has no NUL");
        *out = Box::into_raw(Box::new(DqipReport { report, json, csv }));
        Ok(())
    })
}

/// Scalar metric of a report by name.
///
/// # Safety
/// `report` must be live, `name` NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dqip_report_metric(
    report: *const DqipReport,
    name: *const c_char,
    out: *mut f64,
) -> DqipStatus {
    guard(|| {
        non_null(report, "report")?;
        non_null(out, "out")?;
        let name = read_str(name, "name")?;
        match (*report).report.metrics.get(name) {
            Some(v) => {
                *out = *v;
                Ok(())
            }
            None => Err(Failure(DqipStatus::Validation, format!("no metric {name:?}"))),
        }
    })
}

/// JSON text of a report, owned by the report.
///
/// # Safety
/// `report` must be live; the string dies with it.
#[no_mangle]
pub unsafe extern "C" fn dqip_report_json(report: *const DqipReport) -> *const c_char {
    if report.is_null() {
        return std::ptr::null();
    }
    (*report).json.as_ptr()
}

/// CSV text of a report, owned by the report.
///
/// # Safety
/// `report` must be live; the string dies with it.
#[no_mangle]
pub unsafe extern "C" fn dqip_report_csv(report: *const DqipReport) -> *const c_char {
    if report.is_null() {
        return std::ptr::null();
    }
    (*report).csv.as_ptr()
}

/// Releases a report. Null is ignored.
///
/// # Safety
/// `report` must come from [`dqip_run`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dqip_report_free(report: *mut DqipReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
