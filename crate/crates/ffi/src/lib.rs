//! C ABI for tessvote.
//!
//! Every fallible function returns a [`TvStatus`]; on failure the message is
//! available from [`tv_last_error_message`] on the same thread. Objects are
//! opaque handles released with their `_free` function. Strings returned
//! through `out` pointers are owned by the caller and released with
//! [`tv_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use tessvote::analysis::{classify, error_bound, make_flow, verify_flows, Classification};
use tessvote::automaton::{build_automaton, weakening_rule, AutomatonSpec, BoundaryPolicy};
use tessvote::faults::FaultConfig;
use tessvote::simulate::monte_carlo;
use tessvote::tessellation::{audit_tessellation, build_tessellation, FaceDegree, Tessellation, TessellationSpec};
use tessvote::Error;

/// Pass as `p` to request the infinite-face tessellation (a tree).
pub const TV_P_INFINITE: u32 = 0;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    SphericalUnsupported = 3,
    BudgetExceeded = 4,
    NotApplicable = 5,
    OutsidePositiveRegion = 6,
    InsufficientMargin = 7,
    DomainError = 8,
    BufferTooSmall = 9,
    Internal = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TvBoundary {
    Adversarial = 0,
    FrozenZero = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TvClass {
    None = 0,
    TransientOnly = 1,
    Combined = 2,
}

/// Opaque handle to a built tessellation.
pub struct TvTessellation {
    inner: Arc<Tessellation>,
}

/// Opaque handle to a voting automaton on a tessellation.
pub struct TvAutomaton {
    inner: AutomatonSpec,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> TvStatus {
    match e {
        Error::SphericalUnsupported { .. } | Error::SphericalClosure { .. } => TvStatus::SphericalUnsupported,
        Error::BudgetExceeded { .. } => TvStatus::BudgetExceeded,
        Error::InvalidSpec(_) | Error::UnknownVertex(_) | Error::ShapeMismatch { .. } => TvStatus::InvalidArgument,
        Error::NotApplicable(_)
        | Error::WrongFamily(_)
        | Error::WeakeningNotApplicable { .. }
        | Error::FaceDegreeNot4 { .. }
        | Error::NotInvariant { .. } => TvStatus::NotApplicable,
        Error::OutsidePositiveRegion { .. } => TvStatus::OutsidePositiveRegion,
        Error::InsufficientMargin(_) | Error::BoundaryVertex(_) => TvStatus::InsufficientMargin,
        Error::DomainError(_) | Error::RootNotInError { .. } => TvStatus::DomainError,
        _ => TvStatus::Internal,
    }
}

/// Run `f`, translating errors and panics into a status and the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), (TvStatus, String)>) -> TvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            TvStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside tessvote");
            TvStatus::Panic
        }
    }
}

fn lib<T>(r: tessvote::Result<T>) -> Result<T, (TvStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (TvStatus, String) {
    (TvStatus::NullPointer, format!("{what} is null"))
}

fn face_degree(p: u32) -> FaceDegree {
    if p == TV_P_INFINITE {
        FaceDegree::Infinite
    } else {
        FaceDegree::Finite(p)
    }
}

fn into_c_string(s: String) -> Result<*mut c_char, (TvStatus, String)> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| (TvStatus::Internal, "string contains a NUL byte".into()))
}

/// Message of the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn tv_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn tv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Build the truncation of {p,q} with `generations` generations.
/// `p` = TV_P_INFINITE selects the tree; `budget` = 0 keeps the default vertex budget.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn tv_tessellation_build(
    p: u32,
    q: u32,
    generations: u32,
    budget: usize,
    out: *mut *mut TvTessellation,
) -> TvStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let mut spec = TessellationSpec::new(face_degree(p), q, generations);
        if budget > 0 {
            spec = spec.with_budget(budget);
        }
        let t = lib(build_tessellation(&spec))?;
        *out = Box::into_raw(Box::new(TvTessellation { inner: Arc::new(t) }));
        Ok(())
    })
}

/// # Safety
/// `t` must come from [`tv_tessellation_build`] and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn tv_tessellation_free(t: *mut TvTessellation) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Number of vertices, or 0 for a null handle.
///
/// # Safety
/// `t` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tv_tessellation_vertex_count(t: *const TvTessellation) -> usize {
    t.as_ref().map_or(0, |t| t.inner.vertex_count())
}

/// Number of edges, or 0 for a null handle.
///
/// # Safety
/// `t` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tv_tessellation_edge_count(t: *const TvTessellation) -> usize {
    t.as_ref().map_or(0, |t| t.inner.edge_count())
}

/// Generation (graph distance from the origin) of vertex `v`.
///
/// # Safety
/// `t` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tv_tessellation_generation(t: *const TvTessellation, v: u32, out: *mut u32) -> TvStatus {
    guard(|| {
        let t = t.as_ref().ok_or_else(|| null("tessellation"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = lib(t.inner.vertex(v))?.generation;
        Ok(())
    })
}

/// Neighbors of `v` in clockwise rotation order. Writes the degree to `len`;
/// returns BufferTooSmall (with `len` set) when `cap` is insufficient.
///
/// # Safety
/// `t` must be a live handle, `buf` must hold `cap` elements (may be null when `cap` is 0), `len` writable.
#[no_mangle]
pub unsafe extern "C" fn tv_tessellation_neighbors(
    t: *const TvTessellation,
    v: u32,
    buf: *mut u32,
    cap: usize,
    len: *mut usize,
) -> TvStatus {
    guard(|| {
        let t = t.as_ref().ok_or_else(|| null("tessellation"))?;
        if len.is_null() {
            return Err(null("len"));
        }
        lib(t.inner.vertex(v))?;
        let ns: Vec<u32> = t.inner.neighbors(v).collect();
        *len = ns.len();
        if ns.len() > cap {
            return Err((TvStatus::BufferTooSmall, format!("need {} slots, got {cap}", ns.len())));
        }
        if !ns.is_empty() {
            if buf.is_null() {
                return Err(null("buf"));
            }
            ptr::copy_nonoverlapping(ns.as_ptr(), buf, ns.len());
        }
        Ok(())
    })
}

/// Run the structural audit; writes whether it passed and, if `report` is non-null, its JSON.
///
/// # Safety
/// `t` must be a live handle; `pass` writable; `report` null or writable.
#[no_mangle]
pub unsafe extern "C" fn tv_tessellation_audit(
    t: *const TvTessellation,
    pass: *mut bool,
    report: *mut *mut c_char,
) -> TvStatus {
    guard(|| {
        let t = t.as_ref().ok_or_else(|| null("tessellation"))?;
        if pass.is_null() {
            return Err(null("pass"));
        }
        let r = audit_tessellation(&t.inner);
        *pass = r.pass;
        if !report.is_null() {
            *report = into_c_string(lib(serde_json::to_string(&r).map_err(Error::from))?)?;
        }
        Ok(())
    })
}

/// Serialize the tessellation to JSON.
///
/// # Safety
/// `t` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tv_tessellation_to_json(t: *const TvTessellation, out: *mut *mut c_char) -> TvStatus {
    guard(|| {
        let t = t.as_ref().ok_or_else(|| null("tessellation"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = into_c_string(lib(t.inner.to_json())?)?;
        Ok(())
    })
}

/// Majority automaton on `t`. With `weakened`, the weakening rule for {p,q} is applied.
/// The automaton keeps its own reference to the tessellation.
///
/// # Safety
/// `t` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tv_automaton_build(
    t: *const TvTessellation,
    weakened: bool,
    speedup: u32,
    out: *mut *mut TvAutomaton,
) -> TvStatus {
    guard(|| {
        let t = t.as_ref().ok_or_else(|| null("tessellation"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let rule = if weakened {
            Some(lib(weakening_rule(t.inner.p(), t.inner.q()))?)
        } else {
            None
        };
        let spec = lib(build_automaton(t.inner.clone(), rule, speedup))?;
        *out = Box::into_raw(Box::new(TvAutomaton { inner: spec }));
        Ok(())
    })
}

/// # Safety
/// `a` must come from [`tv_automaton_build`] and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn tv_automaton_free(a: *mut TvAutomaton) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

/// Full and reduced vote thresholds of cell `v`.
///
/// # Safety
/// `a` must be a live handle; `threshold` and `reduced` writable.
#[no_mangle]
pub unsafe extern "C" fn tv_automaton_threshold(
    a: *const TvAutomaton,
    v: u32,
    threshold: *mut u32,
    reduced: *mut u32,
) -> TvStatus {
    guard(|| {
        let a = a.as_ref().ok_or_else(|| null("automaton"))?;
        if threshold.is_null() || reduced.is_null() {
            return Err(null("output"));
        }
        if v as usize >= a.inner.cell_count() {
            return Err((TvStatus::InvalidArgument, format!("unknown vertex {v}")));
        }
        *threshold = a.inner.threshold(v);
        *reduced = a.inner.reduced_threshold(v);
        Ok(())
    })
}

/// Monte Carlo origin error rate for t = 0..=steps, written to `rates` (steps + 1 entries).
/// `workers` = 0 uses the global pool.
///
/// # Safety
/// `a` must be a live handle and `rates` must hold `steps + 1` doubles.
#[no_mangle]
pub unsafe extern "C" fn tv_monte_carlo(
    a: *const TvAutomaton,
    alpha: f64,
    beta: f64,
    seed: u64,
    steps: u32,
    trials: usize,
    boundary: TvBoundary,
    workers: usize,
    rates: *mut f64,
) -> TvStatus {
    guard(|| {
        let a = a.as_ref().ok_or_else(|| null("automaton"))?;
        if rates.is_null() {
            return Err(null("rates"));
        }
        let config = lib(FaultConfig::new(alpha, beta, seed))?;
        let policy = match boundary {
            TvBoundary::Adversarial => BoundaryPolicy::AdversarialBoundary,
            TvBoundary::FrozenZero => BoundaryPolicy::FrozenZero,
        };
        let curve = lib(monte_carlo(&a.inner, &config, steps, trials, policy, (workers > 0).then_some(workers)))?;
        for (i, p) in curve.points.iter().enumerate() {
            *rates.add(i) = p.error_rate;
        }
        Ok(())
    })
}

/// Fault-tolerance class of {p,q}.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tv_classify(p: u32, q: u32, out: *mut TvClass) -> TvStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = match lib(classify(face_degree(p), q))? {
            Classification::None => TvClass::None,
            Classification::TransientOnly => TvClass::TransientOnly,
            Classification::Combined => TvClass::Combined,
        };
        Ok(())
    })
}

/// Bound q^{2qM+1} eps / (1 - q^{2qM} eps), capped at 1.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tv_error_bound(q: u32, m: f64, eps: f64, out: *mut f64) -> TvStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = lib(error_bound(q, m, eps))?;
        Ok(())
    })
}

/// Check the flow certificate of {p,q} on `generations` generations; writes the verdict and,
/// if `report` is non-null, the JSON report.
///
/// # Safety
/// `pass` writable; `report` null or writable.
#[no_mangle]
pub unsafe extern "C" fn tv_verify_flows(
    p: u32,
    q: u32,
    generations: u32,
    pass: *mut bool,
    report: *mut *mut c_char,
) -> TvStatus {
    guard(|| {
        if pass.is_null() {
            return Err(null("pass"));
        }
        let p = face_degree(p);
        let rule = lib(weakening_rule(p, q))?;
        let t = lib(build_tessellation(&TessellationSpec::new(p, q, generations)))?;
        let spec = lib(build_automaton(Arc::new(t), Some(rule), 1))?;
        let r = lib(verify_flows(&spec, &lib(make_flow(p, q))?))?;
        *pass = r.pass;
        if !report.is_null() {
            *report = into_c_string(lib(serde_json::to_string(&r).map_err(Error::from))?)?;
        }
        Ok(())
    })
}

/// Parse a face degree ("inf" or an integer) into the `p` convention of this API.
///
/// # Safety
/// `s` must be a valid NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tv_parse_face_degree(s: *const c_char, out: *mut u32) -> TvStatus {
    guard(|| {
        if s.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let text = CStr::from_ptr(s).to_str().map_err(|e| (TvStatus::InvalidArgument, e.to_string()))?;
        let p: FaceDegree = text.parse().map_err(|e| (TvStatus::InvalidArgument, e))?;
        *out = p.finite().unwrap_or(TV_P_INFINITE);
        Ok(())
    })
}
