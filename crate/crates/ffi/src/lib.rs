//! C ABI over `cascade-gp`.
//!
//! Objects are opaque handles created by `cgp_*_load`/`cgp_*_builtin` and
//! released with the matching `cgp_*_free`. Every fallible call returns a
//! [`CgpStatus`]; on failure `cgp_last_error` describes the problem for the
//! calling thread. Arrays are caller-allocated; matrices are row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use cascade_gp::features::Sample;
use cascade_gp::kinchain::{self, presets, JointState, KinematicChain};
use cascade_gp::learner::InverseDynamicsModel;
use cascade_gp::{bench, Error};
use nalgebra::DVector;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NonFinite = 4,
    NotPositiveDefinite = 5,
    Io = 6,
    Parse = 7,
    MissingInput = 8,
    Numerical = 9,
    Panic = 10,
}

/// Opaque kinematic chain.
pub struct CgpChain(KinematicChain);

/// Opaque trained inverse dynamics model.
pub struct CgpModel(InverseDynamicsModel);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> CgpStatus {
    match e {
        Error::DimensionMismatch { .. } => CgpStatus::DimensionMismatch,
        Error::NonFinite(_) => CgpStatus::NonFinite,
        Error::NotPositiveDefinite { .. } => CgpStatus::NotPositiveDefinite,
        Error::Io(_) => CgpStatus::Io,
        Error::Parse { .. } | Error::Json(_) | Error::Config(_) | Error::MissingColumn(_) => CgpStatus::Parse,
        Error::MissingNeighborTorque { .. } | Error::MissingHistory | Error::MissingChain => CgpStatus::MissingInput,
        Error::Factorization { .. } | Error::AllRestartsFailed { .. } | Error::ZeroRange => CgpStatus::Numerical,
        _ => CgpStatus::InvalidArgument,
    }
}

struct Fail(CgpStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CgpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            CgpStatus::Ok
        }
        Ok(Err(Fail(code, msg))) => {
            set_error(&msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            CgpStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(CgpStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(CgpStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn chain_ref<'a>(c: *const CgpChain) -> Result<&'a KinematicChain, Fail> {
    c.as_ref().map(|c| &c.0).ok_or_else(|| null("chain"))
}

unsafe fn model_ref<'a>(m: *const CgpModel) -> Result<&'a InverseDynamicsModel, Fail> {
    m.as_ref().map(|m| &m.0).ok_or_else(|| null("model"))
}

fn check_dof(expected: usize, n: usize) -> Result<(), Fail> {
    if expected == n {
        Ok(())
    } else {
        Err(Fail(
            CgpStatus::DimensionMismatch,
            format!("joint count mismatch: expected {expected}, got {n}"),
        ))
    }
}

fn vec_of(s: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(s)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cgp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn cgp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Built-in chain by name: `planar2r`, `pendulum`, `arm6`, `arm7`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cgp_chain_builtin(name: *const c_char, out: *mut *mut CgpChain) -> CgpStatus {
    guard(|| {
        let name = text(name, "name")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let c = presets::by_name(name).ok_or_else(|| Fail(CgpStatus::InvalidArgument, format!("no built-in chain `{name}`")))?;
        *out = Box::into_raw(Box::new(CgpChain(c)));
        Ok(())
    })
}

/// Loads a chain description file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cgp_chain_load(path: *const c_char, out: *mut *mut CgpChain) -> CgpStatus {
    guard(|| {
        let path = text(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let c = kinchain::load_chain(path)?;
        *out = Box::into_raw(Box::new(CgpChain(c)));
        Ok(())
    })
}

/// # Safety
/// `chain` must come from a `cgp_chain_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn cgp_chain_free(chain: *mut CgpChain) {
    if !chain.is_null() {
        drop(Box::from_raw(chain));
    }
}

/// Joint count, or 0 for a null handle.
///
/// # Safety
/// `chain` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn cgp_chain_dof(chain: *const CgpChain) -> usize {
    chain.as_ref().map_or(0, |c| c.0.dof())
}

/// Inverse dynamics `tau = H(q) qdd + C(q, qd) qd + g(q)`.
///
/// # Safety
/// All arrays must hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn cgp_chain_rnea(
    chain: *const CgpChain,
    q: *const f64,
    qd: *const f64,
    qdd: *const f64,
    n: usize,
    tau_out: *mut f64,
) -> CgpStatus {
    guard(|| {
        let c = chain_ref(chain)?;
        check_dof(c.dof(), n)?;
        let state = JointState::new(vec_of(slice(q, n, "q")?), vec_of(slice(qd, n, "qd")?), vec_of(slice(qdd, n, "qdd")?));
        let tau = c.rnea(&state)?;
        out_slice(tau_out, n, "tau_out")?.copy_from_slice(tau.as_slice());
        Ok(())
    })
}

/// Joint-space inertia matrix, `n x n` row-major.
///
/// # Safety
/// `q` holds `n` values and `h_out` room for `n * n`.
#[no_mangle]
pub unsafe extern "C" fn cgp_chain_mass_matrix(chain: *const CgpChain, q: *const f64, n: usize, h_out: *mut f64) -> CgpStatus {
    guard(|| {
        let c = chain_ref(chain)?;
        check_dof(c.dof(), n)?;
        let h = c.mass_matrix(&vec_of(slice(q, n, "q")?))?;
        let out = out_slice(h_out, n * n, "h_out")?;
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = h[(i, j)];
            }
        }
        Ok(())
    })
}

/// Gravity torques `g(q)`.
///
/// # Safety
/// `q` and `g_out` hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn cgp_chain_gravity_torques(chain: *const CgpChain, q: *const f64, n: usize, g_out: *mut f64) -> CgpStatus {
    guard(|| {
        let c = chain_ref(chain)?;
        check_dof(c.dof(), n)?;
        let g = c.gravity_torques(&vec_of(slice(q, n, "q")?))?;
        out_slice(g_out, n, "g_out")?.copy_from_slice(g.as_slice());
        Ok(())
    })
}

/// Forward dynamics `qdd = H^-1 (tau - C qd - g)`.
///
/// # Safety
/// All arrays hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn cgp_chain_forward_dynamics(
    chain: *const CgpChain,
    q: *const f64,
    qd: *const f64,
    tau: *const f64,
    n: usize,
    qdd_out: *mut f64,
) -> CgpStatus {
    guard(|| {
        let c = chain_ref(chain)?;
        check_dof(c.dof(), n)?;
        let qdd = c.forward_dynamics(&vec_of(slice(q, n, "q")?), &vec_of(slice(qd, n, "qd")?), &vec_of(slice(tau, n, "tau")?))?;
        out_slice(qdd_out, n, "qdd_out")?.copy_from_slice(qdd.as_slice());
        Ok(())
    })
}

/// Loads a model bundle directory written by the library or CLI.
///
/// # Safety
/// `dir` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cgp_model_load(dir: *const c_char, out: *mut *mut CgpModel) -> CgpStatus {
    guard(|| {
        let dir = text(dir, "dir")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let m = InverseDynamicsModel::load(dir)?;
        *out = Box::into_raw(Box::new(CgpModel(m)));
        Ok(())
    })
}

/// # Safety
/// `model` must come from `cgp_model_load` or be null.
#[no_mangle]
pub unsafe extern "C" fn cgp_model_free(model: *mut CgpModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Joint count, or 0 for a null handle.
///
/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn cgp_model_dof(model: *const CgpModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.dof())
}

/// Position samples per joint that derivative-free models need, current
/// one included; 0 when none are needed.
///
/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn cgp_model_history_len(model: *const CgpModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.history_len)
}

/// Predicts joint torques. `q_history` is `n x history_len` row-major,
/// newest sample first per joint, and may be null when `history_len` is 0.
///
/// # Safety
/// `q`, `qd`, `qdd`, `tau_out` hold `n` values; `q_history`, when not null,
/// holds `n * history_len`.
#[no_mangle]
pub unsafe extern "C" fn cgp_model_predict(
    model: *const CgpModel,
    q: *const f64,
    qd: *const f64,
    qdd: *const f64,
    n: usize,
    q_history: *const f64,
    history_len: usize,
    tau_out: *mut f64,
) -> CgpStatus {
    guard(|| {
        let m = model_ref(model)?;
        check_dof(m.dof(), n)?;
        let hist = if q_history.is_null() || history_len == 0 {
            Vec::new()
        } else {
            let h = slice(q_history, n * history_len, "q_history")?;
            h.chunks(history_len).map(<[f64]>::to_vec).collect()
        };
        let sample = Sample {
            t: 0.0,
            q: vec_of(slice(q, n, "q")?),
            qd: vec_of(slice(qd, n, "qd")?),
            qdd: vec_of(slice(qdd, n, "qdd")?),
            tau: DVector::zeros(n),
            q_history: hist,
        };
        let tau = m.predict_sample(&sample)?;
        out_slice(tau_out, n, "tau_out")?.copy_from_slice(tau.as_slice());
        Ok(())
    })
}

/// Root-mean-square error over the range of `truth`.
///
/// # Safety
/// `predictions` and `truth` hold `len` values; `out` is valid.
#[no_mangle]
pub unsafe extern "C" fn cgp_nrmse(predictions: *const f64, truth: *const f64, len: usize, out: *mut f64) -> CgpStatus {
    guard(|| {
        let v = bench::nrmse(slice(predictions, len, "predictions")?, slice(truth, len, "truth")?)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = v;
        Ok(())
    })
}
