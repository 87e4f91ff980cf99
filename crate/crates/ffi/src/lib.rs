//! C interface to `simlab`.
//!
//! Every fallible function returns a [`SimlabStatus`]; on failure the
//! message is available from [`simlab_last_error`] on the same thread.
//! Objects are opaque handles released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use simlab::arrivals::{simulate_scaled_path, simulate_scaled_path_inversion, SamplePath, SimOptions};
use simlab::fluid::FluidSolution;
use simlab::fractional::fou_constants;
use simlab::gaussian::{cov_r, moment_bound};
use simlab::{ModelParams, PolicySpec, SimError};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimlabStatus {
    Ok = 0,
    Domain = 1,
    Validation = 2,
    Consistency = 3,
    Numeric = 4,
    Resource = 5,
    Unsupported = 6,
    InsufficientSamples = 7,
    Config = 8,
    Io = 9,
    NullPointer = 10,
    Panic = 11,
}

impl From<&SimError> for SimlabStatus {
    fn from(e: &SimError) -> Self {
        match e {
            SimError::Domain(_) => SimlabStatus::Domain,
            SimError::Validation(_) => SimlabStatus::Validation,
            SimError::Consistency(_) => SimlabStatus::Consistency,
            SimError::Numeric(_) => SimlabStatus::Numeric,
            SimError::Resource(_) => SimlabStatus::Resource,
            SimError::Unsupported(_) => SimlabStatus::Unsupported,
            SimError::InsufficientSamples { .. } => SimlabStatus::InsufficientSamples,
            SimError::Config(_) => SimlabStatus::Config,
            SimError::Io { .. } => SimlabStatus::Io,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), (SimlabStatus, String)>) -> SimlabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SimlabStatus::Ok,
        Ok(Err((code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic".into());
            SimlabStatus::Panic
        }
    }
}

fn lift<T>(r: simlab::Result<T>) -> Result<T, (SimlabStatus, String)> {
    r.map_err(|e| (SimlabStatus::from(&e), e.to_string()))
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, (SimlabStatus, String)> {
    p.as_ref().ok_or((SimlabStatus::NullPointer, format!("null pointer: {name}")))
}

unsafe fn put<T>(out: *mut T, v: T, name: &str) -> Result<(), (SimlabStatus, String)> {
    if out.is_null() {
        return Err((SimlabStatus::NullPointer, format!("null pointer: {name}")));
    }
    out.write(v);
    Ok(())
}

/// Message of the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn simlab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Model parameters.
pub struct SimlabParams(ModelParams);
/// Admission-control policy.
pub struct SimlabPolicy(PolicySpec);
/// Fluid-limit solution.
pub struct SimlabFluid(FluidSolution);
/// One simulated path.
pub struct SimlabPath(SamplePath);

/// Constants of the fractional Ornstein-Uhlenbeck limit.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SimlabFouConstants {
    pub kappa: f64,
    pub hurst: f64,
    pub sigma: f64,
    pub sigma0sq: f64,
    pub sigma0sq_closed: f64,
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn simlab_params_new(
    beta: f64,
    theta: f64,
    alpha: f64,
    b: f64,
    d: usize,
    n: u64,
    out: *mut *mut SimlabParams,
) -> SimlabStatus {
    guard(|| {
        let p = lift(ModelParams::new(beta, theta, alpha, b, d, n))?;
        put(out, Box::into_raw(Box::new(SimlabParams(p))), "out")
    })
}

/// Parameters with the drain rate `b` set to `a = 1/(theta (beta-2))`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn simlab_params_new_b_equal_a(
    beta: f64,
    theta: f64,
    alpha: f64,
    d: usize,
    n: u64,
    out: *mut *mut SimlabParams,
) -> SimlabStatus {
    guard(|| {
        let p = lift(ModelParams::with_b_equal_a(beta, theta, alpha, d, n))?;
        put(out, Box::into_raw(Box::new(SimlabParams(p))), "out")
    })
}

/// # Safety
/// `p` must come from `simlab_params_new*` or be null.
#[no_mangle]
pub unsafe extern "C" fn simlab_params_free(p: *mut SimlabParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// `a = 1/(theta (beta-2))`; NaN for a null handle.
///
/// # Safety
/// `p` must be a valid handle or null.
#[no_mangle]
pub unsafe extern "C" fn simlab_params_a(p: *const SimlabParams) -> f64 {
    p.as_ref().map_or(f64::NAN, |p| p.0.a())
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn simlab_policy_linear(c: f64, out: *mut *mut SimlabPolicy) -> SimlabStatus {
    guard(|| {
        let g = lift(PolicySpec::linear(c))?;
        put(out, Box::into_raw(Box::new(SimlabPolicy(g))), "out")
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn simlab_policy_linear_plus_tanh(
    c1: f64,
    c2: f64,
    out: *mut *mut SimlabPolicy,
) -> SimlabStatus {
    guard(|| {
        let g = lift(PolicySpec::linear_plus_tanh(c1, c2))?;
        put(out, Box::into_raw(Box::new(SimlabPolicy(g))), "out")
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn simlab_policy_no_control(out: *mut *mut SimlabPolicy) -> SimlabStatus {
    guard(|| put(out, Box::into_raw(Box::new(SimlabPolicy(PolicySpec::no_control()))), "out"))
}

/// # Safety
/// `g` must come from a `simlab_policy_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn simlab_policy_free(g: *mut SimlabPolicy) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Solve the fluid system on `[0, horizon]` with step `h`.
///
/// # Safety
/// Handles must be valid; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn simlab_fluid_solve(
    p: *const SimlabParams,
    g: *const SimlabPolicy,
    horizon: f64,
    h: f64,
    out: *mut *mut SimlabFluid,
) -> SimlabStatus {
    guard(|| {
        let (p, g) = (deref(p, "params")?, deref(g, "policy")?);
        let f = lift(FluidSolution::solve(&p.0, &g.0, horizon, h))?;
        put(out, Box::into_raw(Box::new(SimlabFluid(f))), "out")
    })
}

/// # Safety
/// `f` must come from `simlab_fluid_solve` or be null.
#[no_mangle]
pub unsafe extern "C" fn simlab_fluid_free(f: *mut SimlabFluid) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// `U(t)`, the offset `U(t) - b t` and `V(t)` at `t` inside the solved horizon.
///
/// # Safety
/// `f` must be valid; output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn simlab_fluid_eval(
    f: *const SimlabFluid,
    t: f64,
    big_u: *mut f64,
    u: *mut f64,
    v: *mut f64,
) -> SimlabStatus {
    guard(|| {
        let f = &deref(f, "fluid")?.0;
        if !(t >= 0.0 && t <= f.horizon()) {
            return Err((SimlabStatus::Domain, format!("time {t} outside [0, {}]", f.horizon())));
        }
        put(big_u, f.big_u_at(t), "big_u")?;
        put(u, f.u_at(t), "u")?;
        put(v, f.v_at(t), "v")
    })
}

/// Station-level driver covariance `cov_R(s, t)`.
///
/// # Safety
/// `f` must be valid; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn simlab_cov_r(f: *const SimlabFluid, s: f64, t: f64, out: *mut f64) -> SimlabStatus {
    guard(|| {
        let f = &deref(f, "fluid")?.0;
        put(out, lift(cov_r(s, t, f))?, "out")
    })
}

/// Uniform bound on the second moment of the limit average fluctuation.
///
/// # Safety
/// `f` must be valid; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn simlab_moment_bound(f: *const SimlabFluid, out: *mut f64) -> SimlabStatus {
    guard(|| {
        let f = &deref(f, "fluid")?.0;
        put(out, moment_bound(f.params(), f).0, "out")
    })
}

/// # Safety
/// Handles must be valid; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn simlab_fou_constants(
    p: *const SimlabParams,
    g: *const SimlabPolicy,
    out: *mut SimlabFouConstants,
) -> SimlabStatus {
    guard(|| {
        let (p, g) = (deref(p, "params")?, deref(g, "policy")?);
        let c = lift(fou_constants(&p.0, &g.0))?;
        put(
            out,
            SimlabFouConstants {
                kappa: c.kappa,
                hurst: c.hurst,
                sigma: c.sigma,
                sigma0sq: c.sigma0sq,
                sigma0sq_closed: c.sigma0sq_closed,
            },
            "out",
        )
    })
}

/// Simulate one path on `[0, horizon]`; `inversion` selects the
/// time-change algorithm instead of thinning.
///
/// # Safety
/// Handles must be valid; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn simlab_simulate(
    p: *const SimlabParams,
    g: *const SimlabPolicy,
    horizon: f64,
    seed: u64,
    inversion: bool,
    out: *mut *mut SimlabPath,
) -> SimlabStatus {
    guard(|| {
        let (p, g) = (deref(p, "params")?, deref(g, "policy")?);
        let path = if inversion {
            simulate_scaled_path_inversion(&p.0, &g.0, horizon, seed, SimOptions::default())
        } else {
            simulate_scaled_path(&p.0, &g.0, horizon, seed, SimOptions::default())
        };
        put(out, Box::into_raw(Box::new(SimlabPath(lift(path)?))), "out")
    })
}

/// # Safety
/// `path` must come from `simlab_simulate` or be null.
#[no_mangle]
pub unsafe extern "C" fn simlab_path_free(path: *mut SimlabPath) {
    if !path.is_null() {
        drop(Box::from_raw(path));
    }
}

/// Average scaled workload at `t`.
///
/// # Safety
/// `path` must be valid; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn simlab_path_ybar(path: *const SimlabPath, t: f64, out: *mut f64) -> SimlabStatus {
    guard(|| {
        let path = &deref(path, "path")?.0;
        put(out, lift(path.ybar(t))?, "out")
    })
}

/// Number of sessions started on `[0, horizon]`; 0 for a null handle.
///
/// # Safety
/// `path` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn simlab_path_session_count(path: *const SimlabPath) -> usize {
    path.as_ref().map_or(0, |p| p.0.events().len())
}
