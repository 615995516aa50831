//! C interface to the spiral-kinematics solver.
//!
//! Every function returns an [`SkStatus`]. On failure a message is kept per
//! thread and can be read with [`sk_last_error_message`]. Results are written
//! through out-pointers, which must be valid and non-null unless stated.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use spiral_kinematics::geometry::{sample_curve, TipMotion};
use spiral_kinematics::integrator::{classify, IntegrationControls, OutcomeKind};
use spiral_kinematics::model::{Medium, PhaseState, TipData};
use spiral_kinematics::separatrix::{find_separatrix, DEFAULT_TOL_L};
use spiral_kinematics::solver::{feasibility_window, solve_omega, SolveCase, SolveRequest, SolveResult};
use spiral_kinematics::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkStatus {
    Ok = 0,
    NoSolution = 2,
    Numerical = 3,
    InvalidArgument = 4,
    NullPointer = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkCase {
    RotatingGrowing = 0,
    Nonrotating = 1,
    RotatingContracting = 2,
    NoSolution = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkOutcomeKind {
    Returns = 0,
    Escapes = 1,
    Decays = 2,
    BudgetExceeded = 3,
}

/// Plane-wave speed and curvature coefficient.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SkMedium {
    pub v0: f64,
    pub d: f64,
}

/// Log tip curvature, tip tangential velocity and oscillation index.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SkTip {
    pub l0: f64,
    pub g: f64,
    pub osc_index: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SkOutcome {
    pub kind: SkOutcomeKind,
    pub s_event: f64,
    pub l_event: f64,
    pub v_event: f64,
}

/// Solved rotating or nonrotating wave. Opaque to C.
pub struct SkSolution {
    result: SolveResult,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

type Fallible = Result<(), (SkStatus, String)>;

fn from_core(e: Error) -> (SkStatus, String) {
    let status = match e {
        Error::InvalidInput(_) | Error::NotRotating | Error::OutOfRange { .. } => SkStatus::InvalidArgument,
        Error::NoBracket(_) => SkStatus::NoSolution,
        _ => SkStatus::Numerical,
    };
    (status, e.to_string())
}

fn guard(f: impl FnOnce() -> Fallible) -> SkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SkStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("panic: {msg}"));
            SkStatus::Panic
        }
    }
}

fn null() -> (SkStatus, String) {
    (SkStatus::NullPointer, "null pointer argument".into())
}

fn medium(m: SkMedium) -> Result<Medium, (SkStatus, String)> {
    Medium::new(m.v0, m.d).map_err(from_core)
}

fn case(c: SolveCase) -> SkCase {
    match c {
        SolveCase::RotatingGrowing => SkCase::RotatingGrowing,
        SolveCase::Nonrotating => SkCase::Nonrotating,
        SolveCase::RotatingContracting => SkCase::RotatingContracting,
        SolveCase::NoSolution => SkCase::NoSolution,
    }
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn sk_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Solves for the rotation frequency. `tol_omega <= 0` selects the default.
/// On `SK_STATUS_NO_SOLUTION` no handle is written and the diagnostic is
/// available from `sk_last_error_message`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn sk_solve(m: SkMedium, tip: SkTip, tol_omega: f64, out: *mut *mut SkSolution) -> SkStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        *out = std::ptr::null_mut();
        let tip = TipData::new(tip.l0, tip.g, tip.osc_index).map_err(from_core)?;
        let mut req = SolveRequest::new(medium(m)?, tip);
        if tol_omega > 0.0 {
            req.tol_omega = tol_omega;
        }
        let result = solve_omega(&req).map_err(from_core)?;
        if result.case == SolveCase::NoSolution {
            return Err((SkStatus::NoSolution, result.diagnostic.unwrap_or_else(|| "no solution".into())));
        }
        *out = Box::into_raw(Box::new(SkSolution { result }));
        Ok(())
    })
}

/// # Safety
/// `sol` must come from `sk_solve` and not have been freed; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn sk_solution_free(sol: *mut SkSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// # Safety
/// `sol` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sk_solution_omega(sol: *const SkSolution, out: *mut f64) -> SkStatus {
    guard(|| {
        let (s, o) = (sol.as_ref().ok_or_else(null)?, out.as_mut().ok_or_else(null)?);
        *o = s.result.omega;
        Ok(())
    })
}

/// # Safety
/// `sol` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sk_solution_case(sol: *const SkSolution, out: *mut SkCase) -> SkStatus {
    guard(|| {
        let (s, o) = (sol.as_ref().ok_or_else(null)?, out.as_mut().ok_or_else(null)?);
        *o = case(s.result.case);
        Ok(())
    })
}

/// # Safety
/// `sol` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sk_solution_crossing_count(sol: *const SkSolution, out: *mut u32) -> SkStatus {
    guard(|| {
        let (s, o) = (sol.as_ref().ok_or_else(null)?, out.as_mut().ok_or_else(null)?);
        *o = s.result.crossing_count;
        Ok(())
    })
}

/// Samples the front at time `t` at `n` arclengths uniform on `[0, s_max]`,
/// with the tip path centred on the origin at `t = 0`. `kappa` may be null.
///
/// # Safety
/// `x` and `y` (and `kappa` when non-null) must point to `n` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sk_solution_sample_curve(
    sol: *const SkSolution,
    t: f64,
    theta00: f64,
    s_max: f64,
    n: usize,
    x: *mut f64,
    y: *mut f64,
    kappa: *mut f64,
) -> SkStatus {
    guard(|| {
        let s = sol.as_ref().ok_or_else(null)?;
        if x.is_null() || y.is_null() {
            return Err(null());
        }
        let p = s.result.profile.as_ref().ok_or((SkStatus::Numerical, "solution has no profile".into()))?;
        let tip = TipMotion::new(p, (0.0, 0.0), theta00).position(t);
        let curve = sample_curve(p, t, theta00, s_max, n, tip).map_err(from_core)?;
        let (xs, ys) = (std::slice::from_raw_parts_mut(x, n), std::slice::from_raw_parts_mut(y, n));
        for (k, c) in curve.iter().enumerate() {
            xs[k] = c.x;
            ys[k] = c.y;
        }
        if !kappa.is_null() {
            let ks = std::slice::from_raw_parts_mut(kappa, n);
            for (k, c) in curve.iter().enumerate() {
                ks[k] = c.kappa;
            }
        }
        Ok(())
    })
}

/// Centre and radius of the circle traced by the tip, for tip origin `(0, 0)`
/// at `t = 0`. Fails with `SK_STATUS_INVALID_ARGUMENT` for a nonrotating wave.
///
/// # Safety
/// `sol` must be a live handle and the out-pointers writable.
#[no_mangle]
pub unsafe extern "C" fn sk_solution_tip_circle(
    sol: *const SkSolution,
    theta00: f64,
    xc: *mut f64,
    yc: *mut f64,
    radius: *mut f64,
) -> SkStatus {
    guard(|| {
        let s = sol.as_ref().ok_or_else(null)?;
        let (xo, yo, ro) =
            (xc.as_mut().ok_or_else(null)?, yc.as_mut().ok_or_else(null)?, radius.as_mut().ok_or_else(null)?);
        let p = s.result.profile.as_ref().ok_or((SkStatus::Numerical, "solution has no profile".into()))?;
        let m = TipMotion::new(p, (0.0, 0.0), theta00);
        let ((cx, cy), r) = m.center().zip(m.radius()).ok_or_else(|| from_core(Error::NotRotating))?;
        (*xo, *yo, *ro) = (cx, cy, r);
        Ok(())
    })
}

/// Intercept of the separatrix on the axis for `0 < omega < 2 v0²/d`.
///
/// # Safety
/// `l_star` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sk_find_separatrix(m: SkMedium, omega: f64, l_star: *mut f64) -> SkStatus {
    guard(|| {
        let o = l_star.as_mut().ok_or_else(null)?;
        let r =
            find_separatrix(omega, &medium(m)?, &IntegrationControls::default(), DEFAULT_TOL_L).map_err(from_core)?;
        *o = r.l_star;
        Ok(())
    })
}

/// Fate of the forward trajectory from `(l, v)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sk_classify(m: SkMedium, omega: f64, l: f64, v: f64, out: *mut SkOutcome) -> SkStatus {
    guard(|| {
        let o = out.as_mut().ok_or_else(null)?;
        let r =
            classify(PhaseState::new(l, v), omega, &medium(m)?, &IntegrationControls::default()).map_err(from_core)?;
        let kind = match r.kind {
            OutcomeKind::Returns => SkOutcomeKind::Returns,
            OutcomeKind::Escapes => SkOutcomeKind::Escapes,
            OutcomeKind::Decays => SkOutcomeKind::Decays,
            OutcomeKind::BudgetExceeded => SkOutcomeKind::BudgetExceeded,
        };
        *o = SkOutcome { kind, s_event: r.s_event, l_event: r.state_event.l, v_event: r.state_event.v };
        Ok(())
    })
}

/// Range of `l0` admitting a rotating solution for tip velocity `g`. The
/// lower end is `-INFINITY` when `g >= 0`; `SK_STATUS_NO_SOLUTION` when empty.
///
/// # Safety
/// `lo` and `hi` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sk_feasibility_window(m: SkMedium, g: f64, lo: *mut f64, hi: *mut f64) -> SkStatus {
    guard(|| {
        let (a, b) = (lo.as_mut().ok_or_else(null)?, hi.as_mut().ok_or_else(null)?);
        if !g.is_finite() {
            return Err((SkStatus::InvalidArgument, "g must be finite".into()));
        }
        let (wl, wh) = feasibility_window(g, &medium(m)?)
            .ok_or((SkStatus::NoSolution, format!("empty feasibility window for g = {g}")))?;
        (*a, *b) = (wl, wh);
        Ok(())
    })
}
