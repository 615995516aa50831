use std::ffi::CStr;
use std::ptr;

use spiral_kinematics_ffi::*;

const UNIT: SkMedium = SkMedium { v0: 1.0, d: 1.0 };

fn message() -> String {
    unsafe { CStr::from_ptr(sk_last_error_message()) }.to_string_lossy().into_owned()
}

fn solve(l0: f64, g: f64, i: u32) -> (SkStatus, *mut SkSolution) {
    let mut sol = ptr::null_mut();
    let st = unsafe { sk_solve(UNIT, SkTip { l0, g, osc_index: i }, 0.0, &mut sol) };
    (st, sol)
}

#[test]
fn solve_and_query() {
    let (st, sol) = solve(0.0, 0.0, 0);
    assert_eq!(st, SkStatus::Ok);
    assert_eq!(message(), "");
    let (mut w, mut c, mut n) = (0.0, SkCase::NoSolution, 99u32);
    unsafe {
        assert_eq!(sk_solution_omega(sol, &mut w), SkStatus::Ok);
        assert_eq!(sk_solution_case(sol, &mut c), SkStatus::Ok);
        assert_eq!(sk_solution_crossing_count(sol, &mut n), SkStatus::Ok);
        sk_solution_free(sol);
    }
    assert!((w - 0.330958060268).abs() < 1e-8);
    assert_eq!(c, SkCase::RotatingGrowing);
    assert_eq!(n, 0);
}

#[test]
fn curve_and_tip_circle() {
    let (_, sol) = solve(-0.5, 0.3, 0);
    let n = 51;
    let (mut x, mut y, mut k) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let (mut xc, mut yc, mut r) = (0.0, 0.0, 0.0);
    unsafe {
        let st = sk_solution_sample_curve(sol, 0.0, 0.0, 5.0, n, x.as_mut_ptr(), y.as_mut_ptr(), k.as_mut_ptr());
        assert_eq!(st, SkStatus::Ok);
        let st = sk_solution_sample_curve(sol, 0.0, 0.0, 5.0, n, x.as_mut_ptr(), y.as_mut_ptr(), ptr::null_mut());
        assert_eq!(st, SkStatus::Ok);
        assert_eq!(sk_solution_tip_circle(sol, 0.0, &mut xc, &mut yc, &mut r), SkStatus::Ok);
        sk_solution_free(sol);
    }
    assert_eq!((x[0], y[0]), (0.0, 0.0));
    assert!((k[0] - (-0.5f64).exp()).abs() < 1e-12);
    assert!(r > 0.0 && (xc.hypot(yc) - r).abs() < 1e-12);
    let len: f64 = x.windows(2).zip(y.windows(2)).map(|(a, b)| (a[1] - a[0]).hypot(b[1] - b[0])).sum();
    assert!((len - 5.0).abs() < 1e-3);
}

#[test]
fn nonrotating_has_no_circle() {
    let (st, sol) = solve(0.8, 0.5, 0);
    assert_eq!(st, SkStatus::Ok);
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(sk_solution_tip_circle(sol, 0.0, &mut a, &mut b, &mut c), SkStatus::InvalidArgument);
        sk_solution_free(sol);
    }
    assert!(!message().is_empty());
}

#[test]
fn failures_map_to_status_codes() {
    let (st, sol) = solve(0.0, -1.0, 0);
    assert_eq!(st, SkStatus::NoSolution);
    assert!(sol.is_null());
    assert!(!message().is_empty());
    let (st, _) = solve(f64::NAN, 0.0, 0);
    assert_eq!(st, SkStatus::InvalidArgument);
    unsafe {
        assert_eq!(
            sk_solve(UNIT, SkTip { l0: 0.0, g: 0.0, osc_index: 0 }, 0.0, ptr::null_mut()),
            SkStatus::NullPointer
        );
        assert_eq!(
            sk_solve(SkMedium { v0: -1.0, d: 1.0 }, SkTip { l0: 0.0, g: 0.0, osc_index: 0 }, 0.0, &mut ptr::null_mut()),
            SkStatus::InvalidArgument
        );
        let mut w = 0.0;
        assert_eq!(sk_solution_omega(ptr::null(), &mut w), SkStatus::NullPointer);
        sk_solution_free(ptr::null_mut());
    }
}

#[test]
fn separatrix_classify_window() {
    let mut ls = 0.0;
    let mut o = SkOutcome { kind: SkOutcomeKind::BudgetExceeded, s_event: 0.0, l_event: 0.0, v_event: 0.0 };
    let (mut lo, mut hi) = (0.0, 0.0);
    unsafe {
        assert_eq!(sk_find_separatrix(UNIT, 1.0, &mut ls), SkStatus::Ok);
        assert_eq!(sk_find_separatrix(UNIT, 2.5, &mut ls), SkStatus::InvalidArgument);
        assert_eq!(sk_classify(UNIT, 1.0, 0.01, 0.0, &mut o), SkStatus::Ok);
        assert_eq!(sk_feasibility_window(UNIT, -0.6, &mut lo, &mut hi), SkStatus::Ok);
        assert_eq!(sk_feasibility_window(UNIT, -1.0, &mut lo, &mut hi), SkStatus::NoSolution);
    }
    assert!(ls > 0.0 && ls < std::f64::consts::LN_2);
    assert_eq!(o.kind, SkOutcomeKind::Returns);
    let r = (1.0f64 - 0.36).sqrt();
    assert_eq!((lo, hi), ((1.0 - r).ln(), (1.0 + r).ln()));
}

#[test]
fn errors_are_per_thread() {
    let (st, _) = solve(0.0, -1.0, 0);
    assert_eq!(st, SkStatus::NoSolution);
    let other = std::thread::spawn(message).join().unwrap();
    assert_eq!(other, "");
    assert!(!message().is_empty());
}
