use proptest::prelude::*;

use spiral_kinematics::model::{
    energy, energy_lv, focus_analysis, g_of, intercept, sign_symmetry, steady_residual, vector_field, Medium,
    PhaseState, SteadyFrame, TipData,
};

fn medium() -> impl Strategy<Value = Medium> {
    (0.2f64..5.0, 0.2f64..5.0).prop_map(|(v0, d)| Medium::new(v0, d).unwrap())
}

proptest! {
    #[test]
    fn energy_bounded_below(m in medium(), l in -30.0f64..3.0, v in -10.0f64..10.0) {
        let e = energy(&PhaseState::new(l, v), &m);
        prop_assert!(e >= m.energy_floor() - 1e-12 * m.energy_floor().abs());
    }

    #[test]
    fn derived_constants(m in medium()) {
        prop_assert!(g_of(m.l_focus(), &m).abs() < 1e-12 * m.ratio().powi(2));
        prop_assert!(energy_lv(m.l_zero(), 0.0, &m).abs() < 1e-12 * m.ratio().powi(2));
        prop_assert!((m.omega_max() - 2.0 * m.v0 * m.v0 / m.d).abs() < 1e-15 * m.omega_max());
    }

    #[test]
    fn g_decreases_then_increases(m in medium(), a in -8.0f64..2.0, b in -8.0f64..2.0) {
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assume!(hi - lo > 1e-6);
        let lm = m.l_gmin();
        if hi <= lm {
            prop_assert!(g_of(lo, &m) > g_of(hi, &m));
        } else if lo >= lm {
            prop_assert!(g_of(lo, &m) < g_of(hi, &m));
        }
    }

    #[test]
    fn intercept_decreasing_in_omega(m in medium(), l in -5.0f64..2.0, g in -3.0f64..3.0,
                                     w1 in 0.0f64..4.0, dw in 1e-6f64..4.0) {
        prop_assert!(intercept(l, w1 + dw, g, &m) < intercept(l, w1, g, &m));
    }

    #[test]
    fn field_vanishes_only_at_focus(m in medium(), l in -6.0f64..2.0, v in -3.0f64..3.0, w in -3.0f64..3.0) {
        let (dl, dv) = vector_field(&PhaseState::new(l, v), w, &m).unwrap();
        let near = (l - m.l_focus()).abs() < 1e-9 && v.abs() < 1e-9;
        if !near {
            prop_assert!(dl != 0.0 || dv != 0.0);
        }
    }

    #[test]
    fn focus_is_unstable_inside_window(m in medium(), f in 1e-3f64..0.999) {
        let fa = focus_analysis(f * m.omega_max(), &m);
        prop_assert!(fa.unstable_focus);
        prop_assert!(fa.eig_real > 0.0 && fa.eig_imag > 0.0);
        prop_assert!((fa.det - m.ratio().powi(2)).abs() < 1e-12 * fa.det);
    }

    #[test]
    fn symmetry_is_an_involution(v0 in 0.1f64..3.0, d in 0.1f64..3.0, w in -3.0f64..3.0) {
        let f = SteadyFrame { v0, d, omega: w, orientation: 1.0 };
        prop_assert_eq!(sign_symmetry(&sign_symmetry(&f)), f);
    }

    #[test]
    fn mirrored_residual_matches(m in medium(), w in 0.01f64..1.0, l in -3.0f64..1.0, v in -1.0f64..1.0) {
        // v' from the field makes the residual vanish in both conventions
        let w = w * m.omega_max();
        let (_, dv) = vector_field(&PhaseState::new(l, v), w, &m).unwrap();
        let f = SteadyFrame::positive(&m, w);
        let scale = l.exp().powi(3) * m.d + 1.0;
        prop_assert!(steady_residual(&f, l, v, dv).abs() < 1e-9 * scale);
        prop_assert!(steady_residual(&sign_symmetry(&f), l, v, dv).abs() < 1e-9 * scale);
    }

    #[test]
    fn tip_from_kappa_roundtrip(k in 1e-6f64..1e3, g in -2.0f64..2.0, i in 0u32..5) {
        let t = TipData::from_kappa(k, g, i).unwrap();
        prop_assert!((t.kappa0() - k).abs() < 1e-12 * k);
    }
}

#[test]
fn rejects_bad_media_and_tips() {
    assert!(Medium::new(0.0, 1.0).is_err());
    assert!(Medium::new(1.0, -1.0).is_err());
    assert!(Medium::new(f64::NAN, 1.0).is_err());
    assert!(TipData::from_kappa(-1.0, 0.0, 0).is_err());
    assert!(TipData::new(f64::INFINITY, 0.0, 0).is_err());
}

#[test]
fn range_guard() {
    let m = Medium::unit();
    assert!(vector_field(&PhaseState::new(-701.0, -1.0), 1.0, &m).is_err());
    assert!(vector_field(&PhaseState::new(351.0, 0.0), 0.0, &m).is_err());
    assert!(vector_field(&PhaseState::new(-600.0, -1.0), 1.0, &m).is_ok());
}
