use ewm_core::target::TargetGeometry;
use proptest::prelude::*;

fn targets() -> Vec<TargetGeometry> {
    vec![
        TargetGeometry::flat(),
        TargetGeometry::hyperbolic(),
        TargetGeometry::sphere(),
        TargetGeometry::custom(vec![1.0, 0.3, -0.01]).unwrap(),
    ]
}

// Plain Taylor sum, independent of the library's sinh.
fn sinh_taylor(x: f64) -> f64 {
    let mut term = x;
    let mut sum = 0.0;
    for k in 0..30 {
        sum += term;
        term *= x * x / (((2 * k + 2) * (2 * k + 3)) as f64);
    }
    sum
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if f(a) * f(m) <= 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}

#[test]
fn hyperbolic_profile_matches_taylor_oracle() {
    let t = TargetGeometry::hyperbolic();
    assert!((t.g(1.0) - 1.1752011936438014).abs() < 1e-15);
    for x in [0.1, 0.5, 1.0, 2.0] {
        assert!((t.g(x) - sinh_taylor(x)).abs() < 1e-14 * sinh_taylor(x));
    }
}

#[test]
fn sphere_margin_root_matches_bisection() {
    // s cos s + sin s = 0 on (π/2, π)
    let root = bisect(|s: f64| s * s.cos() + s.sin(), 1.6, 3.1);
    assert!((root - 2.0287578381104345).abs() < 1e-12);
    let rep = TargetGeometry::sphere().check_admissibility(3.0, 30000);
    let s = rep.first_failure.unwrap();
    assert!(s >= root && s - root < 3.0 / 30000.0 + 1e-12);
    assert!(!rep.convex_ok);
}

#[test]
fn admissibility_of_standard_targets() {
    for t in [TargetGeometry::hyperbolic(), TargetGeometry::flat()] {
        let rep = t.check_admissibility(5.0, 1000);
        assert!(rep.odd_ok && rep.normalized_ok && rep.grillakis_ok && rep.convex_ok);
        assert!(rep.first_failure.is_none());
        assert!(rep.min_margin > 0.0);
    }
    assert!(TargetGeometry::hyperbolic().check_admissibility(20.0, 10).wp_divergence_hint > 1e7);
}

#[test]
fn custom_needs_unit_slope() {
    assert!(TargetGeometry::custom(vec![2.0, 0.1]).is_err());
    assert!(TargetGeometry::custom(vec![]).is_err());
    let t = TargetGeometry::custom(vec![1.0, -1.0]).unwrap();
    // g = s - s³, margin 2s - 4s³ vanishes at s = 1/√2
    let rep = t.check_admissibility(1.0, 10000);
    assert!((rep.first_failure.unwrap() - 0.5f64.sqrt()).abs() < 2e-4);
}

#[test]
fn custom_overflow_is_reported() {
    let t = TargetGeometry::custom(vec![1.0, 1.0, 1.0, 1.0]).unwrap();
    assert!(t.try_eval(1e80).is_err());
    assert!(t.try_eval(0.5).is_ok());
}

#[test]
fn zeta_series_and_direct_branch_agree_at_switch() {
    for t in targets() {
        let s = t.series_switch;
        let lo = t.zeta_rem(s * (1.0 - 1e-12));
        let hi = t.zeta_rem(s * (1.0 + 1e-12));
        assert!((lo - hi).abs() <= 1e-10, "{}: {lo} vs {hi}", t.name());
    }
}

proptest! {
    #[test]
    fn f_is_s_plus_s3_zeta(s in -3.0f64..3.0) {
        for t in targets() {
            let rebuilt = s + s * s * s * t.zeta_rem(s);
            let scale = t.f(s).abs().max(s.abs()).max(1e-300);
            prop_assert!((rebuilt - t.f(s)).abs() <= 1e-12 * scale.max(1.0));
        }
    }

    #[test]
    fn f_is_g_times_dg(s in -3.0f64..3.0) {
        for t in targets() {
            let want = t.g(s) * t.dg(s);
            prop_assert!((t.f(s) - want).abs() <= 1e-13 * want.abs().max(1.0));
        }
    }

    #[test]
    fn profile_is_odd(s in 0.0f64..4.0) {
        for t in targets() {
            prop_assert_eq!(t.g(-s), -t.g(s));
            prop_assert_eq!(t.dg(-s), t.dg(s));
            prop_assert!((t.wp(-s) - t.wp(s)).abs() <= 1e-15 * t.wp(s).abs().max(1.0));
        }
    }

    #[test]
    fn potential_derivative_is_g(s in -2.5f64..2.5) {
        let h = 1e-4;
        for t in targets() {
            let fd = (t.wp(s + h) - t.wp(s - h)) / (2.0 * h);
            prop_assert!((fd - t.g(s)).abs() < 1e-7 * t.g(s).abs().max(1.0));
            let fd2 = (t.dg(s + h) - t.dg(s - h)) / (2.0 * h);
            prop_assert!((fd2 - t.d2g(s)).abs() < 1e-7 * t.d2g(s).abs().max(1.0));
        }
    }

    #[test]
    fn potential_is_nonnegative(s in -4.0f64..4.0) {
        for t in targets().into_iter().take(2) {
            prop_assert!(t.wp(s) >= 0.0);
        }
    }
}
