use std::sync::Arc;

use ewm_core::diagnostics::DiagOptions;
use ewm_core::error::EwmError;
use ewm_core::evolve_polar::{
    cfl_bound, evolve_history, evolve_run, momentum_residual, regularity_monitor, rk4_step, spatial_rhs, BoundaryMode,
    EvolveConfig,
};
use ewm_core::flatwave::{FlatExact, WPoly};
use ewm_core::initdata::{initial_state, DataProfile, Motion, PolarState, RadialGrid};
use ewm_core::target::TargetGeometry;

fn pulse(amp: f64, n: usize, kappa: f64) -> PolarState {
    let grid = Arc::new(RadialGrid::new(10.0, n).unwrap());
    initial_state(
        &DataProfile::Centered { amp, sigma: 1.0 },
        Motion::TimeSymmetric,
        grid,
        kappa,
        Arc::new(TargetGeometry::hyperbolic()),
    )
    .unwrap()
}

fn exact_start(ex: FlatExact, n: usize) -> PolarState {
    let grid = Arc::new(RadialGrid::new(2.0, n).unwrap());
    initial_state(&DataProfile::Exact(ex), Motion::TimeSymmetric, grid, 0.0, Arc::new(TargetGeometry::flat())).unwrap()
}

/// Max-norm errors of (φ, Φ, Π).
fn field_errors(s: &PolarState, ex: FlatExact) -> [f64; 3] {
    let mut e = [0.0f64; 3];
    for i in 0..=s.n() {
        let want = ex.fields(s.t, s.grid.r[i]);
        let got = [s.phi[i], s.big_phi[i], s.pi[i]];
        for k in 0..3 {
            e[k] = e[k].max((got[k] - want[k]).abs());
        }
    }
    e
}

fn field_error(s: &PolarState, ex: FlatExact) -> f64 {
    field_errors(s, ex).into_iter().fold(0.0, f64::max)
}

fn run_exact(ex: FlatExact, n: usize, eps: f64) -> PolarState {
    let cfg = EvolveConfig { t_end: 0.5, dissipation_eps: eps, boundary: BoundaryMode::Exact(ex), ..Default::default() };
    evolve_run(exact_start(ex, n), &cfg, &DiagOptions::default(), &mut |_, _| {}).unwrap()
}

#[test]
fn vacuum_stays_exactly_zero() {
    let s0 = pulse(0.0, 100, 1.0);
    let rhs = spatial_rhs(&s0, &EvolveConfig::default());
    assert!(rhs.phi.iter().chain(&rhs.big_phi).chain(&rhs.pi).all(|v| *v == 0.0));
    let cfg = EvolveConfig { t_end: 2.0, ..Default::default() };
    let s = evolve_run(s0, &cfg, &DiagOptions::default(), &mut |_, _| {}).unwrap();
    assert_eq!(s.t, 2.0);
    assert!(s.phi.iter().chain(&s.big_phi).chain(&s.pi).chain(&s.alpha).chain(&s.beta).all(|v| *v == 0.0));
    assert_eq!(regularity_monitor(&s), 1.0);
}

#[test]
fn linear_solutions_are_reproduced() {
    for p in [WPoly::One, WPoly::Tau] {
        let ex = FlatExact::Poly(p);
        let s = run_exact(ex, 100, 0.02);
        assert!(field_error(&s, ex) < 1e-12, "{p:?}: {}", field_error(&s, ex));
    }
}

#[test]
fn curved_solutions_converge_at_second_order() {
    for ex in [FlatExact::Poly(WPoly::Quadratic), FlatExact::Poly(WPoly::Cubic), FlatExact::Focusing { amp: 0.1, a: 1.0 }] {
        let errs: Vec<[f64; 3]> = [100, 200, 400].iter().map(|&n| field_errors(&run_exact(ex, n, 0.02), ex)).collect();
        for w in errs.windows(2) {
            let p: Vec<f64> = (0..3).map(|k| (w[0][k] / w[1][k]).log2()).collect();
            assert!((1.9..2.1).contains(&p[0]) && (1.9..2.1).contains(&p[2]), "{ex:?}: {errs:?}");
            // Φ is worst on the axis, fed by the O(dr) local error of the
            // r⁻¹-weighted divergence at the first node.
            assert!(p[1] > 1.6, "{ex:?}: {errs:?}");
        }
    }
}

#[test]
fn dissipation_keeps_the_order() {
    let ex = FlatExact::Focusing { amp: 0.1, a: 1.0 };
    let a: Vec<f64> = [100, 200].iter().map(|&n| field_error(&run_exact(ex, n, 0.0), ex)).collect();
    let b: Vec<f64> = [100, 200].iter().map(|&n| field_error(&run_exact(ex, n, 0.1), ex)).collect();
    assert!((a[0] / a[1]).log2() > 1.8);
    assert!((b[0] / b[1]).log2() > 1.8);
}

#[test]
fn spatial_operator_residual_is_second_order() {
    let ex = FlatExact::Poly(WPoly::Quadratic);
    let cfg = EvolveConfig { dissipation_eps: 0.0, boundary: BoundaryMode::Exact(ex), ..Default::default() };
    let mut res = Vec::new();
    for n in [40, 80, 160] {
        let mut s = exact_start(ex, n);
        // A slice away from t = 0 so that every term is active.
        s.t = 0.3;
        for i in 0..=n {
            let [p, dp, pp] = ex.fields(0.3, s.grid.r[i]);
            s.phi[i] = p;
            s.big_phi[i] = dp;
            s.pi[i] = pp;
        }
        let rhs = spatial_rhs(&s, &cfg);
        let mut e: f64 = 0.0;
        // r >= 0.25: the first node off the axis carries an O(dr) local error.
        for i in n / 8..n {
            let d = ex.fields_dt(0.3, s.grid.r[i]);
            e = e.max((rhs.phi[i] - d[0]).abs()).max((rhs.big_phi[i] - d[1]).abs()).max((rhs.pi[i] - d[2]).abs());
        }
        res.push(e);
    }
    assert!(res[2] < 5e-3, "{res:?}");
    assert!((res[1] / res[2]).log2() > 1.9, "{res:?}");
}

#[test]
fn axis_parity_is_preserved() {
    let cfg = EvolveConfig { t_end: 3.0, ..Default::default() };
    let mut worst: f64 = 0.0;
    evolve_run(pulse(0.3, 200, 1.0), &cfg, &DiagOptions::default(), &mut |s, _| {
        worst = worst.max(s.phi[0].abs()).max(s.pi[0].abs()).max(s.alpha[0].abs()).max(s.beta[0].abs());
    })
    .unwrap();
    assert_eq!(worst, 0.0);
}

#[test]
fn momentum_constraint_converges() {
    let mut res = Vec::new();
    for n in [200, 400, 800] {
        let cfg = EvolveConfig { t_end: 1.0, ..Default::default() };
        let (h, _) = evolve_history(pulse(0.3, n, 1.0), &cfg, &DiagOptions::default()).unwrap();
        let k = h.len() - 1;
        res.push(momentum_residual(&h[k], &h[k - 1], h[k].t - h[k - 1].t));
    }
    assert!((res[1] / res[2]).log2() > 1.8, "{res:?}");
    let v = pulse(0.0, 100, 1.0);
    assert_eq!(momentum_residual(&v, &v, 0.01), 0.0);
}

#[test]
fn oversized_step_is_rejected() {
    let s = pulse(0.1, 100, 1.0);
    let bound = cfl_bound(&s, 0.5);
    assert!(rk4_step(&s, bound, &EvolveConfig::default()).is_ok());
    match rk4_step(&s, 2.0 * bound, &EvolveConfig::default()) {
        Err(EwmError::CflViolation { dt, bound: b }) => assert!(dt > b),
        other => panic!("{other:?}"),
    }
}

#[test]
fn bad_settings_are_rejected() {
    let cfg = EvolveConfig { cfl: 0.0, t_end: -1.0, dissipation_eps: f64::NAN, ..Default::default() };
    match evolve_run(pulse(0.1, 100, 1.0), &cfg, &DiagOptions::default(), &mut |_, _| {}) {
        Err(EwmError::Validation(v)) => assert_eq!(v.len(), 3),
        other => panic!("{other:?}"),
    }
}

#[test]
fn runs_are_deterministic() {
    let cfg = EvolveConfig { t_end: 1.0, boundary: BoundaryMode::Frozen, ..Default::default() };
    let a = evolve_run(pulse(0.3, 200, 1.0), &cfg, &DiagOptions::default(), &mut |_, _| {}).unwrap();
    let b = evolve_run(pulse(0.3, 200, 1.0), &cfg, &DiagOptions::default(), &mut |_, _| {}).unwrap();
    assert_eq!(a.phi, b.phi);
    assert_eq!(a.pi, b.pi);
    assert_eq!(a.beta, b.beta);
}

#[test]
fn run_lands_on_end_time() {
    let cfg = EvolveConfig { t_end: 0.123456, ..Default::default() };
    let mut times = Vec::new();
    let s = evolve_run(pulse(0.1, 100, 1.0), &cfg, &DiagOptions::default(), &mut |s, _| times.push(s.t)).unwrap();
    assert_eq!(s.t, 0.123456);
    assert!(times.windows(2).all(|w| w[1] > w[0]));
}
