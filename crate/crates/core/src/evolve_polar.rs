//! Method-of-lines evolution in polar-areal gauge.
//!
//! First-order system for (φ, Φ, Π) with A = e^{α-β}, B = e^{α+β}:
//!
//! ```text
//! ∂ₜφ = A Π
//! ∂ₜΦ = ∂ᵣ(A Π)
//! ∂ₜΠ = r⁻¹ ∂ᵣ(r A Φ) - B f(φ) / r²
//! ```
//!
//! The metric is re-solved on every RK4 stage. Spatial derivatives are
//! second-order centered, with parity ghosts at the axis (φ, Π odd, Φ even).

use crate::diagnostics::{record_diagnostics, DiagOptions, DiagRecord};
use crate::error::{EwmError, Result};
use crate::flatwave::FlatExact;
use crate::initdata::{solve_metric_slice, Parity, PolarState, RadialGrid};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundaryMode {
    /// ∂ₜ(√r u) + A ∂ᵣ(√r u) = 0 for each field u.
    Outgoing,
    /// Boundary values held fixed.
    Frozen,
    /// Boundary values driven by an exact flat solution.
    Exact(FlatExact),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveConfig {
    pub cfl: f64,
    pub t_end: f64,
    pub dissipation_eps: f64,
    pub boundary: BoundaryMode,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig { cfl: 0.5, t_end: 1.0, dissipation_eps: 0.02, boundary: BoundaryMode::Outgoing }
    }
}

/// Time derivatives of the evolved fields.
#[derive(Clone, Debug, PartialEq)]
pub struct Rhs {
    pub phi: Vec<f64>,
    pub big_phi: Vec<f64>,
    pub pi: Vec<f64>,
}

pub fn spatial_rhs(s: &PolarState, cfg: &EvolveConfig) -> Rhs {
    let grid = &*s.grid;
    let n = grid.n;
    let dr = grid.dr;
    let a: Vec<f64> = (0..=n).map(|i| (s.alpha[i] - s.beta[i]).exp()).collect();
    let x: Vec<f64> = (0..=n).map(|i| a[i] * s.pi[i]).collect();
    let y: Vec<f64> = (0..=n).map(|i| grid.r[i] * a[i] * s.big_phi[i]).collect();

    let mut dphi = x.clone();
    let mut dbig = vec![0.0; n + 1];
    let mut dpi = vec![0.0; n + 1];
    let inv2h = 0.5 / dr;
    for i in 0..n {
        let xm = RadialGrid::at(&x, i as isize - 1, Parity::Odd);
        dbig[i] = (x[i + 1] - xm) * inv2h;
    }
    for i in 1..n {
        let r = grid.r[i];
        let b = (s.alpha[i] + s.beta[i]).exp();
        dpi[i] = (y[i + 1] - y[i - 1]) * inv2h / r - b * s.target.f(s.phi[i]) / (r * r);
    }

    match cfg.boundary {
        BoundaryMode::Outgoing => {
            let rn = grid.r[n];
            let back = |u: &[f64]| (3.0 * u[n] - 4.0 * u[n - 1] + u[n - 2]) * inv2h;
            dphi[n] = -a[n] * (back(&s.phi) + 0.5 * s.phi[n] / rn);
            dbig[n] = -a[n] * (back(&s.big_phi) + 0.5 * s.big_phi[n] / rn);
            dpi[n] = -a[n] * (back(&s.pi) + 0.5 * s.pi[n] / rn);
        }
        BoundaryMode::Frozen => {
            dphi[n] = 0.0;
            dbig[n] = 0.0;
            dpi[n] = 0.0;
        }
        BoundaryMode::Exact(ex) => {
            let [p, f, q] = ex.fields_dt(s.t, grid.r[n]);
            dphi[n] = p;
            dbig[n] = f;
            dpi[n] = q;
        }
    }

    if cfg.dissipation_eps > 0.0 {
        let c = -cfg.dissipation_eps / (16.0 * dr);
        dissipate(&mut dphi, &s.phi, Parity::Odd, c);
        dissipate(&mut dbig, &s.big_phi, Parity::Even, c);
        dissipate(&mut dpi, &s.pi, Parity::Odd, c);
    }
    dphi[0] = 0.0;
    dpi[0] = 0.0;
    Rhs { phi: dphi, big_phi: dbig, pi: dpi }
}

/// Kreiss-Oliger term -(ε/16) h³ D₊²D₋² u on nodes 0..n-2.
fn dissipate(du: &mut [f64], u: &[f64], parity: Parity, c: f64) {
    let n = u.len() - 1;
    for i in 0..n - 1 {
        let ii = i as isize;
        let d4 = RadialGrid::at(u, ii + 2, parity) - 4.0 * RadialGrid::at(u, ii + 1, parity) + 6.0 * u[i]
            - 4.0 * RadialGrid::at(u, ii - 1, parity)
            + RadialGrid::at(u, ii - 2, parity);
        du[i] += c * d4;
    }
}

fn combine(base: &PolarState, k: &Rhs, dt: f64, t: f64) -> Result<PolarState> {
    let mut s = base.clone();
    s.t = t;
    for i in 0..s.phi.len() {
        s.phi[i] += dt * k.phi[i];
        s.big_phi[i] += dt * k.big_phi[i];
        s.pi[i] += dt * k.pi[i];
    }
    s.phi[0] = 0.0;
    s.pi[0] = 0.0;
    solve_metric_slice(&mut s)?;
    Ok(s)
}

/// Largest stable step for the current slice: cfl·dr / max e^{α-β}.
pub fn cfl_bound(s: &PolarState, cfl: f64) -> f64 {
    let amax = (0..=s.n()).map(|i| s.lapse_ratio(i)).fold(0.0, f64::max);
    cfl * s.grid.dr / amax.max(f64::MIN_POSITIVE)
}

/// One classical RK4 step with the metric re-solved at every stage.
pub fn rk4_step(s: &PolarState, dt: f64, cfg: &EvolveConfig) -> Result<PolarState> {
    let bound = cfl_bound(s, cfg.cfl);
    if dt > bound * (1.0 + 1e-9) {
        return Err(EwmError::CflViolation { dt, bound });
    }
    let t = s.t;
    let k1 = spatial_rhs(s, cfg);
    let s2 = combine(s, &k1, 0.5 * dt, t + 0.5 * dt)?;
    let k2 = spatial_rhs(&s2, cfg);
    let s3 = combine(s, &k2, 0.5 * dt, t + 0.5 * dt)?;
    let k3 = spatial_rhs(&s3, cfg);
    let s4 = combine(s, &k3, dt, t + dt)?;
    let k4 = spatial_rhs(&s4, cfg);
    let sum = Rhs {
        phi: (0..k1.phi.len()).map(|i| (k1.phi[i] + 2.0 * k2.phi[i] + 2.0 * k3.phi[i] + k4.phi[i]) / 6.0).collect(),
        big_phi: (0..k1.phi.len())
            .map(|i| (k1.big_phi[i] + 2.0 * k2.big_phi[i] + 2.0 * k3.big_phi[i] + k4.big_phi[i]) / 6.0)
            .collect(),
        pi: (0..k1.phi.len()).map(|i| (k1.pi[i] + 2.0 * k2.pi[i] + 2.0 * k3.pi[i] + k4.pi[i]) / 6.0).collect(),
    };
    let out = combine(s, &sum, dt, t + dt)?;
    check_finite(&out)?;
    Ok(out)
}

fn check_finite(s: &PolarState) -> Result<()> {
    let arrays: [(&'static str, &Vec<f64>); 5] = [
        ("phi", &s.phi),
        ("Phi", &s.big_phi),
        ("Pi", &s.pi),
        ("alpha", &s.alpha),
        ("beta", &s.beta),
    ];
    for (name, a) in arrays {
        if let Some(i) = a.iter().position(|v| !v.is_finite()) {
            return Err(EwmError::NonFiniteField { field: name, t: s.t, index: i });
        }
    }
    Ok(())
}

/// Grid L² norm of (β - β_prev)/dt - r κ e^{α-β} Π Φ at the time midpoint.
pub fn momentum_residual(cur: &PolarState, prev: &PolarState, dt: f64) -> f64 {
    let n = cur.n();
    let mut acc = 0.0;
    for i in 0..=n {
        let bt = (cur.beta[i] - prev.beta[i]) / dt;
        let a = 0.5 * ((cur.alpha[i] - cur.beta[i]).exp() + (prev.alpha[i] - prev.beta[i]).exp());
        let pi = 0.5 * (cur.pi[i] + prev.pi[i]);
        let f = 0.5 * (cur.big_phi[i] + prev.big_phi[i]);
        let res = bt - cur.grid.r[i] * cur.kappa * a * pi * f;
        acc += res * res;
    }
    (acc * cur.grid.dr).sqrt()
}

/// sup of e^{|α|}, e^{|β|}, |φ|, |Φ|, |Π|, |w| and 1/(1 - κE/2π) on the slice.
pub fn regularity_monitor(s: &PolarState) -> f64 {
    let n = s.n();
    let mut m: f64 = 0.0;
    for i in 0..=n {
        m = m
            .max(s.alpha[i].abs().exp())
            .max(s.beta[i].abs().exp())
            .max(s.phi[i].abs())
            .max(s.big_phi[i].abs())
            .max(s.pi[i].abs())
            .max(s.w(i).abs());
    }
    let ratio = s.kappa * s.energy() / (2.0 * std::f64::consts::PI);
    let inv = if ratio < 1.0 { 1.0 / (1.0 - ratio) } else { f64::INFINITY };
    m.max(inv)
}

/// Evolves to `cfg.t_end`, calling `observe` with every slice (including
/// the initial one) and its diagnostic record.
pub fn evolve_run(
    state0: PolarState,
    cfg: &EvolveConfig,
    diag: &DiagOptions,
    observe: &mut dyn FnMut(&PolarState, &DiagRecord),
) -> Result<PolarState> {
    validate(cfg)?;
    let rec0 = record_diagnostics(&state0, None, diag);
    observe(&state0, &rec0);
    let mut s = state0;
    while s.t < cfg.t_end {
        let bound = cfl_bound(&s, cfg.cfl);
        let mut dt = bound.min(cfg.t_end - s.t);
        if dt < 1e-12 * s.t.abs().max(1.0) {
            return Err(EwmError::Stalled { t: s.t, dt });
        }
        // Absorb a sliver of remaining time into this step.
        let last = cfg.t_end - (s.t + dt) < 1e-10 * bound;
        if last {
            dt = cfg.t_end - s.t;
        }
        let mut next = rk4_step(&s, dt, cfg)?;
        if last {
            next.t = cfg.t_end;
        }
        let rec = record_diagnostics(&next, Some((&s, dt)), diag);
        observe(&next, &rec);
        s = next;
    }
    Ok(s)
}

fn validate(cfg: &EvolveConfig) -> Result<()> {
    let mut errs = Vec::new();
    if !(cfg.cfl > 0.0 && cfg.cfl <= 1.0) {
        errs.push(format!("cfl must lie in (0, 1], got {}", cfg.cfl));
    }
    if !(cfg.t_end.is_finite() && cfg.t_end > 0.0) {
        errs.push(format!("t_end must be > 0, got {}", cfg.t_end));
    }
    if !(cfg.dissipation_eps.is_finite() && cfg.dissipation_eps >= 0.0) {
        errs.push(format!("dissipation_eps must be >= 0, got {}", cfg.dissipation_eps));
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(EwmError::Validation(errs))
    }
}

/// Runs and keeps every slice.
pub fn evolve_history(state0: PolarState, cfg: &EvolveConfig, diag: &DiagOptions) -> Result<(Vec<PolarState>, Vec<DiagRecord>)> {
    let mut slices = Vec::new();
    let mut recs = Vec::new();
    evolve_run(state0, cfg, diag, &mut |s, r| {
        slices.push(s.clone());
        recs.push(r.clone());
    })?;
    Ok((slices, recs))
}
