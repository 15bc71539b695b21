//! Browser bindings for three small operations of `ewm-core`.
//!
//! Results come back as flat `Float64Array`s with a fixed stride so the page
//! can plot them without any glue beyond slicing.

use std::sync::Arc;

use ewm_core::diagnostics::{mass_profile, DiagOptions};
use ewm_core::evolve_polar::{evolve_run, EvolveConfig};
use ewm_core::flatwave::{kernel_j, kernel_k};
use ewm_core::initdata::{initial_state, DataProfile, Motion, RadialGrid};
use ewm_core::target::TargetGeometry;
use wasm_bindgen::prelude::*;

fn target_by_name(name: &str) -> Result<TargetGeometry, String> {
    match name {
        "flat" => Ok(TargetGeometry::flat()),
        "hyperbolic" => Ok(TargetGeometry::hyperbolic()),
        "sphere" => Ok(TargetGeometry::sphere()),
        other => Err(format!("unknown target {other}")),
    }
}

/// Rows of (μ, K, J). The point μ = 1, where both kernels diverge, is skipped.
pub fn kernel_table(mu_min: f64, mu_max: f64, samples: usize) -> Result<Vec<f64>, String> {
    if !(mu_min >= -1.0 && mu_max > mu_min && samples >= 2) {
        return Err("need -1 <= mu_min < mu_max and samples >= 2".into());
    }
    let mut out = Vec::with_capacity(3 * samples);
    for k in 0..samples {
        let mu = mu_min + (mu_max - mu_min) * k as f64 / (samples - 1) as f64;
        if (mu - 1.0).abs() < 1e-12 {
            continue;
        }
        let kv = kernel_k(mu).map_err(|e| e.to_string())?;
        let jv = kernel_j(mu).map_err(|e| e.to_string())?;
        out.extend([mu, kv, jv]);
    }
    Ok(out)
}

/// Rows of (s, g(s), s g'(s) + g(s)) on [0, s_max].
pub fn target_table(name: &str, s_max: f64, samples: usize) -> Result<Vec<f64>, String> {
    let t = target_by_name(name)?;
    if !(s_max > 0.0 && samples >= 2) {
        return Err("need s_max > 0 and samples >= 2".into());
    }
    let mut out = Vec::with_capacity(3 * samples);
    for k in 0..samples {
        let s = s_max * k as f64 / (samples - 1) as f64;
        out.extend([s, t.g(s), t.grillakis_margin(s)]);
    }
    Ok(out)
}

/// Evolves a centered pulse with κ = 1 and returns rows of (r, φ, m) at
/// `t_end`, followed by one trailer row (E(0), E(t_end), max |Φ|).
pub fn pulse_table(name: &str, amp: f64, sigma: f64, t_end: f64, n: usize) -> Result<Vec<f64>, String> {
    let target = Arc::new(target_by_name(name)?);
    let r_max = (8.0 * sigma).max(t_end + 6.0 * sigma);
    let grid = Arc::new(RadialGrid::new(r_max, n).map_err(|e| e.to_string())?);
    let s0 = initial_state(&DataProfile::Centered { amp, sigma }, Motion::TimeSymmetric, grid, 1.0, target)
        .map_err(|e| e.to_string())?;
    let e0 = s0.energy();
    let cfg = EvolveConfig { t_end, ..Default::default() };
    let mut phi_x: f64 = 0.0;
    let s = evolve_run(s0, &cfg, &DiagOptions::default(), &mut |s, _| {
        phi_x = s.big_phi.iter().fold(phi_x, |m, v| m.max(v.abs()));
    })
    .map_err(|e| e.to_string())?;
    let m = mass_profile(&s);
    let mut out = Vec::with_capacity(3 * (s.n() + 2));
    for i in 0..=s.n() {
        out.extend([s.grid.r[i], s.phi[i], m[i]]);
    }
    out.extend([e0, s.energy(), phi_x]);
    Ok(out)
}

#[wasm_bindgen]
pub fn kernel_curves(mu_min: f64, mu_max: f64, samples: usize) -> Result<Vec<f64>, JsValue> {
    kernel_table(mu_min, mu_max, samples).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn target_profile(name: &str, s_max: f64, samples: usize) -> Result<Vec<f64>, JsValue> {
    target_table(name, s_max, samples).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn pulse_snapshot(name: &str, amp: f64, sigma: f64, t_end: f64, n: usize) -> Result<Vec<f64>, JsValue> {
    pulse_table(name, amp, sigma, t_end, n).map_err(|e| JsValue::from_str(&e))
}
