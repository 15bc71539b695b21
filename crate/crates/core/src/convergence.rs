//! Three-level (or longer) refinement studies.
//!
//! Level k runs with n·2^k cells; the time step follows dr through the fixed
//! CFL number and the null step is tied to dr as well. Levels run in
//! parallel on a rayon pool whose size `EWM_THREADS` caps.

use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{EwmError, Result};
use crate::evolve_null::{axis_series, null_constraint_residuals};
use crate::run::{initial_polar, polar_history, run_null_scheme};
use crate::evolve_polar::evolve_run;
use crate::diagnostics::DiagOptions;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Observable {
    /// max_t |E(t) - E(0)| / E(0)
    EDrift,
    /// max over steps of the momentum-constraint residual
    MomResidual,
    /// max_r |φ - φ_exact| at t_end
    FieldErrorVsExact,
    /// max of the two null constraint residuals
    NullConstraints,
    /// polar vs null difference, see [`cross_scheme_difference`]
    CrossSchemeAxis,
}

impl FromStr for Observable {
    type Err = EwmError;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "E_drift" => Observable::EDrift,
            "mom_residual" => Observable::MomResidual,
            "field_error_vs_exact" => Observable::FieldErrorVsExact,
            "null_constraints" => Observable::NullConstraints,
            "cross_scheme_axis" => Observable::CrossSchemeAxis,
            other => {
                return Err(EwmError::Validation(vec![format!(
                    "unknown observable {other}; expected E_drift, mom_residual, field_error_vs_exact, null_constraints or cross_scheme_axis"
                )]))
            }
        })
    }
}

impl Observable {
    pub fn name(&self) -> &'static str {
        match self {
            Observable::EDrift => "E_drift",
            Observable::MomResidual => "mom_residual",
            Observable::FieldErrorVsExact => "field_error_vs_exact",
            Observable::NullConstraints => "null_constraints",
            Observable::CrossSchemeAxis => "cross_scheme_axis",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Level {
    pub n: usize,
    pub dr: f64,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub observable: &'static str,
    pub levels: Vec<Level>,
    /// log₂(v_k / v_{k+1}); every observable tends to zero.
    pub orders: Vec<f64>,
    /// log₂(|v_k - v_{k+1}| / |v_{k+1} - v_{k+2}|)
    pub richardson: Vec<f64>,
}

impl ConvergenceReport {
    pub fn min_order(&self) -> f64 {
        self.orders.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

pub fn orders(values: &[f64]) -> Vec<f64> {
    values.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

pub fn richardson(values: &[f64]) -> Vec<f64> {
    values.windows(3).map(|w| ((w[0] - w[1]).abs() / (w[1] - w[2]).abs()).log2()).collect()
}

/// Worker count from `EWM_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var("EWM_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|n| *n > 0)
}

pub fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap() {
        b = b.num_threads(n);
    }
    let pool = b.build().map_err(|e| EwmError::Io(e.to_string()))?;
    Ok(pool.install(f))
}

pub fn observe(cfg: &RunConfig, base: Option<&Path>, obs: Observable) -> Result<f64> {
    match obs {
        Observable::EDrift => {
            let s0 = initial_polar(cfg, base)?;
            let e0 = s0.energy();
            let mut d: f64 = 0.0;
            evolve_run(s0, &cfg.evolve_config(), &DiagOptions::default(), &mut |_, r| {
                d = d.max((r.e_total - e0).abs());
            })?;
            Ok(if e0 > 0.0 { d / e0 } else { d })
        }
        Observable::MomResidual => {
            let s0 = initial_polar(cfg, base)?;
            let mut d: f64 = 0.0;
            evolve_run(s0, &cfg.evolve_config(), &DiagOptions::default(), &mut |_, r| {
                if r.mom_residual.is_finite() {
                    d = d.max(r.mom_residual);
                }
            })?;
            Ok(d)
        }
        Observable::FieldErrorVsExact => {
            let ex = cfg.data.exact().ok_or_else(|| {
                EwmError::Validation(vec!["field_error_vs_exact needs data.kind = \"exact\"".into()])
            })?;
            let s0 = initial_polar(cfg, base)?;
            let s = evolve_run(s0, &cfg.evolve_config(), &DiagOptions::default(), &mut |_, _| {})?;
            Ok((0..=s.n()).map(|i| (s.phi[i] - ex.fields(s.t, s.grid.r[i])[0]).abs()).fold(0.0, f64::max))
        }
        Observable::NullConstraints => {
            let st = run_null_scheme(cfg, base)?;
            let (a, b) = null_constraint_residuals(&st);
            Ok(a.max(b))
        }
        Observable::CrossSchemeAxis => cross_scheme_difference(cfg, base),
    }
}

/// Largest polar/null disagreement.
///
/// With κ = 0 the coordinates agree exactly (u = t - r, ū = t + r) and φ is
/// compared node by node on the slice t = `evolve.t_end`; this needs the
/// null step equal to 2 dr. Otherwise w on the axis is compared as a
/// function of proper time, which both gauges measure by t on the axis.
pub fn cross_scheme_difference(cfg: &RunConfig, base: Option<&Path>) -> Result<f64> {
    let st = run_null_scheme(cfg, base)?;
    let g = st.grid;
    if cfg.kappa == 0.0 {
        let s0 = initial_polar(cfg, base)?;
        let dr = s0.grid.dr;
        if ((g.h - 2.0 * dr) / dr).abs() > 1e-9 {
            return Err(EwmError::Validation(vec!["flat cross-scheme comparison needs null.h = 2 dr".into()]));
        }
        let t = cfg.evolve.t_end;
        let m = (t / dr).round() as usize;
        if ((m as f64) * dr - t).abs() > 1e-9 * t.max(1.0) {
            return Err(EwmError::Validation(vec!["evolve.t_end must be a multiple of dr".into()]));
        }
        let s = evolve_run(s0, &cfg.evolve_config(), &DiagOptions::default(), &mut |_, _| {})?;
        let mut worst: f64 = 0.0;
        let mut count = 0;
        for i in 0..=g.n_u.min(m / 2) {
            let j = m - i;
            if j > g.n_ub || j < i || j - i > s.n() {
                continue;
            }
            worst = worst.max((st.get(&st.phi, i, j) - s.phi[j - i]).abs());
            count += 1;
        }
        if count == 0 {
            return Err(EwmError::Validation(vec!["null domain does not meet the slice t = t_end".into()]));
        }
        return Ok(worst);
    }
    let mut c = cfg.clone();
    c.evolve.t_end = cfg.null.u_max.max(cfg.null.ub_max) + 1.0;
    let (_, recs) = polar_history(&c, base)?;
    let ts: Vec<f64> = recs.iter().map(|r| r.t).collect();
    let ws: Vec<f64> = recs.iter().map(|r| r.w_axis).collect();
    let mut worst: f64 = 0.0;
    for (tau, w) in axis_series(&st) {
        if tau > ts[ts.len() - 1] {
            break;
        }
        let k = ts.partition_point(|t| *t < tau).clamp(1, ts.len() - 1);
        let s = (tau - ts[k - 1]) / (ts[k] - ts[k - 1]);
        let wp = ws[k - 1] + s * (ws[k] - ws[k - 1]);
        worst = worst.max((wp - w).abs());
    }
    Ok(worst)
}

pub fn convergence_study(cfg: &RunConfig, base: Option<&Path>, levels: usize, obs: Observable) -> Result<ConvergenceReport> {
    if levels < 3 {
        return Err(EwmError::Validation(vec![format!("levels must be >= 3, got {levels}")]));
    }
    let cfgs: Vec<RunConfig> = (0..levels).map(|k| cfg.refined(1 << k)).collect();
    let vals: Vec<Result<f64>> = with_pool(|| cfgs.par_iter().map(|c| observe(c, base, obs)).collect())?;
    let mut out = Vec::with_capacity(levels);
    for (c, v) in cfgs.iter().zip(vals) {
        out.push(Level { n: c.grid.n, dr: c.grid.r_max / c.grid.n as f64, value: v? });
    }
    let values: Vec<f64> = out.iter().map(|l| l.value).collect();
    Ok(ConvergenceReport { observable: obs.name(), orders: orders(&values), richardson: richardson(&values), levels: out })
}
