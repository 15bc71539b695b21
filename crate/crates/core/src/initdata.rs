//! Radial grid, initial profiles, the polar-areal slice and its metric.
//!
//! On a slice the metric functions solve the Hamiltonian and slicing
//! constraints
//!
//! ```text
//! β_r =  ½ r κ (Π² + Φ²) + ½ κ e^{2β} g(φ)² / r
//! α_r =  ½ r κ (Π² + Φ²) - ½ κ e^{2β} g(φ)² / r
//! ```
//!
//! with α(0) = β(0) = 0.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{EwmError, Result};
use crate::flatwave::FlatExact;
use crate::target::TargetGeometry;

/// Largest β the metric integrator accepts before declaring the slice
/// supercritical (e^{-β} below 1e-8).
pub const BETA_GUARD: f64 = 18.42;

/// Default admissibility margin: κE₀/2π must stay below 1 - margin.
pub const SUBCRITICAL_MARGIN: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Odd,
    Even,
}

impl Parity {
    fn sign(self) -> f64 {
        match self {
            Parity::Odd => -1.0,
            Parity::Even => 1.0,
        }
    }
}

/// Uniform grid r_i = i·dr, i = 0..=n.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialGrid {
    pub n: usize,
    pub dr: f64,
    pub r: Vec<f64>,
}

impl RadialGrid {
    pub fn new(r_max: f64, n: usize) -> Result<Self> {
        if !(r_max.is_finite() && r_max > 0.0) || n < 8 {
            return Err(EwmError::Domain(format!("grid needs r_max > 0 and n >= 8 (r_max={r_max}, n={n})")));
        }
        let dr = r_max / n as f64;
        Ok(RadialGrid { n, dr, r: (0..=n).map(|i| i as f64 * dr).collect() })
    }

    pub fn r_max(&self) -> f64 {
        self.r[self.n]
    }

    /// Value at index `i`, reflecting through the axis for negative indices.
    #[inline]
    pub fn at(u: &[f64], i: isize, parity: Parity) -> f64 {
        if i >= 0 {
            u[i as usize]
        } else {
            parity.sign() * u[(-i) as usize]
        }
    }

    /// Four-point Lagrange interpolation at an arbitrary radius in [0, r_max].
    pub fn interpolate(&self, u: &[f64], parity: Parity, r: f64) -> f64 {
        let x = (r / self.dr).clamp(0.0, self.n as f64);
        let mut i0 = (x.floor() as isize - 1).min(self.n as isize - 3);
        if i0 > self.n as isize - 3 {
            i0 = self.n as isize - 3;
        }
        let s = x - i0 as f64;
        let v = [
            Self::at(u, i0, parity),
            Self::at(u, i0 + 1, parity),
            Self::at(u, i0 + 2, parity),
            Self::at(u, i0 + 3, parity),
        ];
        lagrange4(s, v)
    }

    /// Value half-way between nodes i and i+1 (4th-order accurate).
    #[inline]
    pub fn midpoint(&self, u: &[f64], parity: Parity, i: usize) -> f64 {
        let ii = i as isize;
        if i + 2 <= self.n {
            (-Self::at(u, ii - 1, parity) + 9.0 * u[i] + 9.0 * u[i + 1] - u[i + 2]) / 16.0
        } else {
            (Self::at(u, ii - 2, parity) - 5.0 * Self::at(u, ii - 1, parity) + 15.0 * u[i] + 5.0 * u[i + 1]) / 16.0
        }
    }
}

/// Lagrange interpolation through nodes 0, 1, 2, 3 evaluated at s.
pub fn lagrange4(s: f64, v: [f64; 4]) -> f64 {
    let (a, b, c, d) = (s, s - 1.0, s - 2.0, s - 3.0);
    -v[0] * b * c * d / 6.0 + v[1] * a * c * d / 2.0 - v[2] * a * b * d / 2.0 + v[3] * a * b * c / 6.0
}

/// How the initial time derivative is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Motion {
    /// Π = 0
    TimeSymmetric,
    /// Π = c·(Φ - φ/r): a fraction c of an ingoing w-wave.
    Ingoing(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub enum DataProfile {
    /// A·r·exp(-(r/σ)²)
    Centered { amp: f64, sigma: f64 },
    /// A·r·exp(-((r²-r₀²)/σ²)²)
    Shell { amp: f64, sigma: f64, r0: f64 },
    /// Tabulated φ(r) with r[0] = 0, interpolated by cubic Hermite.
    Table { r: Vec<f64>, phi: Vec<f64> },
    /// The t = 0 slice of an exact flat solution (sets Π itself).
    Exact(FlatExact),
}

/// φ, Φ = ∂ᵣφ and Π on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceFields {
    pub phi: Vec<f64>,
    pub big_phi: Vec<f64>,
    pub pi: Vec<f64>,
}

pub fn build_profile(profile: &DataProfile, motion: Motion, grid: &RadialGrid) -> Result<SliceFields> {
    let n = grid.n;
    let mut phi = vec![0.0; n + 1];
    let mut big_phi = vec![0.0; n + 1];
    let mut pi = vec![0.0; n + 1];
    let amp_scale: Option<f64>;
    match profile {
        DataProfile::Centered { amp, sigma } => {
            check_profile_params(*amp, *sigma)?;
            amp_scale = Some(*amp);
            for (i, &r) in grid.r.iter().enumerate() {
                let x = r / sigma;
                let e = (-x * x).exp();
                phi[i] = amp * r * e;
                big_phi[i] = amp * e * (1.0 - 2.0 * x * x);
            }
        }
        DataProfile::Shell { amp, sigma, r0 } => {
            check_profile_params(*amp, *sigma)?;
            if !r0.is_finite() || *r0 < 0.0 {
                return Err(EwmError::Domain(format!("shell radius must be >= 0, got {r0}")));
            }
            amp_scale = Some(*amp);
            let s2 = sigma * sigma;
            for (i, &r) in grid.r.iter().enumerate() {
                let u = (r * r - r0 * r0) / s2;
                let e = (-u * u).exp();
                phi[i] = amp * r * e;
                big_phi[i] = amp * e * (1.0 - 4.0 * r * r * u / s2);
            }
        }
        DataProfile::Table { r, phi: tab } => {
            let h = HermiteTable::from_values(r, tab)?;
            if grid.r_max() > h.r_max() + 1e-12 {
                return Err(EwmError::Domain(format!(
                    "table ends at r={} before the grid edge {}",
                    h.r_max(),
                    grid.r_max()
                )));
            }
            amp_scale = Some(tab.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
            for (i, &ri) in grid.r.iter().enumerate() {
                let (v, d) = h.eval(ri);
                phi[i] = v;
                big_phi[i] = d;
            }
            phi[0] = 0.0;
        }
        DataProfile::Exact(ex) => {
            for (i, &r) in grid.r.iter().enumerate() {
                let [p, dp, pp] = ex.fields(0.0, r);
                phi[i] = p;
                big_phi[i] = dp;
                pi[i] = pp;
            }
            return Ok(SliceFields { phi, big_phi, pi });
        }
    }
    if let Some(a) = amp_scale {
        let tail = phi[n].abs();
        if tail > 1e-12 * a.abs() {
            return Err(EwmError::SupportOverflow { tail });
        }
    }
    if let Motion::Ingoing(c) = motion {
        for i in 1..=n {
            pi[i] = c * (big_phi[i] - phi[i] / grid.r[i]);
        }
    }
    Ok(SliceFields { phi, big_phi, pi })
}

fn check_profile_params(amp: f64, sigma: f64) -> Result<()> {
    if !amp.is_finite() || !(sigma.is_finite() && sigma > 0.0) {
        return Err(EwmError::Domain(format!("profile needs finite A and sigma > 0 (A={amp}, sigma={sigma})")));
    }
    Ok(())
}

/// Piecewise cubic Hermite interpolant with centered-difference slopes.
#[derive(Clone, Debug, PartialEq)]
pub struct HermiteTable {
    x: Vec<f64>,
    y: Vec<f64>,
    dy: Vec<f64>,
}

impl HermiteTable {
    pub fn new(x: Vec<f64>, y: Vec<f64>, dy: Vec<f64>) -> Result<Self> {
        if x.len() < 2 || x.len() != y.len() || x.len() != dy.len() {
            return Err(EwmError::Domain("table needs at least two rows of equal length".into()));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(EwmError::Domain("table abscissae must increase".into()));
        }
        Ok(HermiteTable { x, y, dy })
    }

    pub fn from_values(x: &[f64], y: &[f64]) -> Result<Self> {
        if x.len() < 3 || x.len() != y.len() {
            return Err(EwmError::Domain("table needs at least three rows".into()));
        }
        let m = x.len();
        let mut dy = vec![0.0; m];
        for k in 0..m {
            let (a, b) = if k == 0 {
                (0, 1)
            } else if k == m - 1 {
                (m - 2, m - 1)
            } else {
                (k - 1, k + 1)
            };
            dy[k] = (y[b] - y[a]) / (x[b] - x[a]);
        }
        Self::new(x.to_vec(), y.to_vec(), dy)
    }

    pub fn r_max(&self) -> f64 {
        *self.x.last().unwrap()
    }

    pub fn r_min(&self) -> f64 {
        self.x[0]
    }

    /// Value and derivative. Outside the table the end cubic is extended.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let k = match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            p => (p - 1).min(self.x.len() - 2),
        };
        let h = self.x[k + 1] - self.x[k];
        let s = (t - self.x[k]) / h;
        let (y0, y1, m0, m1) = (self.y[k], self.y[k + 1], self.dy[k] * h, self.dy[k + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * m1;
        let d = (6.0 * s2 - 6.0 * s) * y0 + (3.0 * s2 - 4.0 * s + 1.0) * m0 + (-6.0 * s2 + 6.0 * s) * y1 + (3.0 * s2 - 2.0 * s) * m1;
        (v, d / h)
    }
}

/// One slice of the polar-areal evolution.
#[derive(Clone, Debug)]
pub struct PolarState {
    pub t: f64,
    pub grid: Arc<RadialGrid>,
    pub phi: Vec<f64>,
    /// Φ = ∂ᵣφ
    pub big_phi: Vec<f64>,
    /// Π = e^{β-α} ∂ₜφ
    pub pi: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub kappa: f64,
    pub target: Arc<TargetGeometry>,
}

impl PolarState {
    /// Builds a slice from field data and solves its metric.
    pub fn new(t: f64, grid: Arc<RadialGrid>, fields: SliceFields, kappa: f64, target: Arc<TargetGeometry>) -> Result<Self> {
        let n = grid.n;
        if fields.phi.len() != n + 1 || fields.big_phi.len() != n + 1 || fields.pi.len() != n + 1 {
            return Err(EwmError::Domain("field arrays must have n+1 entries".into()));
        }
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(EwmError::Domain(format!("kappa must be finite and >= 0, got {kappa}")));
        }
        let mut s = PolarState {
            t,
            grid,
            phi: fields.phi,
            big_phi: fields.big_phi,
            pi: fields.pi,
            alpha: vec![0.0; n + 1],
            beta: vec![0.0; n + 1],
            kappa,
            target,
        };
        s.phi[0] = 0.0;
        s.pi[0] = 0.0;
        solve_metric_slice(&mut s)?;
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    /// Energy density e = ½e^{-2β}(Π²+Φ²) + ½g(φ)²/r².
    pub fn energy_density(&self, i: usize) -> f64 {
        let e2b = (-2.0 * self.beta[i]).exp();
        let kin = 0.5 * e2b * (self.pi[i] * self.pi[i] + self.big_phi[i] * self.big_phi[i]);
        kin + 0.5 * self.g_over_r(i).powi(2)
    }

    /// Momentum density e^{-2β}ΠΦ.
    pub fn momentum_density(&self, i: usize) -> f64 {
        (-2.0 * self.beta[i]).exp() * self.pi[i] * self.big_phi[i]
    }

    /// g(φ)/r, equal to Φ(0) on the axis.
    pub fn g_over_r(&self, i: usize) -> f64 {
        if i == 0 {
            self.big_phi[0]
        } else {
            self.target.g(self.phi[i]) / self.grid.r[i]
        }
    }

    /// w = φ/r, equal to Φ(0) on the axis.
    pub fn w(&self, i: usize) -> f64 {
        if i == 0 {
            self.big_phi[0]
        } else {
            self.phi[i] / self.grid.r[i]
        }
    }

    /// e^{α-β}
    pub fn lapse_ratio(&self, i: usize) -> f64 {
        (self.alpha[i] - self.beta[i]).exp()
    }

    pub fn fields(&self) -> SliceFields {
        SliceFields { phi: self.phi.clone(), big_phi: self.big_phi.clone(), pi: self.pi.clone() }
    }

    /// Cumulative energy E(t, r_i) = 2π ∫₀^{r_i} e r e^β dr (trapezoid).
    pub fn energy_profile(&self) -> Vec<f64> {
        let n = self.n();
        let dr = self.grid.dr;
        let mut out = vec![0.0; n + 1];
        let mut prev = 0.0;
        for i in 1..=n {
            let cur = self.energy_density(i) * self.grid.r[i] * self.beta[i].exp();
            out[i] = out[i - 1] + PI * dr * (prev + cur);
            prev = cur;
        }
        out
    }

    /// Total energy E(t, r_max).
    pub fn energy(&self) -> f64 {
        self.energy_profile()[self.n()]
    }

    /// Energy inside radius `r_stop` (linear interpolation inside the last cell).
    pub fn energy_within(&self, r_stop: f64) -> f64 {
        let prof = self.energy_profile();
        let x = (r_stop / self.grid.dr).clamp(0.0, self.n() as f64);
        let k = (x.floor() as usize).min(self.n() - 1);
        let s = x - k as f64;
        prof[k] + s * (prof[k + 1] - prof[k])
    }

    /// Largest deviation from Φ = ∂ᵣφ measured with centered differences.
    pub fn phi_consistency(&self) -> f64 {
        let n = self.n();
        let dr = self.grid.dr;
        (1..n)
            .map(|i| (self.big_phi[i] - (self.phi[i + 1] - self.phi[i - 1]) / (2.0 * dr)).abs())
            .fold(0.0, f64::max)
    }
}

/// Integrates the metric ODEs outward from the axis with classical RK4.
/// Half-step field values come from four-point interpolation.
pub fn solve_metric_slice(state: &mut PolarState) -> Result<()> {
    let grid = state.grid.clone();
    let n = grid.n;
    let dr = grid.dr;
    let kappa = state.kappa;
    state.alpha[0] = 0.0;
    state.beta[0] = 0.0;
    if kappa == 0.0 {
        state.alpha.iter_mut().for_each(|v| *v = 0.0);
        state.beta.iter_mut().for_each(|v| *v = 0.0);
        return Ok(());
    }
    let target = state.target.clone();
    // Returns (α', β') at radius r for field values and β.
    let src = |r: f64, phi: f64, bphi: f64, pi: f64, beta: f64| -> (f64, f64) {
        let p = 0.5 * r * kappa * (pi * pi + bphi * bphi);
        if r == 0.0 {
            return (p, p);
        }
        let g = target.g(phi);
        let q = 0.5 * kappa * (2.0 * beta).exp() * g * g / r;
        (p - q, p + q)
    };
    for i in 0..n {
        let r0 = grid.r[i];
        let rm = r0 + 0.5 * dr;
        let r1 = grid.r[i + 1];
        let (p0, f0, q0) = (state.phi[i], state.big_phi[i], state.pi[i]);
        let pm = grid.midpoint(&state.phi, Parity::Odd, i);
        let fm = grid.midpoint(&state.big_phi, Parity::Even, i);
        let qm = grid.midpoint(&state.pi, Parity::Odd, i);
        let (p1, f1, q1) = (state.phi[i + 1], state.big_phi[i + 1], state.pi[i + 1]);
        let b = state.beta[i];
        let (a1, b1) = src(r0, p0, f0, q0, b);
        let (a2, b2) = src(rm, pm, fm, qm, b + 0.5 * dr * b1);
        let (a3, b3) = src(rm, pm, fm, qm, b + 0.5 * dr * b2);
        let (a4, b4) = src(r1, p1, f1, q1, b + dr * b3);
        let nb = b + dr / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        let na = state.alpha[i] + dr / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        if !nb.is_finite() || nb > BETA_GUARD {
            // e^{-β} = 1 - κE(r)/2π, so β past the guard means the ratio reached 1.
            let ratio = if nb.is_finite() { -(-nb).exp_m1() } else { 1.0 };
            return Err(EwmError::SupercriticalEnergy { ratio, limit: 1.0 });
        }
        if !na.is_finite() {
            return Err(EwmError::NonFiniteField { field: "alpha", t: state.t, index: i + 1 });
        }
        state.beta[i + 1] = nb;
        state.alpha[i + 1] = na;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubcriticalityReport {
    pub e0: f64,
    /// κE₀/2π
    pub ratio: f64,
    /// 1 - (1 - κE₀/2π)², the asymptotic mass.
    pub m_inf: f64,
    pub admissible: bool,
}

pub fn check_subcriticality(state: &PolarState, margin: f64) -> SubcriticalityReport {
    let e0 = state.energy();
    let ratio = state.kappa * e0 / (2.0 * PI);
    SubcriticalityReport { e0, ratio, m_inf: 1.0 - (1.0 - ratio).powi(2), admissible: ratio < 1.0 - margin }
}

/// Builds and validates an initial slice: profile, metric, subcriticality.
pub fn initial_state(
    profile: &DataProfile,
    motion: Motion,
    grid: Arc<RadialGrid>,
    kappa: f64,
    target: Arc<TargetGeometry>,
) -> Result<PolarState> {
    let fields = build_profile(profile, motion, &grid)?;
    let state = PolarState::new(0.0, grid, fields, kappa, target)?;
    let rep = check_subcriticality(&state, SUBCRITICAL_MARGIN);
    if !rep.admissible {
        return Err(EwmError::SupercriticalEnergy { ratio: rep.ratio, limit: 1.0 - SUBCRITICAL_MARGIN });
    }
    Ok(state)
}
