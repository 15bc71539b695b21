//! Per-slice diagnostics and the backward-cone energy identities.
//!
//! Cone quantities work on a stored history of polar slices. The backward
//! cone of a point on the axis is traced with dr/dt = -e^{α-β}.

use std::f64::consts::PI;

use crate::error::{EwmError, Result};
use crate::initdata::{Parity, PolarState};

#[derive(Clone, Debug, PartialEq)]
pub struct DiagRecord {
    pub t: f64,
    pub e_total: f64,
    /// Energy inside the fixed radius `DiagOptions::r_ball`.
    pub e_ball: f64,
    /// Largest Hawking-type mass m(r) = 1 - e^{-2β} on the slice.
    pub m_max: f64,
    /// min over r of 1 - κE(t, r)/2π
    pub one_minus_ke_min: f64,
    /// NaN on the first slice.
    pub mom_residual: f64,
    pub n_monitor: f64,
    pub phi_max: f64,
    /// φ/r on the axis, i.e. Φ(t, 0).
    pub w_axis: f64,
    /// s g'(s) + g(s) at s = max|φ|.
    pub grillakis_margin: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DiagOptions {
    /// Radius for `e_ball`; `None` means half the grid.
    pub r_ball: Option<f64>,
}

/// Mass profile m(r) = 1 - e^{-2β}.
pub fn mass_profile(s: &PolarState) -> Vec<f64> {
    s.beta.iter().map(|b| -(-2.0 * b).exp_m1()).collect()
}

pub fn record_diagnostics(s: &PolarState, prev: Option<(&PolarState, f64)>, opts: &DiagOptions) -> DiagRecord {
    let n = s.n();
    let prof = s.energy_profile();
    let e_total = prof[n];
    let r_ball = opts.r_ball.unwrap_or(0.5 * s.grid.r_max());
    let e_ball = s.energy_within(r_ball);
    let m_max = mass_profile(s).into_iter().fold(f64::NEG_INFINITY, f64::max);
    let one_minus = prof.iter().map(|e| 1.0 - s.kappa * e / (2.0 * PI)).fold(f64::INFINITY, f64::min);
    let mom = match prev {
        Some((p, dt)) => crate::evolve_polar::momentum_residual(s, p, dt),
        None => f64::NAN,
    };
    let phi_max = s.phi.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    DiagRecord {
        t: s.t,
        e_total,
        e_ball,
        m_max,
        one_minus_ke_min: one_minus,
        mom_residual: mom,
        n_monitor: crate::evolve_polar::regularity_monitor(s),
        phi_max,
        w_axis: s.big_phi[0],
        grillakis_margin: s.target.grillakis_margin(phi_max),
    }
}

/// Max over r of |e^{-β} + κE(t,r)/2π - 1|.
pub fn energy_identity_residual(s: &PolarState) -> f64 {
    s.energy_profile()
        .iter()
        .zip(&s.beta)
        .map(|(e, b)| ((-b).exp() + s.kappa * e / (2.0 * PI) - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Field values interpolated to an arbitrary radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointValues {
    pub phi: f64,
    pub big_phi: f64,
    pub pi: f64,
    pub alpha: f64,
    pub beta: f64,
    pub g_over_r: f64,
}

impl PointValues {
    pub fn at(s: &PolarState, r: f64) -> Self {
        let g = &*s.grid;
        let phi = g.interpolate(&s.phi, Parity::Odd, r);
        let w: Vec<f64> = (0..=s.n()).map(|i| s.w(i)).collect();
        let wr = g.interpolate(&w, Parity::Even, r);
        let g_over_r = if phi != 0.0 { s.target.g(phi) / phi * wr } else { wr };
        PointValues {
            phi,
            big_phi: g.interpolate(&s.big_phi, Parity::Even, r),
            pi: g.interpolate(&s.pi, Parity::Odd, r),
            alpha: g.interpolate(&s.alpha, Parity::Even, r),
            beta: g.interpolate(&s.beta, Parity::Even, r),
            g_over_r,
        }
    }

    pub fn energy_density(&self) -> f64 {
        0.5 * (-2.0 * self.beta).exp() * (self.pi * self.pi + self.big_phi * self.big_phi)
            + 0.5 * self.g_over_r * self.g_over_r
    }

    pub fn momentum_density(&self) -> f64 {
        (-2.0 * self.beta).exp() * self.pi * self.big_phi
    }

    /// e - f - m with f = g²/r² the angular part.
    pub fn e_minus_f_minus_m(&self) -> f64 {
        let d = self.pi - self.big_phi;
        0.5 * (-2.0 * self.beta).exp() * d * d - 0.5 * self.g_over_r * self.g_over_r
    }
}

/// Trapezoid rule for ∫₀^{r_stop} F(r_i) dr on the slice grid, with the last
/// partial cell closed by linear interpolation.
pub fn radial_integral(s: &PolarState, r_stop: f64, f: impl Fn(usize) -> f64) -> f64 {
    let dr = s.grid.dr;
    let x = (r_stop / dr).clamp(0.0, s.n() as f64);
    let k = (x.floor() as usize).min(s.n() - 1);
    let frac = x - k as f64;
    let mut acc = 0.0;
    let mut prev = f(0);
    for i in 1..=k {
        let cur = f(i);
        acc += 0.5 * dr * (prev + cur);
        prev = cur;
    }
    if frac > 0.0 {
        let next = f(k + 1);
        let end = prev + frac * (next - prev);
        acc += 0.5 * frac * dr * (prev + end);
    }
    acc
}

/// Backward light cone from the axis point at `t_vertex`, sampled on the
/// stored slices up to the vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeGeometry {
    pub t_vertex: f64,
    /// Interior cones use ϱ = λ'·r₂.
    pub lambda_prime: f64,
    /// Indices of the history slices covered (ascending time).
    pub slices: Vec<usize>,
    pub r2: Vec<f64>,
}

fn lapse_at(s: &PolarState, r: f64) -> f64 {
    let d: Vec<f64> = (0..=s.n()).map(|i| s.alpha[i] - s.beta[i]).collect();
    s.grid.interpolate(&d, Parity::Even, r).exp()
}

impl ConeGeometry {
    /// Heun (RK2) integration of dr/dt = -e^{α-β} from r = 0 at t_vertex
    /// back to the first slice.
    pub fn trace(history: &[PolarState], t_vertex: f64, lambda_prime: f64) -> Result<Self> {
        let (t_min, t_max) = match (history.first(), history.last()) {
            (Some(a), Some(b)) => (a.t, b.t),
            _ => return Err(EwmError::ConeOutsideGrid { t_vertex, t_min: f64::NAN, t_max: f64::NAN }),
        };
        let tol = 1e-9 * t_max.abs().max(1.0);
        if t_vertex < t_min - tol || t_vertex > t_max + tol {
            return Err(EwmError::ConeOutsideGrid { t_vertex, t_min, t_max });
        }
        if !(lambda_prime > 0.0 && lambda_prime < 1.0) {
            return Err(EwmError::Domain(format!("lambda' must lie in (0,1), got {lambda_prime}")));
        }
        let last = history.iter().rposition(|s| s.t <= t_vertex + tol).unwrap();
        let mut slices = vec![last];
        let mut r2 = vec![0.0];
        // Partial step from the vertex down to slice `last`.
        let mut r = 0.0;
        let mut t = t_vertex;
        let lapse_t = |tt: f64, rr: f64, k: usize| -> f64 {
            // Linear interpolation in time between slices k and k+1.
            if k + 1 < history.len() && tt > history[k].t {
                let (a, b) = (&history[k], &history[k + 1]);
                let w = (tt - a.t) / (b.t - a.t);
                (1.0 - w) * lapse_at(a, rr) + w * lapse_at(b, rr)
            } else {
                lapse_at(&history[k], rr)
            }
        };
        if t - history[last].t > tol {
            let h = t - history[last].t;
            let k1 = lapse_t(t, r, last);
            let k2 = lapse_at(&history[last], r + h * k1);
            r += 0.5 * h * (k1 + k2);
            t = history[last].t;
            r2[0] = r;
        }
        let _ = t;
        for k in (0..last).rev() {
            let h = history[k + 1].t - history[k].t;
            let k1 = lapse_at(&history[k + 1], r);
            let k2 = lapse_at(&history[k], (r + h * k1).min(history[k].grid.r_max()));
            r += 0.5 * h * (k1 + k2);
            if r > history[k].grid.r_max() {
                return Err(EwmError::ConeOutsideGrid { t_vertex, t_min, t_max });
            }
            slices.push(k);
            r2.push(r);
        }
        slices.reverse();
        r2.reverse();
        Ok(ConeGeometry { t_vertex, lambda_prime, slices, r2 })
    }

    /// E^O(t_k) = 2π ∫₀^{r₂} e r e^β dr on every covered slice.
    pub fn energies(&self, history: &[PolarState]) -> Vec<f64> {
        self.slices
            .iter()
            .zip(&self.r2)
            .map(|(&k, &r2)| cone_energy(&history[k], r2))
            .collect()
    }

    /// Energy inside the interior cone ϱ = λ' r₂.
    pub fn interior_energies(&self, history: &[PolarState]) -> Vec<f64> {
        self.slices
            .iter()
            .zip(&self.r2)
            .map(|(&k, &r2)| cone_energy(&history[k], self.lambda_prime * r2))
            .collect()
    }
}

pub fn cone_energy(s: &PolarState, r2: f64) -> f64 {
    2.0 * PI * radial_integral(s, r2, |i| s.energy_density(i) * s.grid.r[i] * s.beta[i].exp())
}

/// Flux through the cone mantle between two covered positions `a < b`
/// (indices into `cone.slices`), computed two independent ways.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluxReport {
    /// E^O(t_b) - E^O(t_a)
    pub via_energy: f64,
    /// -2π ∫ r₂ e^α (e - m)|_{r₂} dt
    pub via_mantle: f64,
}

pub fn flux_pt(history: &[PolarState], cone: &ConeGeometry, a: usize, b: usize) -> FluxReport {
    let e = |j: usize| cone_energy(&history[cone.slices[j]], cone.r2[j]);
    let via_energy = e(b) - e(a);
    let integrand = |j: usize| {
        let s = &history[cone.slices[j]];
        let r = cone.r2[j];
        let p = PointValues::at(s, r);
        r * p.alpha.exp() * (p.energy_density() - p.momentum_density())
    };
    let via_mantle = -2.0 * PI * time_trapezoid(history, cone, a, b, integrand);
    FluxReport { via_energy, via_mantle }
}

fn time_trapezoid(history: &[PolarState], cone: &ConeGeometry, a: usize, b: usize, f: impl Fn(usize) -> f64) -> f64 {
    let mut acc = 0.0;
    let mut prev = f(a);
    for j in a + 1..=b {
        let cur = f(j);
        let dt = history[cone.slices[j]].t - history[cone.slices[j - 1]].t;
        acc += 0.5 * dt * (prev + cur);
        prev = cur;
    }
    acc
}

/// Terms of the multiplier identity for the vector field r∂ᵣ-type current:
///
/// 2π∫∫ rΠ²e^{α-β} dr dt = S(t_b) - S(t_a) + 2π∫ r₂²e^{α+β}(e - f - m)|_{r₂} dt,
/// S(t) = -2π ∫₀^{r₂} r² Π Φ dr.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultiplierTerms {
    pub bulk: f64,
    pub slice_a: f64,
    pub slice_b: f64,
    pub mantle: f64,
}

impl MultiplierTerms {
    /// |bulk - (S_b - S_a + mantle)| normalized by the largest term.
    pub fn residual(&self) -> f64 {
        let scale = [self.bulk, self.slice_a, self.slice_b, self.mantle]
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        (self.bulk - (self.slice_b - self.slice_a + self.mantle)).abs() / scale
    }
}

pub fn multiplier_r1(history: &[PolarState], cone: &ConeGeometry, a: usize, b: usize) -> MultiplierTerms {
    let inner = |j: usize| {
        let s = &history[cone.slices[j]];
        radial_integral(s, cone.r2[j], |i| s.grid.r[i] * s.pi[i] * s.pi[i] * s.lapse_ratio(i))
    };
    let bulk = 2.0 * PI * time_trapezoid(history, cone, a, b, inner);
    let slice = |j: usize| {
        let s = &history[cone.slices[j]];
        let r = &s.grid.r;
        -2.0 * PI * radial_integral(s, cone.r2[j], |i| r[i] * r[i] * s.pi[i] * s.big_phi[i])
    };
    let mantle_f = |j: usize| {
        let s = &history[cone.slices[j]];
        let r = cone.r2[j];
        let p = PointValues::at(s, r);
        r * r * (p.alpha + p.beta).exp() * p.e_minus_f_minus_m()
    };
    let mantle = 2.0 * PI * time_trapezoid(history, cone, a, b, mantle_f);
    MultiplierTerms { bulk, slice_a: slice(a), slice_b: slice(b), mantle }
}

/// Checks sup|℘(φ)| ≤ √(E_f E_Φ) on a slice. Returns (lhs, rhs).
pub fn wp_bound(s: &PolarState) -> (f64, f64) {
    let rmax = s.grid.r_max();
    let ef = radial_integral(s, rmax, |i| s.g_over_r(i).powi(2) * s.grid.r[i] * s.beta[i].exp());
    let ephi = radial_integral(s, rmax, |i| {
        (-2.0 * s.beta[i]).exp() * s.big_phi[i] * s.big_phi[i] * s.grid.r[i] * s.beta[i].exp()
    });
    let lhs = s.phi.iter().map(|p| s.target.wp(*p).abs()).fold(0.0, f64::max);
    (lhs, (ef * ephi).sqrt())
}
