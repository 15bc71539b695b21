//! Rotationally symmetric target surfaces, described by the profile `g`.
//!
//! The target metric is `dρ² + g(ρ)² dθ²`. Everything downstream only needs
//! `g`, its first two derivatives, the nonlinearity `f = g g'`, the remainder
//! `ζ(s) = (f(s) - s)/s³` and the potential `℘(φ) = ∫₀^φ g`.

use crate::error::{EwmError, Result};

/// Default crossover between the Taylor branch and the direct branch of `ζ`.
pub const DEFAULT_SERIES_SWITCH: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub enum TargetKind {
    /// g(ρ) = ρ
    Flat,
    /// g(ρ) = sinh ρ
    Hyperbolic,
    /// g(ρ) = sin ρ
    Sphere,
    /// Odd polynomial, coefficients of ρ, ρ³, ρ⁵, ... with the first equal to 1.
    Custom(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TargetGeometry {
    pub kind: TargetKind,
    pub series_switch: f64,
}

/// All target quantities at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TargetEval {
    pub g: f64,
    pub dg: f64,
    pub d2g: f64,
    pub f: f64,
    pub zeta_rem: f64,
    pub wp: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibilityReport {
    pub odd_ok: bool,
    pub normalized_ok: bool,
    pub grillakis_ok: bool,
    /// g' >= 0 at every sample.
    pub convex_ok: bool,
    /// ℘(s_max). Only a hint that ℘ grows without bound.
    pub wp_divergence_hint: f64,
    /// Smallest sample where `s g'(s) + g(s) <= 0`, if any.
    pub first_failure: Option<f64>,
    pub min_margin: f64,
}

// Taylor coefficients of ζ for sinh and sin: 4^k / (2k+1)!, k = 1..5.
const ZETA_SERIES: [f64; 5] = [
    4.0 / 6.0,
    16.0 / 120.0,
    64.0 / 5040.0,
    256.0 / 362880.0,
    1024.0 / 39916800.0,
];

impl TargetGeometry {
    pub fn flat() -> Self {
        Self::new(TargetKind::Flat)
    }

    pub fn hyperbolic() -> Self {
        Self::new(TargetKind::Hyperbolic)
    }

    pub fn sphere() -> Self {
        Self::new(TargetKind::Sphere)
    }

    pub fn new(kind: TargetKind) -> Self {
        TargetGeometry { kind, series_switch: DEFAULT_SERIES_SWITCH }
    }

    /// Custom odd polynomial. `coeffs[0]` multiplies ρ and must be 1.
    pub fn custom(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(EwmError::Domain("custom target needs at least one coefficient".into()));
        }
        if coeffs[0] != 1.0 {
            return Err(EwmError::Domain(format!(
                "custom target must have c1 = 1, got {}",
                coeffs[0]
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(EwmError::Domain("custom target coefficients must be finite".into()));
        }
        Ok(Self::new(TargetKind::Custom(coeffs)))
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            TargetKind::Flat => "flat",
            TargetKind::Hyperbolic => "hyperbolic",
            TargetKind::Sphere => "sphere",
            TargetKind::Custom(_) => "custom",
        }
    }

    pub fn g(&self, s: f64) -> f64 {
        match &self.kind {
            TargetKind::Flat => s,
            TargetKind::Hyperbolic => s.sinh(),
            TargetKind::Sphere => s.sin(),
            TargetKind::Custom(c) => odd_poly(c, s),
        }
    }

    pub fn dg(&self, s: f64) -> f64 {
        match &self.kind {
            TargetKind::Flat => 1.0,
            TargetKind::Hyperbolic => s.cosh(),
            TargetKind::Sphere => s.cos(),
            TargetKind::Custom(c) => {
                let s2 = s * s;
                c.iter().enumerate().rev().fold(0.0, |acc, (j, cj)| acc * s2 + (2 * j + 1) as f64 * cj)
            }
        }
    }

    pub fn d2g(&self, s: f64) -> f64 {
        match &self.kind {
            TargetKind::Flat => 0.0,
            TargetKind::Hyperbolic => s.sinh(),
            TargetKind::Sphere => -s.sin(),
            TargetKind::Custom(c) => {
                let s2 = s * s;
                let even = c
                    .iter()
                    .enumerate()
                    .skip(1)
                    .rev()
                    .fold(0.0, |acc, (j, cj)| acc * s2 + ((2 * j + 1) * (2 * j)) as f64 * cj);
                even * s
            }
        }
    }

    /// f = g g'
    pub fn f(&self, s: f64) -> f64 {
        match &self.kind {
            TargetKind::Flat => s,
            TargetKind::Hyperbolic => 0.5 * (2.0 * s).sinh(),
            TargetKind::Sphere => 0.5 * (2.0 * s).sin(),
            TargetKind::Custom(_) => self.g(s) * self.dg(s),
        }
    }

    /// ζ(s) = (f(s) - s)/s³, with the removable singularity at 0 filled in.
    pub fn zeta_rem(&self, s: f64) -> f64 {
        match &self.kind {
            TargetKind::Flat => 0.0,
            TargetKind::Hyperbolic | TargetKind::Sphere => {
                let sign: f64 = if matches!(self.kind, TargetKind::Sphere) { -1.0 } else { 1.0 };
                if s.abs() < self.series_switch {
                    let s2 = s * s;
                    let mut acc = 0.0;
                    for (k, c) in ZETA_SERIES.iter().enumerate().rev() {
                        acc = acc * s2 + sign.powi(k as i32 + 1) * c;
                    }
                    acc
                } else {
                    (self.f(s) - s) / (s * s * s)
                }
            }
            TargetKind::Custom(c) => {
                // f is an odd polynomial with leading term s; drop it and divide by s³.
                let a = poly_f_coeffs(c);
                let s2 = s * s;
                a.iter().skip(1).rev().fold(0.0, |acc, an| acc * s2 + an)
            }
        }
    }

    /// ℘(φ) = ∫₀^φ g
    pub fn wp(&self, s: f64) -> f64 {
        match &self.kind {
            TargetKind::Flat => 0.5 * s * s,
            TargetKind::Hyperbolic => {
                let h = (0.5 * s).sinh();
                2.0 * h * h
            }
            TargetKind::Sphere => {
                let h = (0.5 * s).sin();
                2.0 * h * h
            }
            TargetKind::Custom(c) => {
                let s2 = s * s;
                c.iter()
                    .enumerate()
                    .rev()
                    .fold(0.0, |acc, (j, cj)| acc * s2 + cj / (2 * j + 2) as f64)
                    * s2
            }
        }
    }

    pub fn eval(&self, s: f64) -> TargetEval {
        TargetEval {
            g: self.g(s),
            dg: self.dg(s),
            d2g: self.d2g(s),
            f: self.f(s),
            zeta_rem: self.zeta_rem(s),
            wp: self.wp(s),
        }
    }

    /// Like [`eval`](Self::eval) but reports overflow of a custom polynomial.
    pub fn try_eval(&self, s: f64) -> Result<TargetEval> {
        let e = self.eval(s);
        let all = [e.g, e.dg, e.d2g, e.f, e.zeta_rem, e.wp];
        if s.is_finite() && all.iter().all(|v| v.is_finite()) {
            Ok(e)
        } else {
            Err(EwmError::Domain(format!("target {} not finite at s={s}", self.name())))
        }
    }

    /// s g'(s) + g(s). Positive margin is the convexity condition the
    /// global results rely on.
    pub fn grillakis_margin(&self, s: f64) -> f64 {
        s * self.dg(s) + self.g(s)
    }

    /// Checks oddness, g'(0) = 1 and the margin on `n` samples of (0, s_max].
    pub fn check_admissibility(&self, s_max: f64, n: usize) -> AdmissibilityReport {
        let n = n.max(1);
        let normalized_ok = (self.dg(0.0) - 1.0).abs() <= 1e-14 && self.g(0.0) == 0.0;
        let mut odd_ok = true;
        let mut convex_ok = true;
        let mut first_failure = None;
        let mut min_margin = f64::INFINITY;
        for k in 0..n {
            let s = s_max * (k + 1) as f64 / n as f64;
            let (gp, gm) = (self.g(s), self.g(-s));
            if (gp + gm).abs() > 1e-12 * gp.abs().max(1.0) {
                odd_ok = false;
            }
            if self.dg(s) < 0.0 {
                convex_ok = false;
            }
            let m = self.grillakis_margin(s);
            min_margin = min_margin.min(m);
            if m <= 0.0 && first_failure.is_none() {
                first_failure = Some(s);
            }
        }
        AdmissibilityReport {
            odd_ok,
            normalized_ok,
            grillakis_ok: first_failure.is_none(),
            convex_ok,
            wp_divergence_hint: self.wp(s_max),
            first_failure,
            min_margin,
        }
    }
}

fn odd_poly(c: &[f64], s: f64) -> f64 {
    let s2 = s * s;
    c.iter().rev().fold(0.0, |acc, cj| acc * s2 + cj) * s
}

/// Coefficients a_n of f = Σ a_n s^(2n+1) for g = Σ c_j s^(2j+1).
fn poly_f_coeffs(c: &[f64]) -> Vec<f64> {
    let mut a = vec![0.0; 2 * c.len() - 1];
    for (j, cj) in c.iter().enumerate() {
        for (k, ck) in c.iter().enumerate() {
            a[j + k] += cj * (2 * k + 1) as f64 * ck;
        }
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinh_series_matches_closed_form_at_origin() {
        let t = TargetGeometry::hyperbolic();
        assert!((t.zeta_rem(0.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(TargetGeometry::sphere().zeta_rem(0.0), -2.0 / 3.0);
    }

    #[test]
    fn sphere_margin_changes_sign_once() {
        let t = TargetGeometry::sphere();
        let rep = t.check_admissibility(3.0, 3000);
        assert!(!rep.grillakis_ok);
        let s = rep.first_failure.unwrap();
        assert!((s - 2.028_757_8).abs() < 2e-3);
        assert!(TargetGeometry::hyperbolic().check_admissibility(10.0, 1000).grillakis_ok);
    }

    #[test]
    fn custom_requires_unit_slope() {
        assert!(TargetGeometry::custom(vec![2.0, 1.0]).is_err());
        assert!(TargetGeometry::custom(vec![]).is_err());
        let t = TargetGeometry::custom(vec![1.0, 0.5]).unwrap();
        assert!((t.zeta_rem(0.0) - 2.0).abs() < 1e-15);
    }
}
