//! Flat radial wave operators: the kernels `K`, `J` of the Duhamel
//! representation, the `(μ, λ)` geometry of the backward cone, exact
//! polynomial solutions of the radial w-operator, and evaluation of the
//! representation formula.
//!
//! Operators:
//! - m = 1 equivariant: `-∂τ² + ∂ϱ² + ϱ⁻¹∂ϱ - ϱ⁻²`, Duhamel kernel `K`
//! - w-operator `-∂τ² + ∂ϱ² + 3ϱ⁻¹∂ϱ` (φ = ϱ w); `J` is the kernel of the
//!   radial (m = 0) operator `-∂τ² + ∂ϱ² + ϱ⁻¹∂ϱ`.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{EwmError, Result};
use crate::quadrature::{integrate, integrate_pieces, QuadConfig};

/// K, J and their μ-derivatives at one μ, with quadrature error estimates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSample {
    pub mu: f64,
    pub k: f64,
    pub j: f64,
    pub dk: f64,
    pub dj: f64,
    pub err_k: f64,
    pub err_j: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MuGeometry {
    pub mu: f64,
    /// Upper end of the λ range at fixed μ inside the backward cone.
    pub lambda_star: f64,
    pub lambda_du_mu: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Piece {
    K,
    J,
    DK,
    DJ,
}

pub fn kernel_quad_config() -> QuadConfig {
    QuadConfig { abs_tol: 1e-13, rel_tol: 1e-13, max_intervals: 4000 }
}

/// Substitution data. With ψ = π - θ the integrand denominators become
/// `q(ψ) = ε + 2 d sin²(ψ/2)`, which nearly vanishes at ψ = 0 when μ ≈ 1.
struct ThetaForm {
    below: bool,
    mu: f64,
    eps: f64,
    d: f64,
    c: f64,
}

impl ThetaForm {
    fn new(mu: f64) -> Self {
        if mu < 1.0 {
            ThetaForm { below: true, mu, eps: 1.0 - mu, d: 0.5 * (1.0 + mu), c: 0.5 * (1.0 - mu) }
        } else {
            ThetaForm { below: false, mu, eps: mu - 1.0, d: 1.0, c: 0.0 }
        }
    }

    /// Integrand in ψ given cos ψ and q.
    fn integrand(&self, piece: Piece, cos_psi: f64, q: f64) -> f64 {
        let x = if self.below { self.c - self.d * cos_psi } else { -cos_psi };
        let rq = q.sqrt();
        match (piece, self.below) {
            (Piece::K, _) => x / rq,
            (Piece::J, _) => 1.0 / rq,
            (Piece::DK, true) => -0.5 * (1.0 + cos_psi) * (2.0 + x) / (2.0 * q * rq),
            (Piece::DJ, true) => 0.25 * (1.0 + cos_psi) / (q * rq),
            (Piece::DK, false) => -0.5 * x / (q * rq),
            (Piece::DJ, false) => -0.5 / (q * rq),
        }
    }

    fn plain(&self, piece: Piece, psi: f64) -> f64 {
        let s = (0.5 * psi).sin();
        let q = if self.below {
            self.eps + 2.0 * self.d * s * s
        } else {
            self.mu - 1.0 + 2.0 * s * s
        };
        self.integrand(piece, psi.cos(), q)
    }

    fn integral(&self, piece: Piece, cfg: &QuadConfig) -> Result<(f64, f64)> {
        if self.eps >= 0.25 || self.d < 1e-3 {
            let r = integrate(|psi| self.plain(piece, psi), 0.0, PI, cfg)?;
            return Ok((r.value, r.abs_err));
        }
        // sin(ψ/2) = b sinh s turns q into ε cosh² s on ψ ∈ [0, π/2].
        let b = (self.eps / (2.0 * self.d)).sqrt();
        let s_max = ((FRAC_PI_2 * 0.5).sin() / b).asinh();
        let near = integrate(
            |s| {
                let sh = b * s.sinh();
                let ch = s.cosh();
                let root = (1.0 - sh * sh).sqrt();
                let dpsi = 2.0 * b * ch / root;
                let cos_psi = 1.0 - 2.0 * sh * sh;
                let q = self.eps * ch * ch;
                self.integrand(piece, cos_psi, q) * dpsi
            },
            0.0,
            s_max,
            cfg,
        )?;
        let far = integrate(|psi| self.plain(piece, psi), FRAC_PI_2, PI, cfg)?;
        Ok((near.value + far.value, near.abs_err + far.abs_err))
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if mu.is_nan() || mu < -1.0 {
        return Err(EwmError::Domain(format!("kernel argument mu={mu} below -1")));
    }
    Ok(())
}

fn piece_value(mu: f64, piece: Piece, cfg: &QuadConfig) -> Result<(f64, f64)> {
    check_mu(mu)?;
    if mu == 1.0 {
        // Logarithmic divergence; derivatives diverge like 1/|μ-1|.
        let v = match piece {
            Piece::K => f64::NEG_INFINITY,
            Piece::J => f64::INFINITY,
            Piece::DK | Piece::DJ => f64::NAN,
        };
        return Ok((v, 0.0));
    }
    if mu.is_infinite() {
        return Ok((0.0, 0.0));
    }
    ThetaForm::new(mu).integral(piece, cfg)
}

/// K(μ) = ∫ x dx / (√(1-x²) √(μ+x)) over x ∈ [max(-μ,-1), 1].
pub fn kernel_k(mu: f64) -> Result<f64> {
    Ok(piece_value(mu, Piece::K, &kernel_quad_config())?.0)
}

/// J(μ) = ∫ dx / (√(1-x²) √(μ+x)) over x ∈ [max(-μ,-1), 1].
pub fn kernel_j(mu: f64) -> Result<f64> {
    Ok(piece_value(mu, Piece::J, &kernel_quad_config())?.0)
}

/// dK/dμ, differentiated under the integral.
pub fn kernel_k_prime(mu: f64) -> Result<f64> {
    Ok(piece_value(mu, Piece::DK, &kernel_quad_config())?.0)
}

/// dJ/dμ, differentiated under the integral.
pub fn kernel_j_prime(mu: f64) -> Result<f64> {
    Ok(piece_value(mu, Piece::DJ, &kernel_quad_config())?.0)
}

pub fn kernel_sample(mu: f64) -> Result<KernelSample> {
    let cfg = kernel_quad_config();
    let (k, err_k) = piece_value(mu, Piece::K, &cfg)?;
    let (j, err_j) = piece_value(mu, Piece::J, &cfg)?;
    let (dk, _) = piece_value(mu, Piece::DK, &cfg)?;
    let (dj, _) = piece_value(mu, Piece::DJ, &cfg)?;
    Ok(KernelSample { mu, k, j, dk, dj, err_k, err_j })
}

/// λ ∂ᵤμ with ∂ᵤ = ½(∂σ - ∂λ), as a function of (μ, λ, ϱ).
///
/// When λ + ϱμ ≥ 0 the difference is rationalized, so points near μ = 1
/// keep full relative accuracy.
pub fn lambda_du_mu(mu: f64, lambda: f64, rho: f64) -> f64 {
    let q = cone_distance(mu, lambda, rho);
    let a = lambda + rho * mu;
    if a >= 0.0 && a + q > 0.0 {
        rho * (mu - 1.0) * (mu + 1.0) / (2.0 * (a + q))
    } else {
        (a - q) / (2.0 * rho)
    }
}

/// √(ϱ² + λ² + 2ϱλμ) = |τ - σ|, written to stay accurate near μ = -1, λ = ϱ.
fn cone_distance(mu: f64, lambda: f64, rho: f64) -> f64 {
    let d = lambda - rho;
    (d * d + 2.0 * rho * lambda * (1.0 + mu)).max(0.0).sqrt()
}

/// μ, λ* and λ∂ᵤμ for the backward cone from (τ, ϱ) at the point (σ, λ).
pub fn mu_geometry(tau: f64, rho: f64, sigma: f64, lambda: f64) -> Result<MuGeometry> {
    if !(rho > 0.0 && lambda > 0.0) || ![tau, sigma].iter().all(|v| v.is_finite()) {
        return Err(EwmError::Domain(format!("mu geometry needs rho, lambda > 0 (rho={rho}, lambda={lambda})")));
    }
    let dt = tau - sigma;
    let mu = (dt * dt - rho * rho - lambda * lambda) / (2.0 * rho * lambda);
    let rad = (1.0 + tau) * (1.0 + tau) + (mu * mu - 1.0) * rho * rho;
    let lambda_star = if rad >= 0.0 { rad.sqrt() - mu * rho } else { f64::NAN };
    Ok(MuGeometry { mu, lambda_star, lambda_du_mu: lambda_du_mu(mu, lambda, rho) })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundReport {
    pub samples_nonneg: usize,
    pub samples_neg: usize,
    /// max |λ∂ᵤμ| / |μ-1| over samples with μ ≥ 0.
    pub max_ratio_nonneg: f64,
    /// Same over samples with -1 ≤ μ < 0.
    pub max_ratio_neg: f64,
}

/// Draws admissible (τ, ϱ, σ, λ) until `samples` points with μ ≥ 0 were
/// seen (points with |μ-1| < 1e-8 are discarded) and reports the ratio
/// |λ∂ᵤμ| / |μ-1|.
pub fn bound_lambda_du_mu(samples: usize, seed: u64) -> BoundReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = BoundReport { samples_nonneg: 0, samples_neg: 0, max_ratio_nonneg: 0.0, max_ratio_neg: 0.0 };
    while rep.samples_nonneg < samples {
        let tau: f64 = -rng.gen_range(1e-3..1.0);
        let rho = rng.gen_range(1e-6..=1.0) * tau.abs();
        let sigma = rng.gen_range(-1.0..tau);
        let lo = (rho - tau + sigma).max(0.0);
        let hi = rho + tau - sigma;
        let lambda = rng.gen_range(lo..hi);
        if lambda <= 0.0 {
            continue;
        }
        let g = match mu_geometry(tau, rho, sigma, lambda) {
            Ok(g) => g,
            Err(_) => continue,
        };
        if (g.mu - 1.0).abs() < 1e-8 || g.mu < -1.0 {
            continue;
        }
        let ratio = g.lambda_du_mu.abs() / (g.mu - 1.0).abs();
        if g.mu >= 0.0 {
            rep.samples_nonneg += 1;
            rep.max_ratio_nonneg = rep.max_ratio_nonneg.max(ratio);
        } else {
            rep.samples_neg += 1;
            rep.max_ratio_neg = rep.max_ratio_neg.max(ratio);
        }
    }
    rep
}

/// Sample points for the |μ-1||J'(μ)| ≤ C J(μ) check on [-1 + 1e-6, 1e3],
/// clustered at both ends and on both sides of μ = 1.
pub fn j_ratio_mus(per_decade: usize) -> Vec<f64> {
    let per = per_decade.max(1) as f64;
    let mut mus = Vec::new();
    let mut push_log = |from: f64, decades: f64, map: &dyn Fn(f64) -> f64| {
        let n = (decades * per).ceil() as usize;
        for k in 0..=n {
            mus.push(map(from + decades * k as f64 / n as f64));
        }
    };
    // -1 + 10^x for x in [-6, 0]
    push_log(-6.0, 6.0, &|x| -1.0 + 10f64.powf(x));
    // 1 - 10^x for x in [-10, -0.31]
    push_log(-10.0, 9.69, &|x| 1.0 - 10f64.powf(x));
    // 1 + 10^x for x in [-10, log10(999)]
    push_log(-10.0, 10.0 + 999f64.log10(), &|x| 1.0 + 10f64.powf(x));
    mus.sort_by(|a, b| a.total_cmp(b));
    mus.dedup();
    mus
}

/// Largest |μ-1||J'(μ)| / J(μ) over `mus`, with the μ where it occurs.
pub fn j_derivative_constant(mus: &[f64]) -> Result<(f64, f64)> {
    let mut best = (0.0, f64::NAN);
    for &mu in mus {
        if mu == 1.0 {
            continue;
        }
        let c = (mu - 1.0).abs() * kernel_j_prime(mu)?.abs() / kernel_j(mu)?;
        if !c.is_finite() {
            return Err(EwmError::Quadrature(format!("non-finite ratio at mu={mu}")));
        }
        if c > best.0 {
            best = (c, mu);
        }
    }
    Ok(best)
}

/// Polynomial solutions of the w-operator `-∂τ² + ∂ϱ² + 3ϱ⁻¹∂ϱ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WPoly {
    One,
    Tau,
    /// 4τ² + ϱ²
    Quadratic,
    /// τ³ + ¾ τ ϱ²
    Cubic,
}

/// w and the derivatives needed to build first-order fields.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WDerivs {
    pub w: f64,
    pub w_t: f64,
    pub w_r: f64,
    pub w_tt: f64,
    pub w_tr: f64,
    pub w_rr: f64,
}

/// Exact solutions of the flat (κ = 0, g = ρ) problem written through w = φ/r.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FlatExact {
    Poly(WPoly),
    /// amp · Re[(r² - (t - i a)²)^(-3/2)], a smooth focusing-defocusing pulse.
    Focusing { amp: f64, a: f64 },
}

impl FlatExact {
    pub fn w_derivs(&self, t: f64, r: f64) -> WDerivs {
        match *self {
            FlatExact::Poly(p) => match p {
                WPoly::One => WDerivs { w: 1.0, w_t: 0.0, w_r: 0.0, w_tt: 0.0, w_tr: 0.0, w_rr: 0.0 },
                WPoly::Tau => WDerivs { w: t, w_t: 1.0, w_r: 0.0, w_tt: 0.0, w_tr: 0.0, w_rr: 0.0 },
                WPoly::Quadratic => WDerivs {
                    w: 4.0 * t * t + r * r,
                    w_t: 8.0 * t,
                    w_r: 2.0 * r,
                    w_tt: 8.0,
                    w_tr: 0.0,
                    w_rr: 2.0,
                },
                WPoly::Cubic => WDerivs {
                    w: t * t * t + 0.75 * t * r * r,
                    w_t: 3.0 * t * t + 0.75 * r * r,
                    w_r: 1.5 * t * r,
                    w_tt: 6.0 * t,
                    w_tr: 1.5 * r,
                    w_rr: 1.5 * t,
                },
            },
            FlatExact::Focusing { amp, a } => {
                let tau = Complex64::new(t, -a);
                let s = r * r - tau * tau;
                let p32 = s.powf(-1.5);
                let p52 = p32 / s;
                let p72 = p52 / s;
                WDerivs {
                    w: amp * p32.re,
                    w_t: amp * (3.0 * tau * p52).re,
                    w_r: amp * (-3.0 * r * p52).re,
                    w_tt: amp * (3.0 * p52 + 15.0 * tau * tau * p72).re,
                    w_tr: amp * (-15.0 * tau * r * p72).re,
                    w_rr: amp * (-3.0 * p52 + 15.0 * r * r * p72).re,
                }
            }
        }
    }

    /// (φ, Φ = φ_r, Π = φ_t) for the flat metric.
    pub fn fields(&self, t: f64, r: f64) -> [f64; 3] {
        let d = self.w_derivs(t, r);
        [r * d.w, d.w + r * d.w_r, r * d.w_t]
    }

    /// Time derivatives of (φ, Φ, Π).
    pub fn fields_dt(&self, t: f64, r: f64) -> [f64; 3] {
        let d = self.w_derivs(t, r);
        [r * d.w_t, d.w_t + r * d.w_tr, r * d.w_tt]
    }
}

/// Evaluates the representation formula
/// φ = φ₀ + C ∫_R √(λ/ϱ) K(μ) h dλ dσ with h = ∂ᵤ(F₁/ϱ) + F₂/ϱ²,
/// after integrating the F₁ term by parts and changing to (μ, λ) in the bulk.
///
/// `C = -1/(π√2)` normalizes the kernel. F₁ must vanish faster than √λ at
/// the axis so that the axis boundary term drops out.
pub fn represent_solution(
    phi0: &dyn Fn(f64, f64) -> f64,
    f1: &dyn Fn(f64, f64) -> f64,
    f2: &dyn Fn(f64, f64) -> f64,
    tau: f64,
    rho: f64,
    cfg: &QuadConfig,
) -> Result<f64> {
    if !(tau > -1.0 && tau < 0.0 && rho > 0.0 && rho <= tau.abs()) {
        return Err(EwmError::Domain(format!(
            "representation needs tau in (-1,0) and rho in (0,|tau|], got ({tau}, {rho})"
        )));
    }
    check_axis_decay(f1, tau)?;
    let norm = -1.0 / (PI * SQRT_2);
    let base = phi0(tau, rho);
    let k_m1 = kernel_k(-1.0)?;

    // Cone boundary u = τ - ϱ, parametrized by ū with ū = u + (ū_lo - u) + s².
    let u = tau - rho;
    let ub_lo = u.max(-2.0 - tau + rho);
    let ub_hi = tau + rho;
    let cone = integrate(
        |s| {
            let ub = ub_lo + s * s;
            let lam = 0.5 * (ub - u);
            if lam <= 0.0 {
                return 0.0;
            }
            2.0 * s * f1(0.5 * (u + ub), lam) / lam.sqrt()
        },
        0.0,
        (ub_hi - ub_lo).sqrt(),
        cfg,
    )?
    .value
        * k_m1
        / (2.0 * rho.sqrt());

    // Initial slice σ = -1; K has a log singularity where μ = 1.
    let mu0 = |lam: f64| ((tau + 1.0).powi(2) - rho * rho - lam * lam) / (2.0 * rho * lam);
    let lam_lo = (rho - tau - 1.0).max(0.0);
    let lam_hi = tau + rho + 1.0;
    let lam_sing = tau + 1.0 - rho;
    let mut pts = vec![lam_lo.sqrt()];
    if lam_sing > lam_lo && lam_sing < lam_hi {
        pts.push(lam_sing.sqrt());
    }
    pts.push(lam_hi.sqrt());
    let mut kerr = None;
    let slice = integrate_pieces(
        |s| {
            let lam = s * s;
            if lam <= 0.0 {
                return 0.0;
            }
            let m = mu0(lam);
            let k = match kernel_k(m) {
                Ok(k) if k.is_finite() => k,
                Ok(_) => return 0.0,
                Err(e) => {
                    kerr = Some(e);
                    return 0.0;
                }
            };
            // dλ = 2 s ds, and √λ/λ = 1/s.
            2.0 * k * f1(-1.0, lam) / rho.sqrt()
        },
        &pts,
        cfg,
    )?
    .value
        * -0.5;
    if let Some(e) = kerr {
        return Err(e);
    }

    let bulk = bulk_integral(f1, f2, tau, rho, cfg)?;
    Ok(base + norm * (cone + slice + bulk))
}

fn check_axis_decay(f1: &dyn Fn(f64, f64) -> f64, tau: f64) -> Result<()> {
    for k in 0..5 {
        let sigma = -1.0 + (tau + 1.0) * k as f64 / 4.0;
        let (a, b) = (f1(sigma, 1e-6).abs(), f1(sigma, 1e-10).abs());
        if b > 0.0 && a > 0.0 {
            let delta = (a / b).log10() / 4.0;
            if delta <= 0.5 {
                return Err(EwmError::Domain(format!(
                    "F1 decays like lambda^{delta:.2} at the axis, need an exponent above 1/2"
                )));
            }
        } else if b > 0.0 {
            return Err(EwmError::Domain("F1 does not vanish at the axis".into()));
        }
    }
    Ok(())
}

fn bulk_integral(
    f1: &dyn Fn(f64, f64) -> f64,
    f2: &dyn Fn(f64, f64) -> f64,
    tau: f64,
    rho: f64,
    cfg: &QuadConfig,
) -> Result<f64> {
    let t1 = tau + 1.0;
    let mut err: Option<EwmError> = None;
    // Inner integral over λ at fixed μ, in the variable s = √λ.
    let mut inner = |mu: f64| -> f64 {
        if err.is_some() || mu <= -1.0 {
            return 0.0;
        }
        let disc = rho * rho * mu * mu - rho * rho + t1 * t1;
        if disc < 0.0 {
            return 0.0;
        }
        let sq = disc.sqrt();
        let lo = (-rho * mu - sq).max(0.0);
        let hi = -rho * mu + sq;
        if hi <= lo {
            return 0.0;
        }
        let (k, dk) = match (kernel_k(mu), kernel_k_prime(mu)) {
            (Ok(k), Ok(dk)) => (k, dk),
            (Err(e), _) | (_, Err(e)) => {
                err = Some(e);
                return 0.0;
            }
        };
        let mut pts = vec![lo.sqrt()];
        if rho > lo && rho < hi {
            pts.push(rho.sqrt());
        }
        pts.push(hi.sqrt());
        let r = integrate_pieces(
            |s| {
                let lam = s * s;
                let q = cone_distance(mu, lam, rho);
                if q == 0.0 || lam == 0.0 {
                    return 0.0;
                }
                let sigma = tau - q;
                let a = f1(sigma, lam);
                let b = f2(sigma, lam);
                let ldu = lambda_du_mu(mu, lam, rho);
                // dλ/√λ = 2 ds
                2.0 * rho.sqrt() / q * (k * (0.25 * a + b) - ldu * dk * a)
            },
            &pts,
            cfg,
        );
        match r {
            Ok(v) => v.value,
            Err(e) => {
                err = Some(e);
                0.0
            }
        }
    };
    let total = if rho <= t1 {
        let a = integrate(&mut inner, -1.0, 1.0, cfg)?.value;
        let b = integrate(
            |y| {
                if y >= 1.0 {
                    return 0.0;
                }
                let mu = 1.0 + y / (1.0 - y);
                inner(mu) / ((1.0 - y) * (1.0 - y))
            },
            0.0,
            1.0,
            cfg,
        )?
        .value;
        a + b
    } else {
        let mu_c = (1.0 - (t1 / rho).powi(2)).sqrt();
        integrate(&mut inner, -1.0, -mu_c, cfg)?.value
    };
    if let Some(e) = err {
        return Err(e);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoint_values() {
        let v = PI / SQRT_2;
        assert!((kernel_k(-1.0).unwrap() - v).abs() < 1e-12);
        assert!((kernel_j(-1.0).unwrap() - v).abs() < 1e-12);
        assert_eq!(kernel_k(1.0).unwrap(), f64::NEG_INFINITY);
        assert!(kernel_k(-1.5).is_err());
    }

    #[test]
    fn geometry_examples() {
        let g = mu_geometry(0.0, 1.0, -1.0, 1.0).unwrap();
        assert!((g.mu + 0.5).abs() < 1e-15);
        // μ = 1 exactly when τ - σ = ϱ + λ.
        let g = mu_geometry(-0.2, 0.1, -0.6, 0.3).unwrap();
        assert!((g.mu - 1.0).abs() < 1e-14);
        assert!(g.lambda_du_mu.abs() < 1e-14);
        assert!((g.lambda_star - (1.0 - 0.2 - 0.1)).abs() < 1e-14);
    }
}
