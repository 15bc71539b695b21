//! Characteristic evolution in double-null gauge.
//!
//! Metric -Ω² du dū + r² dθ². On the grid u_i = u_min + i h,
//! ū_j = u_min + j h (i ≤ j, the axis is i = j) the marched unknowns are
//! r, log Ω and φ, updated cell by cell with a diamond stencil:
//!
//! ```text
//! r_uū        = κ Ω² g(φ)² / (4 r)
//! (log Ω)_uū  = -(κ/2) φ_u φ_ū - κ Ω² g(φ)² / (8 r²)
//! ∂_u(r φ_ū) + ∂_ū(r φ_u) = -Ω² f(φ) / (2 r)
//! ```
//!
//! The wave equation is discretized in conservative form. Gauge: Ω = 1 on
//! the initial cone u = u_min, and the axis is the diagonal u = ū.

use std::sync::Arc;

use crate::diagnostics::DiagRecord;
use crate::error::{EwmError, Result};
use crate::initdata::{HermiteTable, Parity, PolarState};
use crate::target::TargetGeometry;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NullGrid {
    pub h: f64,
    pub u_min: f64,
    /// Last u index.
    pub n_u: usize,
    /// Last ū index.
    pub n_ub: usize,
}

impl NullGrid {
    pub fn new(h: f64, u_min: f64, u_max: f64, ub_max: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) || !(u_max >= u_min && ub_max >= u_max) {
            return Err(EwmError::Domain(format!(
                "null grid needs h > 0 and u_min <= u_max <= ubar_max (h={h}, {u_min}, {u_max}, {ub_max})"
            )));
        }
        let n_u = ((u_max - u_min) / h).round() as usize;
        let n_ub = ((ub_max - u_min) / h).round() as usize;
        if n_ub < 4 {
            return Err(EwmError::Domain("null grid needs at least four cells in ubar".into()));
        }
        Ok(NullGrid { h, u_min, n_u, n_ub })
    }

    pub fn u(&self, i: usize) -> f64 {
        self.u_min + i as f64 * self.h
    }

    pub fn ub(&self, j: usize) -> f64 {
        self.u_min + j as f64 * self.h
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.n_ub + 1) + j
    }

    pub fn len(&self) -> usize {
        (self.n_u + 1) * (self.n_ub + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn valid(&self, i: usize, j: usize) -> bool {
        i <= self.n_u && j <= self.n_ub && i <= j
    }
}

/// Scalar field data on the initial outgoing cone.
pub enum ConeData {
    /// (φ, dφ/dū) as functions of ū.
    Ubar(Box<dyn Fn(f64) -> (f64, f64) + Send + Sync>),
    /// (φ, dφ/dr) as functions of the areal radius.
    Areal(Box<dyn Fn(f64) -> (f64, f64) + Send + Sync>),
}

impl ConeData {
    /// Samples an evolved polar run along the outgoing light ray leaving the
    /// axis at the first stored slice. Along the ray dr/dt = e^{α-β} and
    /// dφ/dr = Φ + Π. The samples are joined by a cubic Hermite interpolant.
    pub fn from_polar_history(history: &[PolarState]) -> Result<Self> {
        if history.len() < 4 {
            return Err(EwmError::Domain("need at least four slices to trace a ray".into()));
        }
        let lapse = |s: &PolarState, r: f64| {
            let d: Vec<f64> = (0..=s.n()).map(|i| s.alpha[i] - s.beta[i]).collect();
            s.grid.interpolate(&d, Parity::Even, r).exp()
        };
        let sample = |s: &PolarState, r: f64| {
            let g = &*s.grid;
            let phi = g.interpolate(&s.phi, Parity::Odd, r);
            let slope = g.interpolate(&s.big_phi, Parity::Even, r) + g.interpolate(&s.pi, Parity::Odd, r);
            (phi, slope)
        };
        let mut xs = vec![0.0];
        let (_, d0) = sample(&history[0], 0.0);
        let mut ys = vec![0.0];
        let mut ds = vec![d0];
        let mut r = 0.0;
        for k in 0..history.len() - 1 {
            let (a, b) = (&history[k], &history[k + 1]);
            let h = b.t - a.t;
            let k1 = lapse(a, r);
            let k2 = lapse(b, (r + h * k1).min(b.grid.r_max()));
            r += 0.5 * h * (k1 + k2);
            if r >= b.grid.r_max() {
                break;
            }
            let (p, d) = sample(b, r);
            xs.push(r);
            ys.push(p);
            ds.push(d);
        }
        let table = HermiteTable::new(xs, ys, ds)?;
        let r_end = table.r_max();
        Ok(ConeData::Areal(Box::new(move |r| {
            if r > r_end * (1.0 + 1e-12) {
                (f64::NAN, f64::NAN)
            } else {
                table.eval(r)
            }
        })))
    }
}

/// Marched and derived fields; nodes with i > j hold NaN.
#[derive(Clone, Debug)]
pub struct NullState {
    pub grid: NullGrid,
    pub kappa: f64,
    pub target: Arc<TargetGeometry>,
    pub r: Vec<f64>,
    pub log_omega: Vec<f64>,
    pub phi: Vec<f64>,
    /// ∂_ū r
    pub lam: Vec<f64>,
    /// ∂_u r
    pub nu: Vec<f64>,
    /// 1 + 4 Ω⁻² ν λ
    pub mass: Vec<f64>,
}

impl NullState {
    fn empty(grid: NullGrid, kappa: f64, target: Arc<TargetGeometry>) -> Self {
        let n = grid.len();
        NullState {
            grid,
            kappa,
            target,
            r: vec![f64::NAN; n],
            log_omega: vec![f64::NAN; n],
            phi: vec![f64::NAN; n],
            lam: vec![f64::NAN; n],
            nu: vec![f64::NAN; n],
            mass: vec![f64::NAN; n],
        }
    }

    pub fn omega(&self, i: usize, j: usize) -> f64 {
        self.log_omega[self.grid.idx(i, j)].exp()
    }

    pub fn get(&self, a: &[f64], i: usize, j: usize) -> f64 {
        a[self.grid.idx(i, j)]
    }
}

/// Integrates r and λ = ∂_ū r along u = u_min with Ω = 1:
/// r' = λ, λ' = -κ r (∂_ū φ)², starting from the vertex r = 0, λ = ½.
pub fn init_characteristic_data(
    grid: NullGrid,
    data: &ConeData,
    kappa: f64,
    target: Arc<TargetGeometry>,
) -> Result<NullState> {
    let mut st = NullState::empty(grid, kappa, target);
    let h = grid.h;
    let phi_ub = |ub: f64, r: f64, lam: f64| -> (f64, f64) {
        match data {
            ConeData::Ubar(f) => f(ub),
            ConeData::Areal(f) => {
                let (p, d) = f(r.max(0.0));
                (p, d * lam)
            }
        }
    };
    let rhs = |ub: f64, r: f64, lam: f64| -> (f64, f64) {
        let (_, dp) = phi_ub(ub, r, lam);
        (lam, -kappa * r * dp * dp)
    };
    let (mut r, mut lam) = (0.0, 0.5);
    for j in 0..=grid.n_ub {
        let ub = grid.ub(j);
        let k = grid.idx(0, j);
        let (p, _) = phi_ub(ub, r, lam);
        st.r[k] = r;
        st.phi[k] = if j == 0 { 0.0 } else { p };
        st.log_omega[k] = 0.0;
        if !p.is_finite() || !r.is_finite() {
            return Err(EwmError::NonFiniteField { field: "phi", t: ub, index: j });
        }
        if j == grid.n_ub {
            break;
        }
        let (a1, b1) = rhs(ub, r, lam);
        let (a2, b2) = rhs(ub + 0.5 * h, r + 0.5 * h * a1, lam + 0.5 * h * b1);
        let (a3, b3) = rhs(ub + 0.5 * h, r + 0.5 * h * a2, lam + 0.5 * h * b2);
        let (a4, b4) = rhs(ub + h, r + h * a3, lam + h * b3);
        r += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        lam += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        if !(lam > 0.0) {
            return Err(EwmError::FocusingBreakdown { ubar: ub + h, lambda: lam });
        }
    }
    Ok(st)
}

struct Corner {
    r: f64,
    lo: f64,
    phi: f64,
}

impl NullState {
    fn corner(&self, i: usize, j: usize) -> Corner {
        let k = self.grid.idx(i, j);
        Corner { r: self.r[k], lo: self.log_omega[k], phi: self.phi[k] }
    }

    /// One diamond: S = (i-1, j-1), W = (i, j-1), E = (i-1, j) → N = (i, j).
    fn diamond(&self, s: &Corner, w: &Corner, e: &Corner) -> (f64, f64, f64) {
        let h2 = self.grid.h * self.grid.h;
        let kappa = self.kappa;
        let tg = &*self.target;
        let solve = |rc: f64, loc: f64, phic: f64| -> (f64, f64, f64) {
            let om2 = (2.0 * loc).exp();
            let g = tg.g(phic);
            let rn = w.r + e.r - s.r + h2 * kappa * om2 * g * g / (4.0 * rc);
            let cn = 0.5 * (rn + w.r);
            let ce = 0.5 * (rn + e.r);
            let rhs = -h2 * om2 * tg.f(phic) / (2.0 * rc);
            let phin = (rhs
                + cn * w.phi
                + 0.5 * (e.r + s.r) * (e.phi - s.phi)
                + ce * e.phi
                + 0.5 * (w.r + s.r) * (w.phi - s.phi))
                / (cn + ce);
            let pu = 0.5 * (w.phi - s.phi + phin - e.phi);
            let pv = 0.5 * (e.phi - s.phi + phin - w.phi);
            let lon = w.lo + e.lo - s.lo - (kappa / 2.0) * pu * pv - h2 * kappa * om2 * g * g / (8.0 * rc * rc);
            (rn, lon, phin)
        };
        // Predictor with the centre at the W-E midpoint, then one corrector
        // with the four-corner average.
        let (rn, lon, phin) = solve(
            0.5 * (w.r + e.r),
            0.5 * (w.lo + e.lo),
            0.5 * (w.phi + e.phi),
        );
        solve(
            0.25 * (s.r + w.r + e.r + rn),
            0.25 * (s.lo + w.lo + e.lo + lon),
            0.25 * (s.phi + w.phi + e.phi + phin),
        )
    }
}

/// Marches the whole domain from initial cone data and fills derived fields.
pub fn run_null(grid: NullGrid, data: &ConeData, kappa: f64, target: Arc<TargetGeometry>) -> Result<NullState> {
    let mut st = init_characteristic_data(grid, data, kappa, target)?;
    let h = grid.h;
    for i in 1..=grid.n_u {
        // Axis node: r = φ = 0; log Ω from the diamond mirrored through the axis.
        {
            let e = st.corner(i - 1, i);
            let s = st.corner(i - 1, i - 1);
            let om2 = (2.0 * e.lo).exp();
            let pv = e.phi / h;
            let gr = st.target.g(e.phi) / e.r;
            let src = (kappa / 2.0) * pv * pv - kappa * om2 * gr * gr / 8.0;
            let k = grid.idx(i, i);
            st.r[k] = 0.0;
            st.phi[k] = 0.0;
            st.log_omega[k] = 2.0 * e.lo - s.lo + h * h * src;
        }
        for j in i + 1..=grid.n_ub {
            let s = st.corner(i - 1, j - 1);
            let w = st.corner(i, j - 1);
            let e = st.corner(i - 1, j);
            let (rn, lon, phin) = st.diamond(&s, &w, &e);
            if !(rn.is_finite() && lon.is_finite() && phin.is_finite()) {
                return Err(EwmError::NonFiniteField { field: "null", t: grid.ub(j), index: grid.idx(i, j) });
            }
            let lam = (rn - w.r) / h;
            let nu = (rn - e.r) / h;
            if !(lam > 0.0 && nu < 0.0) {
                return Err(EwmError::RegionBreach { u: grid.u(i), ubar: grid.ub(j), lambda: lam, nu });
            }
            let k = grid.idx(i, j);
            st.r[k] = rn;
            st.log_omega[k] = lon;
            st.phi[k] = phin;
        }
    }
    fill_derived(&mut st);
    Ok(st)
}

/// Second-order differences of r for λ and ν; axis values from regularity
/// (λ = Ω/2, ν = -Ω/2).
pub fn fill_derived(st: &mut NullState) {
    let g = st.grid;
    let h = g.h;
    for i in 0..=g.n_u {
        for j in i..=g.n_ub {
            let k = g.idx(i, j);
            if i == j {
                let om = st.log_omega[k].exp();
                st.lam[k] = 0.5 * om;
                st.nu[k] = -0.5 * om;
            } else {
                st.lam[k] = diff_ub(st, &st.r, i, j, h);
                st.nu[k] = diff_u(st, &st.r, i, j, h);
            }
            let om2 = (2.0 * st.log_omega[k]).exp();
            st.mass[k] = 1.0 + 4.0 * st.nu[k] * st.lam[k] / om2;
        }
    }
}

/// ∂_ū of a node array at (i, j), centered where possible.
pub fn diff_ub(st: &NullState, a: &[f64], i: usize, j: usize, h: f64) -> f64 {
    let g = &st.grid;
    let v = |jj: usize| a[g.idx(i, jj)];
    if j > i && j < g.n_ub {
        (v(j + 1) - v(j - 1)) / (2.0 * h)
    } else if j == g.n_ub && j >= i + 2 {
        (3.0 * v(j) - 4.0 * v(j - 1) + v(j - 2)) / (2.0 * h)
    } else if j == i && j + 2 <= g.n_ub {
        (-3.0 * v(j) + 4.0 * v(j + 1) - v(j + 2)) / (2.0 * h)
    } else if j > i {
        (v(j) - v(j - 1)) / h
    } else {
        (v(j + 1) - v(j)) / h
    }
}

/// ∂_u of a node array at (i, j), centered where possible.
pub fn diff_u(st: &NullState, a: &[f64], i: usize, j: usize, h: f64) -> f64 {
    let g = &st.grid;
    let v = |ii: usize| a[g.idx(ii, j)];
    let top = g.n_u.min(j);
    if i > 0 && i < top {
        (v(i + 1) - v(i - 1)) / (2.0 * h)
    } else if i == 0 && top >= 2 {
        (-3.0 * v(0) + 4.0 * v(1) - v(2)) / (2.0 * h)
    } else if i == top && i >= 2 {
        (3.0 * v(i) - 4.0 * v(i - 1) + v(i - 2)) / (2.0 * h)
    } else if i < top {
        (v(i + 1) - v(i)) / h
    } else {
        (v(i) - v(i - 1)) / h
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    /// λ > 0 and ν < 0
    Regular,
    /// λ < 0, or λ > 0 with ν ≥ 0
    Trapped,
    /// |λ| ≤ tol
    Apparent,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegionMap {
    pub labels: Vec<Option<Region>>,
    pub regular: usize,
    pub trapped: usize,
    pub apparent: usize,
    pub min_lambda: f64,
}

pub const DEFAULT_TOL_A: f64 = 5e-9;

pub fn classify_regions(st: &NullState, tol_a: f64) -> RegionMap {
    let g = st.grid;
    let mut labels = vec![None; g.len()];
    let (mut reg, mut tr, mut ap) = (0, 0, 0);
    let mut min_lambda = f64::INFINITY;
    for i in 0..=g.n_u {
        for j in i..=g.n_ub {
            let k = g.idx(i, j);
            let (l, n) = (st.lam[k], st.nu[k]);
            min_lambda = min_lambda.min(l);
            let lab = if l.abs() <= tol_a {
                ap += 1;
                Region::Apparent
            } else if l > 0.0 && n < 0.0 {
                reg += 1;
                Region::Regular
            } else {
                tr += 1;
                Region::Trapped
            };
            labels[k] = Some(lab);
        }
    }
    RegionMap { labels, regular: reg, trapped: tr, apparent: ap, min_lambda }
}

/// L² norms of the two Raychaudhuri constraints
/// ∂_u(Ω⁻²ν) + κ r Ω⁻² φ_u² and ∂_ū(Ω⁻²λ) + κ r Ω⁻² φ_ū²
/// over interior nodes at least two cells from every edge.
pub fn null_constraint_residuals(st: &NullState) -> (f64, f64) {
    let g = st.grid;
    let h = g.h;
    let n = g.len();
    let mut xu = vec![f64::NAN; n];
    let mut xv = vec![f64::NAN; n];
    for i in 0..=g.n_u {
        for j in i..=g.n_ub {
            let k = g.idx(i, j);
            let om2 = (2.0 * st.log_omega[k]).exp();
            xu[k] = st.nu[k] / om2;
            xv[k] = st.lam[k] / om2;
        }
    }
    let (mut su, mut sv) = (0.0, 0.0);
    if g.n_u < 4 {
        return (0.0, 0.0);
    }
    for i in 2..=g.n_u - 2 {
        for j in i + 3..g.n_ub.saturating_sub(1) {
            let k = g.idx(i, j);
            let om2 = (2.0 * st.log_omega[k]).exp();
            let r = st.r[k];
            let pu = diff_u(st, &st.phi, i, j, h);
            let pv = diff_ub(st, &st.phi, i, j, h);
            let ru = diff_u(st, &xu, i, j, h) + st.kappa * r * pu * pu / om2;
            let rv = diff_ub(st, &xv, i, j, h) + st.kappa * r * pv * pv / om2;
            su += ru * ru;
            sv += rv * rv;
        }
    }
    ((su * h * h).sqrt(), (sv * h * h).sqrt())
}

/// Max over interior nodes of |∂_ū m - 4κΩ⁻² r (λ Ω² g²/(4r²) - ν φ_ū²)|.
pub fn mass_evolution_residual(st: &NullState) -> f64 {
    let g = st.grid;
    let h = g.h;
    let mut worst: f64 = 0.0;
    if g.n_u < 4 {
        return 0.0;
    }
    for i in 1..=g.n_u - 1 {
        for j in i + 2..g.n_ub {
            let k = g.idx(i, j);
            let om2 = (2.0 * st.log_omega[k]).exp();
            let r = st.r[k];
            let gr = st.target.g(st.phi[k]) / r;
            let pv = diff_ub(st, &st.phi, i, j, h);
            let rhs = 4.0 * st.kappa / om2 * r * (st.lam[k] * om2 * gr * gr / 4.0 - st.nu[k] * pv * pv);
            worst = worst.max((diff_ub(st, &st.mass, i, j, h) - rhs).abs());
        }
    }
    worst
}

/// Proper time along the axis and w = φ/r next to it.
///
/// Entry i is at the axis node (i, i); w is averaged over the two
/// neighbouring off-axis nodes, which sit symmetrically in time.
pub fn axis_series(st: &NullState) -> Vec<(f64, f64)> {
    let g = st.grid;
    let h = g.h;
    let mut out = Vec::new();
    let mut tau = 0.0;
    let top = g.n_u.min(g.n_ub - 1);
    for i in 0..=top {
        if i > 0 {
            tau += 0.5 * h * (st.omega(i - 1, i - 1) + st.omega(i, i));
        }
        if i == 0 {
            continue;
        }
        let wa = st.get(&st.phi, i, i + 1) / st.get(&st.r, i, i + 1);
        let wb = st.get(&st.phi, i - 1, i) / st.get(&st.r, i - 1, i);
        out.push((tau, 0.5 * (wa + wb)));
    }
    out
}

/// One record per ū column. Energy-type fields without a null analogue are NaN.
pub fn null_diag_records(st: &NullState) -> Vec<DiagRecord> {
    let g = st.grid;
    (0..=g.n_ub)
        .map(|j| {
            let top = g.n_u.min(j);
            let mut m_max = f64::NEG_INFINITY;
            let mut phi_max: f64 = 0.0;
            let mut mon: f64 = 0.0;
            for i in 0..=top {
                let k = g.idx(i, j);
                m_max = m_max.max(st.mass[k]);
                phi_max = phi_max.max(st.phi[k].abs());
                mon = mon.max(st.log_omega[k].abs().exp()).max(st.phi[k].abs());
                if st.r[k] > 0.0 {
                    mon = mon.max((st.phi[k] / st.r[k]).abs());
                }
            }
            let w_axis = if j >= 1 && j <= g.n_u + 1 {
                let i = j - 1;
                st.get(&st.phi, i, j) / st.get(&st.r, i, j)
            } else {
                f64::NAN
            };
            DiagRecord {
                t: g.ub(j),
                e_total: f64::NAN,
                e_ball: f64::NAN,
                m_max,
                one_minus_ke_min: f64::NAN,
                mom_residual: f64::NAN,
                n_monitor: mon,
                phi_max,
                w_axis,
                grillakis_margin: st.target.grillakis_margin(phi_max),
            }
        })
        .collect()
}
