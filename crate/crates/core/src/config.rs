//! Run configuration, read from TOML.
//!
//! Every section is optional and falls back to the defaults below. Unknown
//! keys are rejected. Validation collects every problem before failing.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{EwmError, Result};
use crate::evolve_polar::{BoundaryMode, EvolveConfig};
use crate::flatwave::{FlatExact, WPoly};
use crate::initdata::{DataProfile, Motion, RadialGrid};
use crate::target::{TargetGeometry, TargetKind, DEFAULT_SERIES_SWITCH};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Polar,
    Null,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scheme: Scheme,
    pub kappa: f64,
    pub seed: u64,
    pub target: TargetSpec,
    pub grid: GridSpec,
    pub data: DataSpec,
    pub evolve: EvolveSpec,
    pub cone: ConeSpec,
    pub output: OutputSpec,
    pub null: NullSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scheme: Scheme::Polar,
            kappa: 1.0,
            seed: 0,
            target: TargetSpec::default(),
            grid: GridSpec::default(),
            data: DataSpec::default(),
            evolve: EvolveSpec::default(),
            cone: ConeSpec::default(),
            output: OutputSpec::default(),
            null: NullSpec::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetName {
    Flat,
    Hyperbolic,
    Sphere,
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetSpec {
    pub kind: TargetName,
    /// Odd coefficients [c1, c3, c5, ...] for `custom`.
    pub coeffs: Vec<f64>,
    pub series_switch: f64,
}

impl Default for TargetSpec {
    fn default() -> Self {
        TargetSpec { kind: TargetName::Hyperbolic, coeffs: Vec::new(), series_switch: DEFAULT_SERIES_SWITCH }
    }
}

impl TargetSpec {
    pub fn build(&self) -> Result<TargetGeometry> {
        let mut t = match self.kind {
            TargetName::Flat => TargetGeometry::flat(),
            TargetName::Hyperbolic => TargetGeometry::hyperbolic(),
            TargetName::Sphere => TargetGeometry::sphere(),
            TargetName::Custom => TargetGeometry::custom(self.coeffs.clone())?,
        };
        t.series_switch = self.series_switch;
        Ok(t)
    }

    pub fn from_geometry(t: &TargetGeometry) -> Self {
        let (kind, coeffs) = match &t.kind {
            TargetKind::Flat => (TargetName::Flat, Vec::new()),
            TargetKind::Hyperbolic => (TargetName::Hyperbolic, Vec::new()),
            TargetKind::Sphere => (TargetName::Sphere, Vec::new()),
            TargetKind::Custom(c) => (TargetName::Custom, c.clone()),
        };
        TargetSpec { kind, coeffs, series_switch: t.series_switch }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub r_max: f64,
    pub n: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { r_max: 10.0, n: 400 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataKind {
    Vacuum,
    Centered,
    Shell,
    Table,
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolutionName {
    One,
    Tau,
    Quadratic,
    Cubic,
    Focusing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSpec {
    pub kind: DataKind,
    #[serde(rename = "A")]
    pub amp: f64,
    pub sigma: f64,
    pub r0: f64,
    pub time_symmetric: bool,
    /// c in Π = c (Φ - φ/r) when `time_symmetric = false`.
    pub ingoing_fraction: f64,
    /// Two-column text file (r, φ) for `table`.
    pub table: Option<PathBuf>,
    /// Exact flat solution for `exact`.
    pub solution: SolutionName,
    /// Width of the focusing solution.
    pub a: f64,
}

impl Default for DataSpec {
    fn default() -> Self {
        DataSpec {
            kind: DataKind::Centered,
            amp: 0.1,
            sigma: 1.0,
            r0: 2.0,
            time_symmetric: true,
            ingoing_fraction: 1.0,
            table: None,
            solution: SolutionName::Quadratic,
            a: 1.0,
        }
    }
}

impl DataSpec {
    pub fn exact(&self) -> Option<FlatExact> {
        if self.kind != DataKind::Exact {
            return None;
        }
        Some(match self.solution {
            SolutionName::One => FlatExact::Poly(WPoly::One),
            SolutionName::Tau => FlatExact::Poly(WPoly::Tau),
            SolutionName::Quadratic => FlatExact::Poly(WPoly::Quadratic),
            SolutionName::Cubic => FlatExact::Poly(WPoly::Cubic),
            SolutionName::Focusing => FlatExact::Focusing { amp: self.amp, a: self.a },
        })
    }

    /// `base` resolves a relative table path.
    pub fn profile(&self, base: Option<&Path>) -> Result<DataProfile> {
        Ok(match self.kind {
            DataKind::Vacuum => DataProfile::Centered { amp: 0.0, sigma: 1.0 },
            DataKind::Centered => DataProfile::Centered { amp: self.amp, sigma: self.sigma },
            DataKind::Shell => DataProfile::Shell { amp: self.amp, sigma: self.sigma, r0: self.r0 },
            DataKind::Table => {
                let p = self.table.as_ref().ok_or_else(|| EwmError::Validation(vec!["data.table is required".into()]))?;
                let p = match base {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p.clone(),
                };
                let (r, phi) = crate::io::read_table(&p)?;
                DataProfile::Table { r, phi }
            }
            DataKind::Exact => DataProfile::Exact(self.exact().expect("exact kind")),
        })
    }

    pub fn motion(&self) -> Motion {
        if self.time_symmetric {
            Motion::TimeSymmetric
        } else {
            Motion::Ingoing(self.ingoing_fraction)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryName {
    Outgoing,
    Frozen,
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveSpec {
    pub cfl: f64,
    pub t_end: f64,
    pub dissipation_eps: f64,
    pub boundary: BoundaryName,
}

impl Default for EvolveSpec {
    fn default() -> Self {
        let d = EvolveConfig::default();
        EvolveSpec { cfl: d.cfl, t_end: d.t_end, dissipation_eps: d.dissipation_eps, boundary: BoundaryName::Outgoing }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConeSpec {
    /// Vertex time on the axis; defaults to `evolve.t_end`.
    pub vertex_time: Option<f64>,
    pub lambda_prime: f64,
}

impl Default for ConeSpec {
    fn default() -> Self {
        ConeSpec { vertex_time: None, lambda_prime: 0.5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DumpFormat {
    None,
    Text,
    Binary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
    /// Write a diag.csv row every this many steps. The last step is always written.
    pub every: usize,
    pub dump: DumpFormat,
    /// Field dump cadence in steps; 0 dumps only the initial and final slices.
    pub dump_every: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { dir: PathBuf::from("out"), every: 1, dump: DumpFormat::Text, dump_every: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NullSpec {
    /// Characteristic step; defaults to 2 dr.
    pub h: Option<f64>,
    pub u_max: f64,
    pub ub_max: f64,
}

impl Default for NullSpec {
    fn default() -> Self {
        NullSpec { h: None, u_max: 2.0, ub_max: 2.0 }
    }
}

impl RunConfig {
    pub fn grid(&self) -> Result<RadialGrid> {
        RadialGrid::new(self.grid.r_max, self.grid.n)
    }

    pub fn evolve_config(&self) -> EvolveConfig {
        let boundary = match self.evolve.boundary {
            BoundaryName::Outgoing => BoundaryMode::Outgoing,
            BoundaryName::Frozen => BoundaryMode::Frozen,
            BoundaryName::Exact => BoundaryMode::Exact(self.data.exact().expect("validated")),
        };
        EvolveConfig {
            cfl: self.evolve.cfl,
            t_end: self.evolve.t_end,
            dissipation_eps: self.evolve.dissipation_eps,
            boundary,
        }
    }

    pub fn null_h(&self) -> f64 {
        self.null.h.unwrap_or(2.0 * self.grid.r_max / self.grid.n as f64)
    }

    pub fn cone_vertex(&self) -> f64 {
        self.cone.vertex_time.unwrap_or(self.evolve.t_end)
    }

    /// Same run with the grid refined by `factor` (the time step follows
    /// through the fixed CFL number).
    pub fn refined(&self, factor: usize) -> RunConfig {
        let mut c = self.clone();
        c.grid.n *= factor;
        c.null.h = self.null.h.map(|h| h / factor as f64);
        c
    }

    pub fn validate(&self) -> Result<()> {
        let mut e = Vec::new();
        fn finite(e: &mut Vec<String>, name: &str, v: f64) -> bool {
            if !v.is_finite() {
                e.push(format!("{name} must be finite, got {v}"));
                false
            } else {
                true
            }
        }
        let k_ok = finite(&mut e, "kappa", self.kappa);
        let s_ok = finite(&mut e, "target.series_switch", self.target.series_switch);
        let r_ok = finite(&mut e, "grid.r_max", self.grid.r_max);
        finite(&mut e, "data.A", self.data.amp);
        let sig_ok = finite(&mut e, "data.sigma", self.data.sigma);
        finite(&mut e, "data.r0", self.data.r0);
        finite(&mut e, "data.ingoing_fraction", self.data.ingoing_fraction);
        let a_ok = finite(&mut e, "data.a", self.data.a);
        let cfl_ok = finite(&mut e, "evolve.cfl", self.evolve.cfl);
        let t_ok = finite(&mut e, "evolve.t_end", self.evolve.t_end);
        let d_ok = finite(&mut e, "evolve.dissipation_eps", self.evolve.dissipation_eps);
        let l_ok = finite(&mut e, "cone.lambda_prime", self.cone.lambda_prime);
        if let Some(v) = self.cone.vertex_time {
            finite(&mut e, "cone.vertex_time", v);
        }
        if let Some(h) = self.null.h {
            if finite(&mut e, "null.h", h) && h <= 0.0 {
                e.push(format!("null.h must be > 0, got {h}"));
            }
        }
        let u_ok = finite(&mut e, "null.u_max", self.null.u_max);
        let ub_ok = finite(&mut e, "null.ub_max", self.null.ub_max);
        for c in &self.target.coeffs {
            finite(&mut e, "target.coeffs", *c);
        }

        if k_ok && self.kappa < 0.0 {
            e.push(format!("kappa must be >= 0, got {}", self.kappa));
        }
        if s_ok && self.target.series_switch <= 0.0 {
            e.push(format!("target.series_switch must be > 0, got {}", self.target.series_switch));
        }
        if self.target.kind == TargetName::Custom {
            if self.target.coeffs.is_empty() {
                e.push("target.coeffs is required for a custom target".into());
            } else if self.target.coeffs[0] != 1.0 {
                e.push(format!("target.coeffs[0] must be 1, got {}", self.target.coeffs[0]));
            }
        } else if !self.target.coeffs.is_empty() {
            e.push("target.coeffs only applies to a custom target".into());
        }
        if r_ok && self.grid.r_max <= 0.0 {
            e.push(format!("grid.r_max must be > 0, got {}", self.grid.r_max));
        }
        if self.grid.n < 8 {
            e.push(format!("grid.n must be >= 8, got {}", self.grid.n));
        }
        if sig_ok && self.data.sigma <= 0.0 && matches!(self.data.kind, DataKind::Centered | DataKind::Shell) {
            e.push(format!("data.sigma must be > 0, got {}", self.data.sigma));
        }
        if self.data.kind == DataKind::Table && self.data.table.is_none() {
            e.push("data.table is required for kind = \"table\"".into());
        }
        if self.data.kind == DataKind::Exact {
            if self.kappa != 0.0 {
                e.push("data.kind = \"exact\" needs kappa = 0".into());
            }
            if self.target.kind != TargetName::Flat {
                e.push("data.kind = \"exact\" needs the flat target".into());
            }
            if a_ok && self.data.solution == SolutionName::Focusing && self.data.a <= 0.0 {
                e.push(format!("data.a must be > 0, got {}", self.data.a));
            }
        }
        if cfl_ok && !(self.evolve.cfl > 0.0 && self.evolve.cfl <= 1.0) {
            e.push(format!("evolve.cfl must lie in (0, 1], got {}", self.evolve.cfl));
        }
        if t_ok && self.evolve.t_end <= 0.0 {
            e.push(format!("evolve.t_end must be > 0, got {}", self.evolve.t_end));
        }
        if d_ok && self.evolve.dissipation_eps < 0.0 {
            e.push(format!("evolve.dissipation_eps must be >= 0, got {}", self.evolve.dissipation_eps));
        }
        if self.evolve.boundary == BoundaryName::Exact && self.data.kind != DataKind::Exact {
            e.push("evolve.boundary = \"exact\" needs data.kind = \"exact\"".into());
        }
        if l_ok && !(self.cone.lambda_prime > 0.0 && self.cone.lambda_prime < 1.0) {
            e.push(format!("cone.lambda_prime must lie in (0, 1), got {}", self.cone.lambda_prime));
        }
        if let Some(v) = self.cone.vertex_time {
            if v.is_finite() && v <= 0.0 {
                e.push(format!("cone.vertex_time must be > 0, got {v}"));
            }
        }
        if u_ok && ub_ok && !(self.null.u_max >= 0.0 && self.null.ub_max > 0.0 && self.null.u_max <= self.null.ub_max) {
            e.push(format!(
                "null ranges need 0 <= u_max <= ub_max and ub_max > 0, got u_max={} ub_max={}",
                self.null.u_max, self.null.ub_max
            ));
        }
        if e.is_empty() {
            Ok(())
        } else {
            Err(EwmError::Validation(e))
        }
    }
}

/// Parses and validates a TOML document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| EwmError::Parse(e.to_string().trim_end().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn to_toml(cfg: &RunConfig) -> String {
    toml::to_string(cfg).expect("config serializes")
}
