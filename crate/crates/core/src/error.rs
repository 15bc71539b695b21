use thiserror::Error;

/// Every failure the library can report.
///
/// Variants split into validation problems (bad input, exit code 1) and
/// numerical failures (exit code 2), see [`EwmError::is_numerical`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum EwmError {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid configuration: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("profile tail {tail:.3e} at r_max exceeds 1e-12*A")]
    SupportOverflow { tail: f64 },

    #[error("supercritical energy: kappa*E/2pi = {ratio:.6} (limit {limit})")]
    SupercriticalEnergy { ratio: f64, limit: f64 },

    #[error("non-finite {field} at t={t}, index {index}")]
    NonFiniteField { field: &'static str, t: f64, index: usize },

    #[error("time step {dt:.3e} violates CFL bound {bound:.3e}")]
    CflViolation { dt: f64, bound: f64 },

    #[error("time step collapsed at t={t} (dt={dt:.3e})")]
    Stalled { t: f64, dt: f64 },

    #[error("focusing breakdown on the initial cone at ubar={ubar}: lambda={lambda:.3e}")]
    FocusingBreakdown { ubar: f64, lambda: f64 },

    #[error("left the regular region at (u,ubar)=({u},{ubar}): lambda={lambda:.3e}, nu={nu:.3e}")]
    RegionBreach { u: f64, ubar: f64, lambda: f64, nu: f64 },

    #[error("cone vertex t={t_vertex} outside stored slices [{t_min}, {t_max}]")]
    ConeOutsideGrid { t_vertex: f64, t_min: f64, t_max: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl EwmError {
    /// Short machine-readable name used in the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            EwmError::Parse(_) => "ParseError",
            EwmError::Validation(_) => "ValidationError",
            EwmError::Domain(_) => "DomainError",
            EwmError::SupportOverflow { .. } => "SupportOverflow",
            EwmError::SupercriticalEnergy { .. } => "SupercriticalEnergy",
            EwmError::NonFiniteField { .. } => "NonFiniteField",
            EwmError::CflViolation { .. } => "CflViolation",
            EwmError::Stalled { .. } => "Stalled",
            EwmError::FocusingBreakdown { .. } => "FocusingBreakdown",
            EwmError::RegionBreach { .. } => "RegionBreach",
            EwmError::ConeOutsideGrid { .. } => "ConeOutsideGrid",
            EwmError::Quadrature(_) => "QuadratureFailure",
            EwmError::Io(_) => "IoError",
        }
    }

    /// True for failures of a running computation, false for rejected input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            EwmError::SupercriticalEnergy { .. }
                | EwmError::NonFiniteField { .. }
                | EwmError::CflViolation { .. }
                | EwmError::Stalled { .. }
                | EwmError::FocusingBreakdown { .. }
                | EwmError::RegionBreach { .. }
                | EwmError::Quadrature(_)
        )
    }
}

impl From<std::io::Error> for EwmError {
    fn from(e: std::io::Error) -> Self {
        EwmError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, EwmError>;
