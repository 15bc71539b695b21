//! Equivariant Einstein-wave map evolution in 2+1 dimensions.

pub mod cli;
pub mod config;
pub mod convergence;
pub mod diagnostics;
pub mod error;
pub mod evolve_null;
pub mod evolve_polar;
pub mod flatwave;
pub mod initdata;
pub mod io;
pub mod quadrature;
pub mod run;
pub mod target;
