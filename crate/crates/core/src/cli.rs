//! Command-line front end.
//!
//! Exit status 0 on success, 1 for rejected input, 2 for numerical failure.
//! Failures print one line `error: <Kind>: <message>` on stderr.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::{parse_config, RunConfig, Scheme};
use crate::convergence::{convergence_study, with_pool, Observable};
use crate::diagnostics::{record_diagnostics, DiagOptions};
use crate::error::{EwmError, Result};
use crate::flatwave::kernel_sample;
use crate::io::{diag_header, diag_row, write_kernels_csv, Encoding, FieldDump};
use crate::run::{initial_polar, run_null_to_dir, run_polar_to_dir, subcriticality};

#[derive(Parser, Debug)]
#[command(name = "ewm", version, about = "Equivariant Einstein-wave map evolution in 2+1 dimensions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Polar,
    Null,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build the initial slice, write it as a field dump and report subcriticality.
    Init {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evolve and write diag.csv plus dumps.
    Evolve {
        config: PathBuf,
        /// Overrides `scheme` from the config.
        #[arg(long, value_enum)]
        scheme: Option<SchemeArg>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute the diagnostic record of a field dump.
    Diagnose { dump: PathBuf },
    /// Tabulate the kernels K and J.
    Kernels {
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        mu_min: f64,
        #[arg(long, default_value_t = 4.0, allow_hyphen_values = true)]
        mu_max: f64,
        #[arg(long, default_value_t = 101)]
        samples: usize,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Refinement study of one observable.
    Convergence {
        config: PathBuf,
        #[arg(long)]
        observable: String,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        /// Also write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| EwmError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

fn base_of(path: &Path) -> Option<&Path> {
    path.parent().filter(|p| !p.as_os_str().is_empty())
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Init { config, out: dir } => {
            let cfg = load(&config)?;
            let s = initial_polar(&cfg, base_of(&config))?;
            let dir = dir.unwrap_or_else(|| cfg.output.dir.clone());
            fs::create_dir_all(&dir)?;
            let enc = if cfg.output.dump == crate::config::DumpFormat::Binary { Encoding::Binary } else { Encoding::Text };
            let name = if enc == Encoding::Binary { "fields_000000.bin" } else { "fields_000000.csv" };
            FieldDump::from_state(&s, enc).write(&dir.join(name))?;
            let rep = subcriticality(&s);
            let adm = cfg.target.build()?.check_admissibility(s.phi.iter().fold(1.0_f64, |m, v| m.max(v.abs())), 1000);
            let summary = serde_json::json!({
                "E0": rep.e0,
                "kappa_E0_over_2pi": rep.ratio,
                "m_infinity": rep.m_inf,
                "admissible": rep.admissible,
                "grillakis_ok": adm.grillakis_ok,
                "convex_ok": adm.convex_ok,
                "dump": dir.join(name),
            });
            writeln!(out, "{}", json(&summary))?;
        }
        Command::Evolve { config, scheme, out: dir } => {
            let mut cfg = load(&config)?;
            if let Some(s) = scheme {
                cfg.scheme = match s {
                    SchemeArg::Polar => Scheme::Polar,
                    SchemeArg::Null => Scheme::Null,
                };
            }
            let dir = dir.unwrap_or_else(|| cfg.output.dir.clone());
            match cfg.scheme {
                Scheme::Polar => {
                    let sum = run_polar_to_dir(&cfg, base_of(&config), &dir)?;
                    let summary = serde_json::json!({
                        "scheme": "polar",
                        "steps": sum.steps,
                        "t": sum.last.t,
                        "E_total": sum.last.e_total,
                        "m_max": sum.last.m_max,
                        "N_monitor": sum.last.n_monitor,
                        "dir": dir,
                    });
                    writeln!(out, "{}", json(&summary))?;
                }
                Scheme::Null => {
                    let sum = run_null_to_dir(&cfg, base_of(&config), &dir)?;
                    let m = sum.state.mass.iter().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, |a, b| a.max(*b));
                    let summary = serde_json::json!({
                        "scheme": "null",
                        "regular": sum.regions.regular,
                        "trapped": sum.regions.trapped,
                        "marginal": sum.regions.apparent,
                        "min_lambda": sum.regions.min_lambda,
                        "m_max": m,
                        "dir": dir,
                    });
                    writeln!(out, "{}", json(&summary))?;
                }
            }
        }
        Command::Diagnose { dump } => {
            let d = FieldDump::read(&dump)?;
            let s = d.to_state()?;
            let rec = record_diagnostics(&s, None, &DiagOptions::default());
            writeln!(out, "{}", diag_header())?;
            writeln!(out, "{}", diag_row(&rec))?;
        }
        Command::Kernels { mu_min, mu_max, samples, out: path } => {
            let mut errs = Vec::new();
            if !(mu_min.is_finite() && mu_min >= -1.0) {
                errs.push(format!("mu-min must be >= -1, got {mu_min}"));
            }
            if !(mu_max.is_finite() && mu_max >= mu_min) {
                errs.push(format!("mu-max must be finite and >= mu-min, got {mu_max}"));
            }
            if samples == 0 {
                errs.push("samples must be >= 1".into());
            }
            if !errs.is_empty() {
                return Err(EwmError::Validation(errs));
            }
            let mus: Vec<f64> = (0..samples)
                .map(|k| if samples == 1 { mu_min } else { mu_min + (mu_max - mu_min) * k as f64 / (samples - 1) as f64 })
                .collect();
            let rows = with_pool(|| {
                use rayon::prelude::*;
                mus.par_iter().map(|m| kernel_sample(*m)).collect::<Result<Vec<_>>>()
            })??;
            match path {
                Some(p) => write_kernels_csv(std::io::BufWriter::new(fs::File::create(p)?), &rows)?,
                None => write_kernels_csv(&mut *out, &rows)?,
            }
        }
        Command::Convergence { config, observable, levels, out: path } => {
            let cfg = load(&config)?;
            let obs: Observable = observable.parse()?;
            let rep = convergence_study(&cfg, base_of(&config), levels, obs)?;
            let text = json(&rep);
            if let Some(p) = path {
                fs::write(p, &text)?;
            }
            writeln!(out, "{text}")?;
        }
    }
    Ok(())
}

/// Runs one command line (including the program name) and returns the exit status.
pub fn run_command<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let first = e.to_string().lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
            let _ = writeln!(err, "error: UsageError: {first}");
            return 1;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let msg = e.to_string().split_whitespace().collect::<Vec<_>>().join(" ");
            let _ = writeln!(err, "error: {}: {msg}", e.kind());
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}
