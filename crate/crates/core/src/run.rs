//! Turns a [`RunConfig`] into runs and output files.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::config::{BoundaryName, DumpFormat, RunConfig};
use crate::diagnostics::{DiagOptions, DiagRecord};
use crate::error::Result;
use crate::evolve_null::{classify_regions, run_null, ConeData, NullGrid, NullState, RegionMap, DEFAULT_TOL_A};
use crate::evolve_polar::{evolve_history, evolve_run};
use crate::initdata::{check_subcriticality, initial_state, PolarState, SubcriticalityReport, SUBCRITICAL_MARGIN};
use crate::io::{write_null_dump, DiagWriter, Encoding, FieldDump};

/// Initial slice for `cfg`. `base` resolves relative table paths.
pub fn initial_polar(cfg: &RunConfig, base: Option<&Path>) -> Result<PolarState> {
    let grid = Arc::new(cfg.grid()?);
    let target = Arc::new(cfg.target.build()?);
    initial_state(&cfg.data.profile(base)?, cfg.data.motion(), grid, cfg.kappa, target)
}

pub fn subcriticality(s: &PolarState) -> SubcriticalityReport {
    check_subcriticality(s, SUBCRITICAL_MARGIN)
}

#[derive(Clone, Debug)]
pub struct PolarSummary {
    pub steps: usize,
    pub final_state: PolarState,
    pub last: DiagRecord,
    pub dumps: Vec<PathBuf>,
}

fn encoding(f: DumpFormat) -> Option<Encoding> {
    match f {
        DumpFormat::None => None,
        DumpFormat::Text => Some(Encoding::Text),
        DumpFormat::Binary => Some(Encoding::Binary),
    }
}

fn dump_name(step: usize, enc: Encoding) -> String {
    match enc {
        Encoding::Text => format!("fields_{step:06}.csv"),
        Encoding::Binary => format!("fields_{step:06}.bin"),
    }
}

/// Polar evolution writing diag.csv and field dumps into `dir`.
pub fn run_polar_to_dir(cfg: &RunConfig, base: Option<&Path>, dir: &Path) -> Result<PolarSummary> {
    fs::create_dir_all(dir)?;
    let s0 = initial_polar(cfg, base)?;
    let ecfg = cfg.evolve_config();
    let opts = DiagOptions::default();
    let mut diag = DiagWriter::new(BufWriter::new(fs::File::create(dir.join("diag.csv"))?))?;
    let enc = encoding(cfg.output.dump);
    let every = cfg.output.every.max(1);
    let mut step = 0usize;
    let mut pending: Option<(PolarState, DiagRecord, usize)> = None;
    let mut dumps = Vec::new();
    let mut err = None;
    let fin = evolve_run(s0, &ecfg, &opts, &mut |s, r| {
        if err.is_some() {
            return;
        }
        let res = (|| -> Result<()> {
            if step.is_multiple_of(every) {
                diag.push(r)?;
            }
            if let Some(enc) = enc {
                if step == 0 || (cfg.output.dump_every > 0 && step.is_multiple_of(cfg.output.dump_every)) {
                    let p = dir.join(dump_name(step, enc));
                    FieldDump::from_state(s, enc).write(&p)?;
                    dumps.push(p);
                }
            }
            Ok(())
        })();
        if let Err(e) = res {
            err = Some(e);
        }
        pending = Some((s.clone(), r.clone(), step));
        step += 1;
    });
    if let Some(e) = err {
        return Err(e);
    }
    fin?;
    let (last_state, last, last_step) = pending.expect("initial slice observed");
    if !last_step.is_multiple_of(every) {
        diag.push(&last)?;
    }
    diag.finish()?;
    if let Some(enc) = enc {
        let p = dir.join(dump_name(last_step, enc));
        if !dumps.contains(&p) {
            FieldDump::from_state(&last_state, enc).write(&p)?;
            dumps.push(p);
        }
    }
    Ok(PolarSummary { steps: last_step, final_state: last_state, last, dumps })
}

/// Polar run kept in memory, slice by slice.
pub fn polar_history(cfg: &RunConfig, base: Option<&Path>) -> Result<(Vec<PolarState>, Vec<DiagRecord>)> {
    let s0 = initial_polar(cfg, base)?;
    evolve_history(s0, &cfg.evolve_config(), &DiagOptions::default())
}

/// Data on the initial outgoing cone u = 0.
///
/// Exact flat solutions are sampled directly (t = r = ū/2). Anything else is
/// read off a polar run along the light ray leaving the axis at t = 0.
pub fn null_cone_data(cfg: &RunConfig, base: Option<&Path>) -> Result<ConeData> {
    if let Some(ex) = cfg.data.exact() {
        return Ok(ConeData::Ubar(Box::new(move |ub| {
            let [p, f, q] = ex.fields(0.5 * ub, 0.5 * ub);
            (p, 0.5 * (q + f))
        })));
    }
    let mut c = cfg.clone();
    c.evolve.t_end = cfg.null.ub_max + 1.0;
    c.evolve.boundary = BoundaryName::Outgoing;
    let (hist, _) = polar_history(&c, base)?;
    ConeData::from_polar_history(&hist)
}

pub fn null_grid(cfg: &RunConfig) -> Result<NullGrid> {
    NullGrid::new(cfg.null_h(), 0.0, cfg.null.u_max, cfg.null.ub_max)
}

pub fn run_null_scheme(cfg: &RunConfig, base: Option<&Path>) -> Result<NullState> {
    let data = null_cone_data(cfg, base)?;
    run_null(null_grid(cfg)?, &data, cfg.kappa, Arc::new(cfg.target.build()?))
}

#[derive(Clone, Debug)]
pub struct NullSummary {
    pub state: NullState,
    pub regions: RegionMap,
}

/// Null evolution writing null.csv (every node) and diag.csv (one row per ū).
pub fn run_null_to_dir(cfg: &RunConfig, base: Option<&Path>, dir: &Path) -> Result<NullSummary> {
    fs::create_dir_all(dir)?;
    let st = run_null_scheme(cfg, base)?;
    if cfg.output.dump != DumpFormat::None {
        write_null_dump(&dir.join("null.csv"), &st)?;
    }
    crate::io::write_diag_csv(&dir.join("diag.csv"), &crate::evolve_null::null_diag_records(&st))?;
    let regions = classify_regions(&st, DEFAULT_TOL_A);
    Ok(NullSummary { state: st, regions })
}
