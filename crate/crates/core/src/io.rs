//! File formats: diag.csv, field dumps, null dumps, kernel tables.
//!
//! Numbers are written as `{:.16e}` (17 significant digits), which
//! round-trips every f64 exactly.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::config::TargetSpec;
use crate::diagnostics::DiagRecord;
use crate::error::{EwmError, Result};
use crate::evolve_null::NullState;
use crate::flatwave::KernelSample;
use crate::initdata::{PolarState, RadialGrid, SliceFields};

pub const DIAG_COLUMNS: [&str; 9] =
    ["t", "E_total", "E_ball", "m_max", "one_minus_kE_min", "mom_residual", "N_monitor", "phi_max", "w_axis"];

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn diag_header() -> String {
    DIAG_COLUMNS.join(",")
}

pub fn diag_row(r: &DiagRecord) -> String {
    [r.t, r.e_total, r.e_ball, r.m_max, r.one_minus_ke_min, r.mom_residual, r.n_monitor, r.phi_max, r.w_axis]
        .iter()
        .map(|v| num(*v))
        .collect::<Vec<_>>()
        .join(",")
}

/// Streams diag.csv rows.
pub struct DiagWriter<W: Write> {
    out: W,
}

impl<W: Write> DiagWriter<W> {
    pub fn new(mut out: W) -> Result<Self> {
        writeln!(out, "{}", diag_header())?;
        Ok(DiagWriter { out })
    }

    pub fn push(&mut self, r: &DiagRecord) -> Result<()> {
        writeln!(self.out, "{}", diag_row(r))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

pub fn write_diag_csv(path: &Path, records: &[DiagRecord]) -> Result<()> {
    let mut w = DiagWriter::new(BufWriter::new(fs::File::create(path)?))?;
    for r in records {
        w.push(r)?;
    }
    w.finish()?;
    Ok(())
}

/// Parses diag.csv back into rows of numbers (header checked).
pub fn read_diag_csv(path: &Path) -> Result<Vec<[f64; 9]>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some(diag_header().as_str()) {
        return Err(EwmError::Parse(format!("{}: unexpected diag.csv header", path.display())));
    }
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| EwmError::Parse(format!("{} line {}: {e}", path.display(), k + 2)))?;
        let row: [f64; 9] = vals
            .try_into()
            .map_err(|_| EwmError::Parse(format!("{} line {}: expected 9 columns", path.display(), k + 2)))?;
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    Text,
    Binary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DumpHeader {
    pub t: f64,
    pub n: usize,
    pub dr: f64,
    pub kappa: f64,
    pub target: TargetSpec,
    pub encoding: Encoding,
}

/// One polar slice as stored on disk.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldDump {
    pub header: DumpHeader,
    pub r: Vec<f64>,
    pub phi: Vec<f64>,
    pub big_phi: Vec<f64>,
    pub pi: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

const DUMP_COLUMNS: &str = "r,phi,Phi,Pi,alpha,beta";

impl FieldDump {
    pub fn from_state(s: &PolarState, encoding: Encoding) -> Self {
        FieldDump {
            header: DumpHeader {
                t: s.t,
                n: s.n(),
                dr: s.grid.dr,
                kappa: s.kappa,
                target: TargetSpec::from_geometry(&s.target),
                encoding,
            },
            r: s.grid.r.clone(),
            phi: s.phi.clone(),
            big_phi: s.big_phi.clone(),
            pi: s.pi.clone(),
            alpha: s.alpha.clone(),
            beta: s.beta.clone(),
        }
    }

    fn columns(&self) -> [&Vec<f64>; 6] {
        [&self.r, &self.phi, &self.big_phi, &self.pi, &self.alpha, &self.beta]
    }

    /// Rebuilds the slice. The metric is solved again from the matter fields.
    pub fn to_state(&self) -> Result<PolarState> {
        let h = &self.header;
        let grid = Arc::new(RadialGrid::new(h.dr * h.n as f64, h.n)?);
        let target = Arc::new(h.target.build()?);
        let fields = SliceFields { phi: self.phi.clone(), big_phi: self.big_phi.clone(), pi: self.pi.clone() };
        PolarState::new(h.t, grid, fields, h.kappa, target)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        writeln!(w, "{}", serde_json::to_string(&self.header).map_err(|e| EwmError::Io(e.to_string()))?)?;
        match self.header.encoding {
            Encoding::Text => {
                writeln!(w, "{DUMP_COLUMNS}")?;
                for i in 0..self.r.len() {
                    let row: Vec<String> = self.columns().iter().map(|c| num(c[i])).collect();
                    writeln!(w, "{}", row.join(","))?;
                }
            }
            Encoding::Binary => {
                for c in self.columns() {
                    for v in c.iter() {
                        w.write_all(&v.to_le_bytes())?;
                    }
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut rd = BufReader::new(fs::File::open(path)?);
        let mut first = String::new();
        rd.read_line(&mut first)?;
        let header: DumpHeader = serde_json::from_str(first.trim_end())
            .map_err(|e| EwmError::Parse(format!("{}: bad dump header: {e}", path.display())))?;
        let m = header.n + 1;
        let mut cols: [Vec<f64>; 6] = Default::default();
        match header.encoding {
            Encoding::Text => {
                let mut line = String::new();
                rd.read_line(&mut line)?;
                if line.trim_end() != DUMP_COLUMNS {
                    return Err(EwmError::Parse(format!("{}: unexpected column line", path.display())));
                }
                for (k, line) in rd.lines().enumerate() {
                    let line = line?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    let vals: Vec<&str> = line.split(',').collect();
                    if vals.len() != 6 {
                        return Err(EwmError::Parse(format!("{} line {}: expected 6 columns", path.display(), k + 3)));
                    }
                    for (c, s) in cols.iter_mut().zip(vals) {
                        c.push(s.parse().map_err(|e| EwmError::Parse(format!("{} line {}: {e}", path.display(), k + 3)))?);
                    }
                }
            }
            Encoding::Binary => {
                let mut bytes = Vec::new();
                rd.read_to_end(&mut bytes)?;
                if bytes.len() != 6 * m * 8 {
                    return Err(EwmError::Parse(format!(
                        "{}: expected {} bytes of data, found {}",
                        path.display(),
                        6 * m * 8,
                        bytes.len()
                    )));
                }
                for (ci, c) in cols.iter_mut().enumerate() {
                    for i in 0..m {
                        let o = (ci * m + i) * 8;
                        c.push(f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes")));
                    }
                }
            }
        }
        if cols.iter().any(|c| c.len() != m) {
            return Err(EwmError::Parse(format!("{}: expected {m} rows", path.display())));
        }
        let [r, phi, big_phi, pi, alpha, beta] = cols;
        Ok(FieldDump { header, r, phi, big_phi, pi, alpha, beta })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullHeader {
    pub h: f64,
    pub n_u: usize,
    pub n_ub: usize,
    pub kappa: f64,
    pub target: TargetSpec,
}

/// Writes every computed node as u, ub, r, Omega, phi, lambda, nu, m.
pub fn write_null_dump(path: &Path, st: &NullState) -> Result<()> {
    let g = st.grid;
    let header = NullHeader { h: g.h, n_u: g.n_u, n_ub: g.n_ub, kappa: st.kappa, target: TargetSpec::from_geometry(&st.target) };
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{}", serde_json::to_string(&header).map_err(|e| EwmError::Io(e.to_string()))?)?;
    writeln!(w, "u,ub,r,Omega,phi,lambda,nu,m")?;
    for i in 0..=g.n_u {
        for j in i..=g.n_ub {
            let k = g.idx(i, j);
            let row = [g.u(i), g.ub(j), st.r[k], st.log_omega[k].exp(), st.phi[k], st.lam[k], st.nu[k], st.mass[k]];
            let row: Vec<String> = row.iter().map(|v| num(*v)).collect();
            writeln!(w, "{}", row.join(","))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_kernels_csv<W: Write>(mut out: W, samples: &[KernelSample]) -> Result<()> {
    writeln!(out, "mu,K,J,err_K,err_J")?;
    for s in samples {
        writeln!(out, "{},{},{},{},{}", num(s.mu), num(s.k), num(s.j), num(s.err_k), num(s.err_j))?;
    }
    out.flush()?;
    Ok(())
}

/// Two columns r, φ separated by commas or whitespace; `#` starts a comment.
pub fn read_table(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = fs::read_to_string(path)?;
    let mut r = Vec::new();
    let mut phi = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let vals: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|e| EwmError::Parse(format!("{} line {}: {e}", path.display(), k + 1)))
        };
        if vals.len() != 2 {
            return Err(EwmError::Parse(format!("{} line {}: expected two columns", path.display(), k + 1)));
        }
        r.push(parse(vals[0])?);
        phi.push(parse(vals[1])?);
    }
    Ok((r, phi))
}
