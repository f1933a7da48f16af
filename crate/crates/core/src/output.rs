//! Trajectory CSV, binary state dumps and text reports.

use std::io::{self, Read, Write};

use num_complex::Complex64;

use crate::clock::SpatialGrid;
use crate::engine::CMatrix;
use crate::error::{Error, Result};
use crate::propagator::JointState;
use crate::protocol::FidelityReport;
use crate::timeops::DiagnosticsRecord;

pub const CSV_HEADER: &str =
    "t,mean_T,var_T,D,D_excess,mean_Lambda,var_Lambda,mean_HC,var_HC,bound,norm,energy,purity_E,alpha,beta,mode,flags";

/// 17 significant digits, enough to round-trip an `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_row(r: &DiagnosticsRecord) -> String {
    let nums = [
        r.t,
        r.mean_t,
        r.var_t,
        r.d,
        r.d_excess,
        r.mean_lambda,
        r.var_lambda,
        r.mean_hc,
        r.var_hc,
        r.bound,
        r.norm,
        r.energy,
        r.purity_e,
        r.alpha,
        r.beta,
    ];
    let mut row: Vec<String> = nums.iter().map(|&x| fmt_f64(x)).collect();
    row.push(r.mode.map_or("none", |m| m.as_str()).to_string());
    row.push(r.flags.to_string());
    row.join(",")
}

pub fn write_trajectory_csv<W: Write>(mut w: W, records: &[DiagnosticsRecord]) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(w, "{}", csv_row(r))?;
    }
    Ok(())
}

pub const DUMP_MAGIC: &[u8; 4] = b"QCLK";
pub const DUMP_VERSION: u32 = 1;
pub const DUMP_HEADER_LEN: usize = 64;

/// 64-byte header (magic, version, d_E, N, spacing, origin, zero padding)
/// followed by little-endian `(re, im)` pairs in engine-major order.
pub fn write_state_dump<W: Write>(mut w: W, state: &JointState) -> io::Result<()> {
    let grid = state.grid();
    let mut header = [0u8; DUMP_HEADER_LEN];
    header[0..4].copy_from_slice(DUMP_MAGIC);
    header[4..8].copy_from_slice(&DUMP_VERSION.to_le_bytes());
    header[8..12].copy_from_slice(&(state.dim() as u32).to_le_bytes());
    header[12..16].copy_from_slice(&(grid.n_points() as u32).to_le_bytes());
    header[16..24].copy_from_slice(&grid.spacing().to_le_bytes());
    header[24..32].copy_from_slice(&grid.origin().to_le_bytes());
    w.write_all(&header)?;
    let mut body = Vec::with_capacity(state.amplitudes().len() * 16);
    for a in state.amplitudes() {
        body.extend_from_slice(&a.re.to_le_bytes());
        body.extend_from_slice(&a.im.to_le_bytes());
    }
    w.write_all(&body)
}

pub fn read_state_dump<R: Read>(mut r: R) -> Result<JointState> {
    let mut header = [0u8; DUMP_HEADER_LEN];
    r.read_exact(&mut header).map_err(|e| Error::Dump(format!("short header: {e}")))?;
    if &header[0..4] != DUMP_MAGIC {
        return Err(Error::Dump("bad magic".into()));
    }
    let u32_at = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap());
    let f64_at = |i: usize| f64::from_le_bytes(header[i..i + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != DUMP_VERSION {
        return Err(Error::Dump(format!("unsupported version {version}")));
    }
    let (dim, n) = (u32_at(8) as usize, u32_at(12) as usize);
    let (spacing, origin) = (f64_at(16), f64_at(24));
    let grid = SpatialGrid::new(n, spacing * n as f64, origin).map_err(|e| Error::Dump(e.to_string()))?;
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() != dim * n * 16 {
        return Err(Error::Dump(format!("expected {} data bytes, got {}", dim * n * 16, body.len())));
    }
    let amplitudes = body
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[0..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..16].try_into().unwrap()),
            )
        })
        .collect();
    JointState::from_raw(grid, dim, amplitudes)
}

fn matrix_rows(name: &str, m: &CMatrix) -> String {
    let mut out = String::new();
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|c| format!("{} {}", fmt_f64(m[(r, c)].re), fmt_f64(m[(r, c)].im)))
            .collect();
        out.push_str(&format!("{name}[{r}] = {}\n", row.join(" ")));
    }
    out
}

/// `key = value` lines; matrices as one line per row of `re im` pairs.
pub fn format_fidelity_report(r: &FidelityReport) -> String {
    let mut out = String::new();
    let scalars = [
        ("duration", r.duration),
        ("f_e", r.f_e),
        ("f_avg", r.f_avg),
        ("f_e_ideal", r.f_e_ideal),
        ("f_avg_ideal", r.f_avg_ideal),
        ("f_avg_ideal_vs_target", r.f_avg_ideal_target),
        ("choi_trace", r.choi_trace),
        ("choi_min_eigenvalue", r.choi_min_eigenvalue),
        ("choi_trace_defect", r.trace_defect),
        ("choi_purity", r.choi_purity),
        ("final_mean_T", r.final_mean_t),
        ("final_D", r.final_d),
    ];
    out.push_str(&format!("dim = {}\n", r.dim));
    for (k, v) in scalars {
        out.push_str(&format!("{k} = {}\n", fmt_f64(v)));
    }
    out.push_str(&matrix_rows("target", &r.target));
    out.push_str(&matrix_rows("ideal", &r.ideal));
    out.push_str(&matrix_rows("choi", &r.choi));
    out
}

/// Writes `key = value` pairs.
pub fn write_key_values<W: Write>(mut w: W, pairs: &[(String, String)]) -> io::Result<()> {
    for (k, v) in pairs {
        writeln!(w, "{k} = {v}")?;
    }
    Ok(())
}
