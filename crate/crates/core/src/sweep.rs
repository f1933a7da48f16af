//! Cartesian parameter sweeps over a base config.

use std::io::{self, Write};
use std::path::Path;

use crate::config::{DispersionSpec, PatternSpec, SimConfig, SweepSpec};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::output::fmt_f64;
use crate::protocol::ModulationMode;
use crate::run::run_simulation;

pub const MAX_SWEEP_POINTS: usize = 10_000;

/// Config deltas of one sweep point; `None` keeps the base value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SweepPoint {
    pub width: Option<f64>,
    pub omega: Option<f64>,
    pub mass: Option<f64>,
    pub dt: Option<f64>,
    pub pattern: Option<PatternSpec>,
    pub mode: Option<ModulationMode>,
}

fn axis<T: Copy>(values: &[T]) -> Vec<Option<T>> {
    if values.is_empty() {
        vec![None]
    } else {
        values.iter().copied().map(Some).collect()
    }
}

/// Cartesian product of the axes, last axis varying fastest.
pub fn expand(spec: &SweepSpec) -> Result<Vec<SweepPoint>> {
    let sizes = [
        spec.width.len(),
        spec.omega.len(),
        spec.mass.len(),
        spec.dt.len(),
        spec.pattern.len(),
        spec.mode.len(),
    ];
    let total: usize = sizes.iter().map(|&n| n.max(1)).product();
    if total > MAX_SWEEP_POINTS {
        return Err(Error::Config {
            path: "sweep".into(),
            message: format!("{total} points exceed the limit of {MAX_SWEEP_POINTS}"),
        });
    }
    let mut points = Vec::with_capacity(total);
    for width in axis(&spec.width) {
        for omega in axis(&spec.omega) {
            for mass in axis(&spec.mass) {
                for dt in axis(&spec.dt) {
                    for pattern in axis(&spec.pattern) {
                        for mode in axis(&spec.mode) {
                            points.push(SweepPoint {
                                width,
                                omega,
                                mass,
                                dt,
                                pattern,
                                mode,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(points)
}

impl SweepPoint {
    pub fn apply(&self, base: &SimConfig) -> Result<SimConfig> {
        let mut cfg = base.clone();
        cfg.sweep = None;
        if let Some(w) = self.width {
            cfg.windows.width = w;
        }
        if let Some(o) = self.omega {
            cfg.pulse.omega = o;
        }
        if let Some(m) = self.mass {
            cfg.dispersion = match cfg.dispersion {
                DispersionSpec::Linear { v_g } | DispersionSpec::Massive { v_g, .. } => {
                    DispersionSpec::Massive { v_g, mass: m }
                }
                DispersionSpec::Tabulated { .. } => {
                    return Err(Error::Config {
                        path: "sweep.M".into(),
                        message: "a mass axis needs a linear or massive dispersion".into(),
                    })
                }
            };
        }
        if let Some(dt) = self.dt {
            cfg.stepping.dt = dt;
        }
        if let Some(p) = self.pattern {
            cfg.windows.pattern = p;
        }
        if let Some(m) = self.mode {
            cfg.run.mode = m;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub final_d: f64,
    pub final_d_excess: f64,
    pub f_avg: Option<f64>,
    pub f_avg_ideal: Option<f64>,
    pub min_margin: Option<f64>,
    pub truncated: bool,
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub index: usize,
    pub point: SweepPoint,
    /// Failed points keep their error message; the sweep continues.
    pub result: std::result::Result<SweepResult, String>,
}

fn run_point(base: &SimConfig, dir: &Path, point: &SweepPoint, exec: Execution) -> Result<SweepResult> {
    let cfg = point.apply(base)?;
    let sim = cfg.build(dir)?;
    let out = run_simulation(&sim, cfg.run.fidelity, exec)?;
    let last = out.final_record();
    Ok(SweepResult {
        final_d: last.d,
        final_d_excess: last.d_excess,
        f_avg: out.fidelity.as_ref().map(|f| f.f_avg),
        f_avg_ideal: out.fidelity.as_ref().map(|f| f.f_avg_ideal),
        min_margin: out.min_margin,
        truncated: out.trajectory.truncated,
    })
}

/// Runs every point independently; `dir` resolves relative paths in the config.
pub fn run_sweep(base: &SimConfig, dir: &Path, exec: Execution) -> Result<Vec<SweepRow>> {
    let spec = base.sweep.clone().unwrap_or_default();
    let points = expand(&spec)?;
    let indexed: Vec<(usize, SweepPoint)> = points.into_iter().enumerate().collect();
    Ok(exec.map(&indexed, |(i, p)| SweepRow {
        index: *i,
        point: *p,
        result: run_point(base, dir, p, Execution::Sequential).map_err(|e| e.to_string()),
    }))
}

pub const SWEEP_HEADER: &str =
    "point,W,omega,M,dt,pattern,mode,final_D,final_D_excess,F_avg,F_avg_ideal,min_bound_margin,status";

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn sweep_row(row: &SweepRow) -> String {
    let p = &row.point;
    let pattern = p.pattern.map(|p| match p {
        PatternSpec::Explicit => "explicit",
        PatternSpec::Alternating => "alternating",
    });
    let mut cols = vec![
        row.index.to_string(),
        opt(p.width),
        opt(p.omega),
        opt(p.mass),
        opt(p.dt),
        pattern.unwrap_or("").to_string(),
        p.mode.map(|m| m.as_str()).unwrap_or("").to_string(),
    ];
    match &row.result {
        Ok(r) => {
            cols.extend([
                fmt_f64(r.final_d),
                fmt_f64(r.final_d_excess),
                opt(r.f_avg),
                opt(r.f_avg_ideal),
                opt(r.min_margin),
                if r.truncated { "truncated".into() } else { "ok".into() },
            ]);
        }
        Err(msg) => {
            cols.extend(std::iter::repeat_n(String::new(), 5));
            cols.push(format!("error: {}", msg.replace([',', '\n'], ";")));
        }
    }
    cols.join(",")
}

pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> io::Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", sweep_row(r))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expansion_is_cartesian() {
        let spec = SweepSpec {
            omega: vec![1.0, 2.0],
            dt: vec![0.1, 0.05, 0.01],
            ..Default::default()
        };
        let pts = expand(&spec).unwrap();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0].omega, Some(1.0));
        assert_eq!(pts[1].dt, Some(0.05));
        assert_eq!(pts[3].omega, Some(2.0));
        assert_eq!(expand(&SweepSpec::default()).unwrap().len(), 1);
    }

    #[test]
    fn oversized_sweep_is_rejected() {
        let spec = SweepSpec {
            omega: vec![1.0; 101],
            dt: vec![0.1; 100],
            ..Default::default()
        };
        assert!(expand(&spec).is_err());
    }

    #[test]
    fn failed_rows_keep_column_count() {
        let row = SweepRow {
            index: 3,
            point: SweepPoint::default(),
            result: Err("bad, really\nbad".into()),
        };
        let line = sweep_row(&row);
        assert_eq!(line.split(',').count(), SWEEP_HEADER.split(',').count());
        assert!(line.ends_with("error: bad; really;bad"));
    }
}
