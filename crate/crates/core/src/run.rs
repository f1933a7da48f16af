//! Single-run orchestration: evolve a built simulation with the standard
//! observers and write its outputs.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::config::Simulation;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::output::{fmt_f64, format_fidelity_report, write_key_values, write_state_dump, write_trajectory_csv};
use crate::propagator::{evolve, Trajectory};
use crate::protocol::{protocol_fidelity, FidelityReport, ModulationObserver};
use crate::timeops::{degradation_series, pauli_rate, uncertainty_check, ClockDiagnostics, DegradationFit, Flags};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const STATE_FILE: &str = "final_state.qclk";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const FIDELITY_FILE: &str = "fidelity.txt";

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trajectory: Trajectory,
    pub fit: Option<DegradationFit>,
    pub pauli_rate: Option<f64>,
    /// Smallest uncertainty margin over all records with `var_HC > 0`.
    pub min_margin: Option<f64>,
    pub fidelity: Option<FidelityReport>,
}

impl RunOutcome {
    pub fn final_record(&self) -> &crate::timeops::DiagnosticsRecord {
        self.trajectory.records.last().expect("a run always records t = 0")
    }
}

/// Evolves `sim` with the clock and modulation observers.
pub fn run_simulation(sim: &Simulation, with_fidelity: bool, exec: Execution) -> Result<RunOutcome> {
    let mut diag = ClockDiagnostics::new();
    let mut modulation = ModulationObserver { mode: sim.mode };
    let mut trajectory = evolve(
        sim.initial.clone(),
        &sim.model,
        &sim.step,
        sim.duration,
        &mut [&mut diag, &mut modulation],
    )?;
    if sim.pulse.is_broadband() {
        for r in &mut trajectory.records {
            r.flags.insert(Flags::BROADBAND);
        }
    }
    let fit = degradation_series(&trajectory.records).ok();
    let pauli = pauli_rate(&trajectory.records).ok();
    let min_margin = trajectory
        .records
        .iter()
        .filter_map(|r| uncertainty_check(r).ok())
        .map(|c| c.margin)
        .reduce(f64::min);
    let fidelity = match (&sim.target, with_fidelity) {
        (Some(target), true) => Some(protocol_fidelity(
            target,
            &sim.model,
            &sim.clock,
            &sim.step,
            sim.duration,
            exec,
        )?),
        _ => None,
    };
    Ok(RunOutcome {
        trajectory,
        fit,
        pauli_rate: pauli,
        min_margin,
        fidelity,
    })
}

pub fn summary_pairs(outcome: &RunOutcome) -> Vec<(String, String)> {
    let last = outcome.final_record();
    let mut pairs = vec![
        ("records".to_string(), outcome.trajectory.records.len().to_string()),
        ("truncated".to_string(), outcome.trajectory.truncated.to_string()),
        ("final_t".to_string(), fmt_f64(last.t)),
        ("final_mean_T".to_string(), fmt_f64(last.mean_t)),
        ("final_D".to_string(), fmt_f64(last.d)),
        ("final_D_excess".to_string(), fmt_f64(last.d_excess)),
        ("final_norm".to_string(), fmt_f64(last.norm)),
        ("final_purity_E".to_string(), fmt_f64(last.purity_e)),
    ];
    if let Some(m) = outcome.min_margin {
        pairs.push(("min_bound_margin".into(), fmt_f64(m)));
    }
    if let Some(rate) = outcome.pauli_rate {
        pairs.push(("pauli_rate".into(), fmt_f64(rate)));
    }
    if let Some(fit) = &outcome.fit {
        pairs.push(("fit_a".into(), fmt_f64(fit.a)));
        pairs.push(("fit_b".into(), fmt_f64(fit.b)));
        pairs.push(("fit_q".into(), fmt_f64(fit.q)));
        pairs.push(("fit_sqrt_q".into(), fmt_f64(fit.slope())));
    }
    if let Some(f) = &outcome.fidelity {
        pairs.push(("f_avg".into(), fmt_f64(f.f_avg)));
        pairs.push(("f_avg_ideal".into(), fmt_f64(f.f_avg_ideal)));
    }
    pairs
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Writes trajectory CSV, final-state dump, summary and, when present, the
/// fidelity report. Returns the paths written.
pub fn write_outputs(dir: &Path, outcome: &RunOutcome) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();
    let io_err = |p: &Path, e: std::io::Error| Error::Io(format!("{}: {e}", p.display()));

    let path = dir.join(TRAJECTORY_FILE);
    write_trajectory_csv(create(&path)?, &outcome.trajectory.records).map_err(|e| io_err(&path, e))?;
    written.push(path);

    let path = dir.join(STATE_FILE);
    write_state_dump(create(&path)?, &outcome.trajectory.final_state).map_err(|e| io_err(&path, e))?;
    written.push(path);

    let path = dir.join(SUMMARY_FILE);
    write_key_values(create(&path)?, &summary_pairs(outcome)).map_err(|e| io_err(&path, e))?;
    written.push(path);

    if let Some(f) = &outcome.fidelity {
        let path = dir.join(FIDELITY_FILE);
        fs::write(&path, format_fidelity_report(f)).map_err(|e| io_err(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
