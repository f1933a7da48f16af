//! Clock-driven control: modulation weights of the live/dead window pair, the
//! engine channel realized by a finite-width pulse and its fidelity against
//! the target evolution and against a sharp-clock reference.

use std::fmt;
use std::str::FromStr;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::clock::{weighted_moments, ClockAmplitudes};
use crate::engine::{
    max_abs, target_propagator, CMatrix, GeneratorSchedule, HermitianOp, SchedulePattern, TargetEvolution,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::propagator::{evolve, local_hamiltonian, JointState, Model, Observer, Snapshot, StepConfig, WindowMap};
use crate::timeops::{lambda_stats, time_stats, DiagnosticsRecord};

/// Largest engine dimension accepted for channel reconstruction.
pub const MAX_CHANNEL_DIM: usize = 4;

/// Substeps used when the target generator is sampled rather than tabulated.
const TARGET_SUBSTEPS: usize = 512;

/// How window probability is turned into a generator weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulationMode {
    /// Weight `P / W`.
    #[default]
    Intensity,
    /// Weight `sqrt(P) / W`.
    PaperSqrt,
}

impl ModulationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ModulationMode::Intensity => "intensity",
            ModulationMode::PaperSqrt => "paper_sqrt",
        }
    }

    fn weight(self, mass: f64, width: f64) -> f64 {
        match self {
            ModulationMode::Intensity => mass / width,
            ModulationMode::PaperSqrt => mass.max(0.0).sqrt() / width,
        }
    }
}

impl fmt::Display for ModulationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModulationMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "intensity" => Ok(ModulationMode::Intensity),
            "paper_sqrt" => Ok(ModulationMode::PaperSqrt),
            other => Err(format!("unknown modulation mode `{other}` (expected intensity or paper_sqrt)")),
        }
    }
}

/// Weights of the live generator and of the identity for one record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Modulation {
    pub live_window: i64,
    pub dead_window: i64,
    pub alpha: f64,
    pub beta: f64,
    /// Weight of a pulse entirely inside one window.
    pub max_weight: f64,
}

/// Live (even) and dead (odd) window nearest to position `x`.
pub fn window_pair(schedule: &GeneratorSchedule, x: f64) -> (i64, i64) {
    let i = schedule.index_of(x);
    let step = if x >= schedule.center(i) { 1 } else { -1 };
    if i.rem_euclid(2) == 0 {
        (i, i + step)
    } else {
        (i + step, i)
    }
}

/// Mass in window `i`, with each snapped boundary point shared equally
/// between its two windows.
pub fn split_window_mass(map: &WindowMap, masses: &[f64], window: i64) -> f64 {
    let idx = map.indices();
    let mut total = 0.0;
    for (j, (&i, &m)) in idx.iter().zip(masses).enumerate() {
        let first_of_own = j == 0 || idx[j - 1] != i;
        if i == window {
            total += if first_of_own && j > 0 { 0.5 * m } else { m };
        } else if i == window + 1 && first_of_own && j > 0 && idx[j - 1] == window {
            total += 0.5 * m;
        }
    }
    total
}

/// Modulation weights from the clock marginal of `state`.
pub fn modulation_factors(
    state: &JointState,
    schedule: &GeneratorSchedule,
    map: &WindowMap,
    mode: ModulationMode,
) -> Result<Modulation> {
    if schedule.pattern() != SchedulePattern::Alternating {
        return Err(Error::InvalidSchedule(
            "modulation factors need an alternating schedule".into(),
        ));
    }
    let masses = state.clock_masses();
    let (mean_x, _) = weighted_moments(&state.grid().positions(), &masses);
    let (live, dead) = window_pair(schedule, mean_x);
    let w = schedule.width();
    Ok(Modulation {
        live_window: live,
        dead_window: dead,
        alpha: mode.weight(split_window_mass(map, &masses, live), w),
        beta: mode.weight(split_window_mass(map, &masses, dead), w),
        max_weight: mode.weight(state.norm(), w),
    })
}

/// `alpha v`; the identity part only contributes a global phase.
pub fn effective_generator(alpha: f64, live: &HermitianOp) -> HermitianOp {
    live.scaled(alpha)
}

/// Fills `alpha`, `beta` and `mode` on alternating schedules.
#[derive(Debug, Clone, Copy)]
pub struct ModulationObserver {
    pub mode: ModulationMode,
}

impl Observer for ModulationObserver {
    fn observe(&mut self, snap: &Snapshot<'_>, record: &mut DiagnosticsRecord) {
        record.mode = Some(self.mode);
        if let Ok(m) = modulation_factors(snap.state, &snap.model.schedule, snap.map, self.mode) {
            record.alpha = m.alpha;
            record.beta = m.beta;
        }
    }
}

/// Engine channel realized by one clock pulse, stored as its Choi matrix
/// `C = sum_ij |i><j| (x) E(|i><j|)`.
#[derive(Debug, Clone)]
pub struct RealizedChannel {
    dim: usize,
    choi: CMatrix,
    final_states: Vec<JointState>,
}

impl RealizedChannel {
    /// Assembles the channel from the evolved images of `|e> (x) clock`.
    pub fn from_final_states(final_states: Vec<JointState>) -> Result<Self> {
        let dim = final_states.len();
        if dim == 0 || final_states.iter().any(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: final_states.first().map_or(0, |s| s.dim()),
            });
        }
        let dx = final_states[0].grid().spacing();
        let choi = CMatrix::from_fn(dim * dim, dim * dim, |r, c| {
            let (i, a) = (r / dim, r % dim);
            let (j, b) = (c / dim, c % dim);
            final_states[i]
                .row(a)
                .iter()
                .zip(final_states[j].row(b))
                .map(|(x, y)| x * y.conj())
                .sum::<Complex64>()
                * dx
        });
        Ok(Self {
            dim,
            choi,
            final_states,
        })
    }

    /// Choi matrix of a unitary channel.
    pub fn unitary_choi(u: &CMatrix) -> CMatrix {
        let d = u.nrows();
        CMatrix::from_fn(d * d, d * d, |r, c| u[(r % d, r / d)] * u[(c % d, c / d)].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn choi(&self) -> &CMatrix {
        &self.choi
    }

    pub fn final_states(&self) -> &[JointState] {
        &self.final_states
    }

    pub fn trace(&self) -> f64 {
        self.choi.trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.choi.clone()).eigenvalues.min()
    }

    /// `max |Tr_out C - 1|`.
    pub fn trace_defect(&self) -> f64 {
        let d = self.dim;
        let partial = CMatrix::from_fn(d, d, |i, j| (0..d).map(|a| self.choi[(i * d + a, j * d + a)]).sum());
        max_abs(&(partial - CMatrix::identity(d, d)))
    }

    /// `Tr(C^2) / d^2`; 1 exactly for unitary channels.
    pub fn purity(&self) -> f64 {
        (&self.choi * &self.choi).trace().re / (self.dim * self.dim) as f64
    }

    /// `E(rho)`.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let d = self.dim;
        let mut out = CMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let w = rho[(i, j)];
                for a in 0..d {
                    for b in 0..d {
                        out[(a, b)] += w * self.choi[(i * d + a, j * d + b)];
                    }
                }
            }
        }
        out
    }

    /// `<Phi_U| C |Phi_U> / d^2` with `|Phi_U> = sum_i |i> (x) U |i>`.
    pub fn entanglement_fidelity(&self, u: &CMatrix) -> f64 {
        let d = self.dim;
        let phi = nalgebra::DVector::from_fn(d * d, |r, _| u[(r % d, r / d)]);
        (phi.dotc(&(&self.choi * &phi))).re / (d * d) as f64
    }

    pub fn average_gate_fidelity(&self, u: &CMatrix) -> f64 {
        average_from_entanglement(self.entanglement_fidelity(u), self.dim)
    }

    /// Clock marginal for a maximally mixed engine input.
    pub fn mean_clock_masses(&self) -> Vec<f64> {
        let n = self.final_states[0].grid().n_points();
        let mut out = vec![0.0; n];
        for s in &self.final_states {
            for (o, m) in out.iter_mut().zip(s.clock_masses()) {
                *o += m / self.dim as f64;
            }
        }
        out
    }
}

pub fn average_from_entanglement(f_e: f64, d: usize) -> f64 {
    let d = d as f64;
    (d * f_e + 1.0) / (d + 1.0)
}

/// Fidelity `<phi| rho |phi>` of a state against a pure reference.
pub fn state_fidelity(rho: &CMatrix, phi: &[Complex64]) -> f64 {
    let v = nalgebra::DVector::from_column_slice(phi);
    v.dotc(&(rho * &v)).re
}

/// Evolves every engine basis input with the same clock pulse.
pub fn realized_channel(
    model: &Model,
    clock: &ClockAmplitudes,
    cfg: &StepConfig,
    duration: f64,
    exec: Execution,
) -> Result<RealizedChannel> {
    let d = model.dim();
    if d > MAX_CHANNEL_DIM {
        return Err(Error::TooLarge {
            dim: d,
            limit: MAX_CHANNEL_DIM,
        });
    }
    let inputs: Vec<usize> = (0..d).collect();
    let finals = exec.map(&inputs, |&e| -> Result<JointState> {
        let start = JointState::basis_product(d, e, clock)?;
        let traj = evolve(start, model, cfg, duration, &mut [])?;
        if traj.truncated {
            let t = traj.records.last().map_or(0.0, |r| r.t);
            return Err(Error::Wraparound { t });
        }
        Ok(traj.final_state)
    });
    RealizedChannel::from_final_states(finals.into_iter().collect::<Result<_>>()?)
}

/// Engine propagator for a point clock moving from `start` at constant `speed`:
/// the ordered product of `exp(-i (H_E + g_i / W) tau_i)` over the windows it crosses.
pub fn sharp_clock_product(model: &Model, start: f64, speed: f64, duration: f64) -> CMatrix {
    let schedule = &model.schedule;
    let d = model.dim();
    let end = start + speed * duration;
    let mut times = vec![0.0, duration];
    if speed != 0.0 {
        let (lo, hi) = if start < end { (start, end) } else { (end, start) };
        let first = schedule.index_of(lo) + 1;
        let last = schedule.index_of(hi);
        for i in first..=last {
            let t = (schedule.left_edge(i) - start) / speed;
            if t > 0.0 && t < duration {
                times.push(t);
            }
        }
    }
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut u = CMatrix::identity(d, d);
    for pair in times.windows(2) {
        let tau = pair[1] - pair[0];
        if tau <= 0.0 {
            continue;
        }
        let x_mid = start + speed * 0.5 * (pair[0] + pair[1]);
        let g = schedule.window(schedule.index_of(x_mid));
        let h = local_hamiltonian(&model.h_e, g, schedule.width());
        // local Hamiltonians are Hermitian by construction
        u = HermitianOp::new(h).expect("Hermitian local Hamiltonian").propagator(tau) * u;
    }
    u
}

/// Target unitary over the protocol interval `[t_start, t_end]`: the engine
/// runs under `H_E` outside `[0, duration]` and under `H_E + V(t) / W` inside.
pub fn target_unitary(
    target: &TargetEvolution,
    h_e: &HermitianOp,
    width: f64,
    t_start: f64,
    t_end: f64,
) -> Result<CMatrix> {
    let scaled = target.affine(h_e, 1.0 / width)?;
    let inner_a = t_start.clamp(0.0, target.duration());
    let inner_b = t_end.clamp(0.0, target.duration());
    let before = (t_end.min(0.0) - t_start).max(0.0);
    let after = (t_end - t_start.max(target.duration())).max(0.0);
    let u_b = target_propagator(&scaled, inner_b, TARGET_SUBSTEPS)?;
    let u_a = target_propagator(&scaled, inner_a, TARGET_SUBSTEPS)?;
    let inner = u_b * u_a.adjoint();
    Ok(h_e.propagator(after) * inner * h_e.propagator(before))
}

/// Realized channel compared with the target and the sharp-clock reference.
#[derive(Debug, Clone)]
pub struct FidelityReport {
    pub dim: usize,
    pub duration: f64,
    pub choi: CMatrix,
    pub target: CMatrix,
    pub ideal: CMatrix,
    pub f_e: f64,
    pub f_avg: f64,
    pub f_e_ideal: f64,
    pub f_avg_ideal: f64,
    /// Average gate fidelity of the sharp-clock product against the target.
    pub f_avg_ideal_target: f64,
    pub choi_trace: f64,
    pub choi_min_eigenvalue: f64,
    pub trace_defect: f64,
    pub choi_purity: f64,
    pub final_mean_t: f64,
    pub final_d: f64,
}

/// Runs the protocol for `duration` starting from `clock`.
///
/// Protocol time is read off the clock as `(x - origin) / speed` with the
/// schedule origin and the mean group velocity `c <Lambda>` of the pulse.
pub fn protocol_fidelity(
    target: &TargetEvolution,
    model: &Model,
    clock: &ClockAmplitudes,
    cfg: &StepConfig,
    duration: f64,
    exec: Execution,
) -> Result<FidelityReport> {
    let c = model.reference_speed;
    let speed = c * lambda_stats(clock, &model.dispersion, c).mean;
    let start = time_stats(clock, 1.0).mean;
    let t_start = (start - model.schedule.origin()) / speed;
    let target_u = target_unitary(target, &model.h_e, model.schedule.width(), t_start, t_start + duration)?;
    let ideal = sharp_clock_product(model, start, speed, duration);
    let channel = realized_channel(model, clock, cfg, duration, exec)?;
    let d = channel.dim();
    let f_e = channel.entanglement_fidelity(&target_u);
    let f_e_ideal = channel.entanglement_fidelity(&ideal);
    let overlap = (ideal.adjoint() * &target_u).trace().norm_sqr() / (d * d) as f64;
    let masses = channel.mean_clock_masses();
    let xs: Vec<f64> = clock.grid().positions().into_iter().map(|x| x / c).collect();
    let (final_mean_t, final_var_t) = weighted_moments(&xs, &masses);
    Ok(FidelityReport {
        dim: d,
        duration,
        choi: channel.choi().clone(),
        target: target_u,
        ideal,
        f_e,
        f_avg: average_from_entanglement(f_e, d),
        f_e_ideal,
        f_avg_ideal: average_from_entanglement(f_e_ideal, d),
        f_avg_ideal_target: average_from_entanglement(overlap, d),
        choi_trace: channel.trace(),
        choi_min_eigenvalue: channel.min_eigenvalue(),
        trace_defect: channel.trace_defect(),
        choi_purity: channel.purity(),
        final_mean_t,
        final_d: final_var_t.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::{make_gaussian_pulse, ClockPulse, DispersionRelation, SpatialGrid};
    use crate::engine::WindowGenerator;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn alternating_model(grid: SpatialGrid, w: f64, origin: f64) -> Model {
        let s = GeneratorSchedule::alternating(w, origin, vec![HermitianOp::pauli_x(), HermitianOp::pauli_z()]).unwrap();
        Model::new(grid, DispersionRelation::linear(1.0), HermitianOp::zero(2), s).unwrap()
    }

    fn state_at(grid: SpatialGrid, x0: f64, omega: f64) -> JointState {
        let p = make_gaussian_pulse(grid, ClockPulse::new(x0, omega, 5.0)).unwrap();
        JointState::basis_product(2, 0, &p).unwrap()
    }

    #[test]
    fn window_pair_rule() {
        let s = GeneratorSchedule::alternating(10.0, 0.0, vec![HermitianOp::pauli_x(); 2]).unwrap();
        assert_eq!(window_pair(&s, 3.0), (0, -1));
        assert_eq!(window_pair(&s, 7.0), (0, 1));
        assert_eq!(window_pair(&s, 12.0), (0, 1));
        assert_eq!(window_pair(&s, 17.0), (2, 1));
        assert_eq!(window_pair(&s, 22.0), (2, 1));
        assert_eq!(window_pair(&s, 28.0), (2, 3));
    }

    #[test]
    fn pulse_inside_live_window_has_full_weight() {
        let grid = SpatialGrid::new(1024, 64.0, -10.0).unwrap();
        let model = alternating_model(grid, 10.0, 0.0);
        let map = WindowMap::new(&grid, &model.schedule).unwrap();
        let m = modulation_factors(&state_at(grid, 5.0, 2.0), &model.schedule, &map, ModulationMode::Intensity).unwrap();
        assert!((m.alpha - 0.1).abs() < 1e-10);
        assert!(m.beta < 1e-12);
        assert!(m.alpha < 1e-8 * 0.1 || m.beta < 1e-8 * m.alpha);
    }

    #[test]
    fn pulse_on_boundary_splits_evenly() {
        let grid = SpatialGrid::new(1024, 64.0, -10.0).unwrap();
        let model = alternating_model(grid, 10.0, 0.0);
        let map = WindowMap::new(&grid, &model.schedule).unwrap();
        for mode in [ModulationMode::Intensity, ModulationMode::PaperSqrt] {
            let m = modulation_factors(&state_at(grid, 10.0, 1.0), &model.schedule, &map, mode).unwrap();
            assert!((m.alpha - m.beta).abs() < 1e-6, "{m:?}");
        }
    }

    #[test]
    fn dead_window_pulse_has_negligible_alpha() {
        let grid = SpatialGrid::new(1024, 64.0, -10.0).unwrap();
        let model = alternating_model(grid, 10.0, 0.0);
        let map = WindowMap::new(&grid, &model.schedule).unwrap();
        let m = modulation_factors(&state_at(grid, 15.0, 2.0), &model.schedule, &map, ModulationMode::Intensity).unwrap();
        assert!(m.alpha < 1e-8 * m.beta);
        assert_eq!(m.dead_window, 1);
    }

    #[test]
    fn effective_generator_scales() {
        assert!(effective_generator(0.0, &HermitianOp::pauli_x()).is_zero());
        let g = effective_generator(0.1, &HermitianOp::pauli_x());
        assert!((g.matrix()[(0, 1)] - c(0.1, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn unitary_choi_has_unit_fidelity() {
        let u = HermitianOp::pauli_y().propagator(0.3);
        let choi = RealizedChannel::unitary_choi(&u);
        let phi = nalgebra::DVector::from_fn(4, |r, _| u[(r % 2, r / 2)]);
        let f = phi.dotc(&(&choi * &phi)).re / 4.0;
        assert!((f - 1.0).abs() < 1e-14);
    }

    #[test]
    fn identity_channel_when_uncoupled() {
        let grid = SpatialGrid::centered(256, 64.0).unwrap();
        let s = GeneratorSchedule::explicit(8.0, -16.0, 2, vec![WindowGenerator::Live(HermitianOp::zero(2)); 4]).unwrap();
        let model = Model::new(grid, DispersionRelation::linear(1.0), HermitianOp::zero(2), s).unwrap();
        let clock = make_gaussian_pulse(grid, ClockPulse::new(-8.0, 1.0, 5.0)).unwrap();
        let ch = realized_channel(&model, &clock, &StepConfig::new(0.05, 20), 4.0, Execution::Sequential).unwrap();
        assert!((ch.average_gate_fidelity(&CMatrix::identity(2, 2)) - 1.0).abs() < 1e-8);
        assert!((ch.trace() - 2.0).abs() < 1e-10);
        assert!(ch.trace_defect() < 1e-10);
        assert!(ch.min_eigenvalue() > -1e-8);
    }

    #[test]
    fn sharp_clock_product_orders_windows() {
        let grid = SpatialGrid::centered(256, 64.0).unwrap();
        let model = alternating_model(grid, 10.0, 0.0);
        // crosses [sigma_x, 1, sigma_z, 1] fully
        let u = sharp_clock_product(&model, -5.0, 1.0, 50.0);
        let phase = Complex64::from_polar(1.0, -2.0);
        let expected = HermitianOp::pauli_z().propagator(1.0) * HermitianOp::pauli_x().propagator(1.0) * phase;
        assert!(max_abs(&(u - expected)) < 1e-12);
    }

    #[test]
    fn target_unitary_pads_with_engine_evolution() {
        let h_e = HermitianOp::pauli_z().scaled(0.2);
        let target = TargetEvolution::constant(HermitianOp::pauli_x(), 10.0);
        let u = target_unitary(&target, &h_e, 10.0, -2.0, 12.0).unwrap();
        let inner = h_e.add(&HermitianOp::pauli_x().scaled(0.1)).unwrap().propagator(10.0);
        let expected = h_e.propagator(2.0) * inner * h_e.propagator(2.0);
        assert!(max_abs(&(u - expected)) < 1e-12);
    }

    #[test]
    fn mode_parses() {
        assert_eq!("paper_sqrt".parse::<ModulationMode>().unwrap(), ModulationMode::PaperSqrt);
        assert!("sqrt".parse::<ModulationMode>().is_err());
        assert_eq!(ModulationMode::Intensity.to_string(), "intensity");
    }
}
