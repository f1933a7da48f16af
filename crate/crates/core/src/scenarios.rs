//! Fixed reference scenarios measured by the `verify` battery and the
//! acceptance suite. Each function builds its own grid, pulse and model and
//! returns raw measurements; tolerances live with the callers.

use num_complex::Complex64;

use crate::clock::{
    free_step, make_gaussian_pulse, ClockAmplitudes, ClockPulse, DispersionRelation, DispersionTable, SpatialGrid,
};
use crate::engine::{GeneratorSchedule, HermitianOp, SchedulePattern, TargetEvolution};
use crate::error::Result;
use crate::exec::Execution;
use crate::oracle::{build_dense, clock_vector, dense_time_operators, exact_evolve};
use crate::propagator::{
    evolve, reduced_engine_state, JointState, Model, SplitStepIntegrator, StepConfig, Trajectory,
};
use crate::protocol::{protocol_fidelity, realized_channel, state_fidelity};
use crate::timeops::{hc_stats, lambda_stats, polyfit, time_stats, uncertainty_check, ClockDiagnostics, DegradationFit, DiagnosticsRecord};

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Sine-perturbed dispersion `k + a sin(b k)` tabulated on `[-k_max, k_max]`.
pub fn sine_dispersion(a: f64, b: f64, k_max: f64, spacing: f64) -> Result<DispersionRelation> {
    let n = (2.0 * k_max / spacing).round() as usize + 1;
    let table = DispersionTable::from_fn(|k| k + a * (b * k).sin(), -k_max, k_max, n)?;
    Ok(DispersionRelation::Tabulated(table))
}

// ---------------------------------------------------------------- oracle

/// Small coupled system used for integrator-versus-dense comparisons:
/// N = 16 on `[0, 64)`, one live `sigma_z` window over the left half,
/// `H_E = sigma_x / 4`, a wide pulse centered on the window boundary.
pub struct OracleCase {
    pub model: Model,
    pub initial: JointState,
}

pub const ORACLE_DURATION: f64 = 1.0;
pub const ORACLE_DTS: [f64; 4] = [4e-2, 2e-2, 1e-2, 5e-3];

pub fn oracle_case(coupled: bool) -> Result<OracleCase> {
    let grid = SpatialGrid::new(16, 64.0, 0.0)?;
    let schedule = if coupled {
        GeneratorSchedule::alternating(32.0, 0.0, vec![HermitianOp::pauli_z()])?
    } else {
        GeneratorSchedule::decoupled(2, 32.0)
    };
    let model = Model::new(grid, DispersionRelation::linear(1.0), HermitianOp::pauli_x().scaled(0.25), schedule)?;
    let pulse = ClockPulse::new(32.0, 0.125, 0.0);
    let clock = ClockAmplitudes::from_fn(grid, |x| pulse.amplitude(x))?;
    let initial = JointState::product(&[c64(0.6, 0.0), c64(0.0, 0.8)], &clock)?;
    Ok(OracleCase { model, initial })
}

/// Strang state after `duration` (no edge guard: the ring is closed).
pub fn oracle_strang(case: &OracleCase, dt: f64, duration: f64) -> Result<JointState> {
    let cfg = StepConfig::new(dt, 1);
    let steps = crate::propagator::step_count(duration, dt)?;
    let integrator = SplitStepIntegrator::new(&case.model, &cfg)?;
    let mut state = case.initial.clone();
    integrator.run(&mut state, steps);
    Ok(state)
}

pub fn oracle_exact(case: &OracleCase, duration: f64) -> Result<JointState> {
    let m = &case.model;
    let h = build_dense(&m.grid, &m.dispersion, &m.h_e, &m.schedule)?;
    exact_evolve(&h, &case.initial, duration)
}

/// Max amplitude deviation `|psi_split - psi_exact|` over all joint components.
pub fn oracle_deviation(dt: f64) -> Result<f64> {
    let case = oracle_case(true)?;
    let exact = oracle_exact(&case, ORACLE_DURATION)?;
    Ok(oracle_strang(&case, dt, ORACLE_DURATION)?.max_deviation(&exact))
}

#[derive(Debug, Clone)]
pub struct Convergence {
    pub dts: Vec<f64>,
    pub errors: Vec<f64>,
    /// Slope of `log error` against `log dt`.
    pub order: f64,
}

pub fn oracle_convergence(dts: &[f64]) -> Result<Convergence> {
    compare_to_oracle(&oracle_case(true)?, ORACLE_DURATION, dts)
}

/// Split-step error against the dense exact state for each `dt`, with the
/// fitted order; needs at least two step sizes for a meaningful order.
pub fn compare_to_oracle(case: &OracleCase, duration: f64, dts: &[f64]) -> Result<Convergence> {
    let exact = oracle_exact(case, duration)?;
    let errors = dts
        .iter()
        .map(|&dt| Ok(oracle_strang(case, dt, duration)?.max_deviation(&exact)))
        .collect::<Result<Vec<_>>>()?;
    let order = if dts.len() >= 2 {
        let lx: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
        let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
        polyfit(&lx, &ly, 1)[1]
    } else {
        f64::NAN
    };
    Ok(Convergence {
        dts: dts.to_vec(),
        errors,
        order,
    })
}

// ------------------------------------------------------- commutator

#[derive(Debug, Clone)]
pub struct CommutatorSample {
    pub label: String,
    pub residual: f64,
}

pub const COMMUTATOR_STATES: usize = 20;

/// `|<[T, H_C]> - i <Lambda>|` for 20 interior Gaussians on a 64-point grid,
/// cycling through linear, massive and tabulated dispersions. `lambda_scale`
/// multiplies the dispersion derivative used for `Lambda` (1 is untampered).
pub fn commutator_residuals(lambda_scale: f64) -> Result<Vec<CommutatorSample>> {
    let grid = SpatialGrid::centered(64, 40.0)?;
    let disps = [
        ("linear", DispersionRelation::linear(1.0)),
        ("massive", DispersionRelation::massive(1.0, 2.0)?),
        ("tabulated", sine_dispersion(0.3, 0.8, 8.0, 1e-3)?),
    ];
    let ops = disps
        .iter()
        .map(|(_, d)| {
            let mut o = dense_time_operators(&grid, d, d.reference_velocity())?;
            o.lambda *= c64(lambda_scale, 0.0);
            Ok(o)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(COMMUTATOR_STATES);
    for i in 0..COMMUTATOR_STATES {
        let which = i % 3;
        let omega = 0.8 + 0.1 * (i % 5) as f64;
        let k0 = ((i / 3) % 3) as f64 * 0.5;
        let x0 = -3.0 + 1.5 * (i % 5) as f64;
        let pulse = ClockPulse::new(x0, omega, k0).with_chirp(0.05 * (i % 2) as f64);
        let clock = ClockAmplitudes::from_fn(grid, |x| pulse.amplitude(x))?;
        out.push(CommutatorSample {
            label: format!("{} x0={x0} omega={omega:.1} k0={k0}", disps[which].0),
            residual: ops[which].commutator_residual(&clock_vector(&clock)),
        });
    }
    Ok(out)
}

// ------------------------------------------------ free-clock runs

/// Decoupled free-clock setup: N = 4096, `dx = 0.1`, pulse at -150 with
/// `Omega = 1`, `k0 = 10`.
pub const FREE_OMEGA: f64 = 1.0;
pub const FREE_K0: f64 = 10.0;
pub const FREE_STEPS: usize = 600;

pub fn free_grid() -> Result<SpatialGrid> {
    SpatialGrid::centered(4096, 409.6)
}

/// Time after which a massive pulse triples its width: `var_T = 9 var_T(0)`.
pub fn tripling_time(omega: f64, mass: f64) -> f64 {
    32f64.sqrt() * mass / (omega * omega)
}

pub fn free_run(disp: DispersionRelation, duration: f64) -> Result<Trajectory> {
    let grid = free_grid()?;
    let clock = make_gaussian_pulse(grid, ClockPulse::new(-150.0, FREE_OMEGA, FREE_K0))?;
    let model = Model::free_clock(grid, disp);
    let cfg = StepConfig::new(duration / FREE_STEPS as f64, 10);
    let initial = JointState::product(&[c64(1.0, 0.0)], &clock)?;
    let mut diag = ClockDiagnostics::new();
    evolve(initial, &model, &cfg, duration, &mut [&mut diag])
}

#[derive(Debug, Clone)]
pub struct VarianceLaw {
    pub records: Vec<DiagnosticsRecord>,
    /// Max over records of `|var_T - var_T(0) - t^2 var_Lambda| / var_T`.
    pub max_rel_deviation: f64,
    pub var_lambda: f64,
    pub fit: DegradationFit,
    pub truncated: bool,
}

pub const VARIANCE_MASS: f64 = 10.0;

pub fn variance_law() -> Result<VarianceLaw> {
    let disp = DispersionRelation::massive(1.0, VARIANCE_MASS)?;
    let traj = free_run(disp, tripling_time(FREE_OMEGA, VARIANCE_MASS))?;
    let r0 = &traj.records[0];
    let var_lambda = r0.var_lambda;
    let max_rel_deviation = traj
        .records
        .iter()
        .map(|r| (r.var_t - r0.var_t - r.t * r.t * var_lambda).abs() / r.var_t)
        .fold(0.0, f64::max);
    let fit = crate::timeops::degradation_series(&traj.records)?;
    Ok(VarianceLaw {
        records: traj.records,
        max_rel_deviation,
        var_lambda,
        fit,
        truncated: traj.truncated,
    })
}

#[derive(Debug, Clone)]
pub struct DichotomyEntry {
    pub label: String,
    pub linear: bool,
    pub q: f64,
    pub records: Vec<DiagnosticsRecord>,
}

/// Quadratic coefficient of `var_T(t)` for the linear dispersion and the
/// nonlinear battery, all over the `M = 10` tripling time.
pub fn dichotomy() -> Result<Vec<DichotomyEntry>> {
    let duration = tripling_time(FREE_OMEGA, VARIANCE_MASS);
    let mut battery = vec![("linear".to_string(), DispersionRelation::linear(1.0))];
    for m in [5.0, 10.0, 50.0] {
        battery.push((format!("massive M={m}"), DispersionRelation::massive(1.0, m)?));
    }
    battery.push(("tabulated sine".to_string(), sine_dispersion(0.1, 1.0, 32.0, 1e-3)?));
    battery
        .into_iter()
        .map(|(label, disp)| {
            let linear = disp.is_linear();
            let traj = free_run(disp, duration)?;
            let fit = crate::timeops::degradation_series(&traj.records)?;
            Ok(DichotomyEntry {
                label,
                linear,
                q: fit.q,
                records: traj.records,
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct PauliSlopes {
    pub linear: f64,
    pub massive: f64,
    /// `1 + k0 / (M c)` for the massive run.
    pub massive_expected: f64,
    pub records: Vec<DiagnosticsRecord>,
}

pub fn pauli_slopes() -> Result<PauliSlopes> {
    let duration = tripling_time(FREE_OMEGA, VARIANCE_MASS);
    let lin = free_run(DispersionRelation::linear(1.0), duration)?;
    let mas = free_run(DispersionRelation::massive(1.0, VARIANCE_MASS)?, duration)?;
    let mut records = lin.records.clone();
    records.extend(mas.records.iter().cloned());
    Ok(PauliSlopes {
        linear: crate::timeops::pauli_rate(&lin.records)?,
        massive: crate::timeops::pauli_rate(&mas.records)?,
        massive_expected: 1.0 + FREE_K0 / VARIANCE_MASS,
        records,
    })
}

/// Smallest uncertainty margin over `records` (records with `var_HC = 0` skipped).
pub fn min_uncertainty_margin(records: &[DiagnosticsRecord]) -> f64 {
    records
        .iter()
        .filter_map(|r| uncertainty_check(r).ok())
        .map(|c| c.margin)
        .fold(f64::INFINITY, f64::min)
}

/// `sqrt(var_T var_HC) - |<Lambda>| / 2` at `t = 0` for an unchirped Gaussian
/// under linear dispersion.
pub fn saturation_gap() -> Result<f64> {
    let grid = free_grid()?;
    let clock = make_gaussian_pulse(grid, ClockPulse::new(-150.0, FREE_OMEGA, FREE_K0))?;
    let disp = DispersionRelation::linear(1.0);
    let t = time_stats(&clock, 1.0);
    let hc = hc_stats(&clock, &disp);
    let lambda = lambda_stats(&clock, &disp, 1.0);
    Ok((t.var.sqrt() * hc.var.sqrt() - lambda.mean.abs() / 2.0).abs())
}

// ------------------------------------------------ coupling degradation

#[derive(Debug, Clone, Copy)]
pub struct DegradationPair {
    pub coupled: f64,
    pub decoupled: f64,
}

impl DegradationPair {
    pub fn excess(&self) -> f64 {
        self.coupled - self.decoupled
    }
}

fn straddle_model(grid: SpatialGrid, coupled: bool) -> Result<Model> {
    let schedule = if coupled {
        GeneratorSchedule::alternating(10.0, 0.0, vec![HermitianOp::pauli_z(); 3])?
    } else {
        GeneratorSchedule::decoupled(2, 10.0)
    };
    Model::new(grid, DispersionRelation::linear(1.0), HermitianOp::pauli_x().scaled(0.25), schedule)
}

/// Final `D` of a pulse crossing a live/dead boundary under linear dispersion,
/// with and without the `sigma_z` coupling, on the split-step integrator.
pub fn straddle_degradation_split() -> Result<DegradationPair> {
    let grid = SpatialGrid::new(2048, 102.4, -40.0)?;
    let clock = make_gaussian_pulse(grid, ClockPulse::new(8.0, 1.0, 0.0))?;
    let engine = [c64(0.5f64.sqrt(), 0.0), c64(0.5f64.sqrt(), 0.0)];
    let cfg = StepConfig::new(0.01, 100);
    let final_d = |coupled: bool| -> Result<f64> {
        let model = straddle_model(grid, coupled)?;
        let traj = evolve(JointState::product(&engine, &clock)?, &model, &cfg, 4.0, &mut [])?;
        Ok(time_stats(&traj.final_state, model.reference_speed).var.sqrt())
    };
    Ok(DegradationPair {
        coupled: final_d(true)?,
        decoupled: final_d(false)?,
    })
}

/// Same comparison on the dense N = 16 oracle case.
pub fn straddle_degradation_oracle() -> Result<DegradationPair> {
    let final_d = |coupled: bool| -> Result<f64> {
        let case = oracle_case(coupled)?;
        let s = oracle_exact(&case, ORACLE_DURATION)?;
        Ok(time_stats(&s, case.model.reference_speed).var.sqrt())
    };
    Ok(DegradationPair {
        coupled: final_d(true)?,
        decoupled: final_d(false)?,
    })
}

// ------------------------------------------------ protocol windows

fn window_grid() -> Result<SpatialGrid> {
    SpatialGrid::new(1024, 64.0, -16.0)
}

/// Fidelity of the reduced engine state with free `H_E` evolution while the
/// pulse crosses the interior of a dead window.
pub fn dead_window_fidelity() -> Result<f64> {
    let grid = window_grid()?;
    let h_e = HermitianOp::pauli_x().scaled(0.25);
    let schedule = GeneratorSchedule::alternating(10.0, 0.0, vec![HermitianOp::pauli_z(); 2])?;
    let model = Model::new(grid, DispersionRelation::linear(1.0), h_e.clone(), schedule)?;
    let clock = make_gaussian_pulse(grid, ClockPulse::new(12.0, 4.0, 20.0))?;
    let engine = [c64(0.6, 0.0), c64(0.0, 0.8)];
    let duration = 6.0;
    let traj = evolve(
        JointState::product(&engine, &clock)?,
        &model,
        &StepConfig::new(0.01, 100),
        duration,
        &mut [],
    )?;
    let rho = reduced_engine_state(&traj.final_state);
    let u = h_e.propagator(duration);
    let phi: Vec<Complex64> = (0..2).map(|r| u[(r, 0)] * engine[0] + u[(r, 1)] * engine[1]).collect();
    Ok(state_fidelity(&rho, &phi))
}

#[derive(Debug, Clone, Copy)]
pub struct LiveWindowChannel {
    /// Average gate fidelity against `exp(-i sigma_x tau / W)`.
    pub f_avg: f64,
    /// `max |Tr_out C - 1|`.
    pub trace_defect: f64,
    pub min_eigenvalue: f64,
}

/// Realized channel while the pulse stays inside one live `sigma_x` window
/// with `H_E = 0`.
pub fn live_window_channel(exec: Execution) -> Result<LiveWindowChannel> {
    let grid = window_grid()?;
    let width = 10.0;
    let schedule = GeneratorSchedule::alternating(width, 0.0, vec![HermitianOp::pauli_x(); 2])?;
    let model = Model::new(grid, DispersionRelation::linear(1.0), HermitianOp::zero(2), schedule)?;
    let clock = make_gaussian_pulse(grid, ClockPulse::new(2.0, 4.0, 20.0))?;
    let tau = 6.0;
    let channel = realized_channel(&model, &clock, &StepConfig::new(0.01, 100), tau, exec)?;
    Ok(LiveWindowChannel {
        f_avg: channel.average_gate_fidelity(&HermitianOp::pauli_x().propagator(tau / width)),
        trace_defect: channel.trace_defect(),
        min_eigenvalue: channel.min_eigenvalue(),
    })
}

/// Largest relative drift of the total energy over a coupled run in which a
/// carrier-20 pulse crosses a live/dead boundary.
pub fn energy_drift() -> Result<f64> {
    let grid = SpatialGrid::new(2048, 102.4, -40.0)?;
    let clock = make_gaussian_pulse(grid, ClockPulse::new(8.0, 1.0, 20.0))?;
    let engine = [c64(0.5f64.sqrt(), 0.0), c64(0.5f64.sqrt(), 0.0)];
    let model = straddle_model(grid, true)?;
    let mut diag = ClockDiagnostics::new();
    let traj = evolve(
        JointState::product(&engine, &clock)?,
        &model,
        &StepConfig::new(0.01, 20),
        4.0,
        &mut [&mut diag],
    )?;
    let e0 = traj.records[0].energy;
    Ok(traj
        .records
        .iter()
        .map(|r| ((r.energy - e0) / e0).abs())
        .fold(0.0, f64::max))
}

// ------------------------------------------------ bandwidth trade-off

pub const TRADEOFF_OMEGAS: [f64; 4] = [0.5, 1.0, 2.0, 4.0];
pub const TRADEOFF_WIDTH: f64 = 10.0;
pub const TRADEOFF_DURATION: f64 = 50.0;
pub const TRADEOFF_MASS: f64 = 10.0;
const TRADEOFF_X0: f64 = -5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffRow {
    pub omega: f64,
    /// Realized channel against the sharp-clock product.
    pub f_avg: f64,
    /// Realized channel against the target unitary.
    pub f_avg_target: f64,
    /// Final `D` of the same pulse under massive dispersion (`M = 10`).
    pub final_d: f64,
}

/// Two-generator target (`sigma_x` then `sigma_z`), each held for two windows.
pub fn tradeoff_target() -> Result<TargetEvolution> {
    TargetEvolution::piecewise(vec![
        (2.0 * TRADEOFF_WIDTH, HermitianOp::pauli_x()),
        (4.0 * TRADEOFF_WIDTH, HermitianOp::pauli_z()),
    ])
}

fn tradeoff_model() -> Result<Model> {
    let target = tradeoff_target()?;
    let schedule = crate::engine::schedule_from_target(&target, TRADEOFF_WIDTH, SchedulePattern::Alternating)?;
    let grid = SpatialGrid::new(2048, 100.0, -30.0)?;
    Model::new(grid, DispersionRelation::linear(1.0), HermitianOp::zero(2), schedule)
}

/// Exact free spreading of the pulse under the massive dispersion.
fn massive_final_d(omega: f64) -> Result<f64> {
    let disp = DispersionRelation::massive(1.0, TRADEOFF_MASS)?;
    let travel = (1.0 + FREE_K0 / TRADEOFF_MASS) * TRADEOFF_DURATION;
    let grid = SpatialGrid::new(8192, 512.0, TRADEOFF_X0 + travel / 2.0 - 256.0)?;
    let clock = make_gaussian_pulse(grid, ClockPulse::new(TRADEOFF_X0, omega, FREE_K0))?;
    let moved = free_step(&clock, &disp, TRADEOFF_DURATION);
    Ok(time_stats(&moved, disp.reference_velocity()).var.sqrt())
}

pub fn bandwidth_tradeoff(omegas: &[f64], exec: Execution) -> Result<Vec<TradeoffRow>> {
    let target = tradeoff_target()?;
    let model = tradeoff_model()?;
    let rows = exec.map(omegas, |&omega| -> Result<TradeoffRow> {
        let clock = make_gaussian_pulse(model.grid, ClockPulse::new(TRADEOFF_X0, omega, 20.0))?;
        let report = protocol_fidelity(
            &target,
            &model,
            &clock,
            &StepConfig::new(0.05, 100),
            TRADEOFF_DURATION,
            Execution::Sequential,
        )?;
        Ok(TradeoffRow {
            omega,
            f_avg: report.f_avg_ideal,
            f_avg_target: report.f_avg,
            final_d: massive_final_d(omega)?,
        })
    });
    rows.into_iter().collect()
}

/// True when `xs` never decreases by more than `tie`.
pub fn nondecreasing(xs: &[f64], tie: f64) -> bool {
    xs.windows(2).all(|w| w[1] >= w[0] - tie)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tripling_time_triples_the_width() {
        let t = tripling_time(1.0, 10.0);
        let var = 1.0 + t * t * 0.25 / 100.0;
        assert!((var - 9.0).abs() < 1e-12);
    }

    #[test]
    fn nondecreasing_allows_ties() {
        assert!(nondecreasing(&[1.0, 1.0 - 1e-12, 2.0], 1e-9));
        assert!(!nondecreasing(&[1.0, 0.9], 1e-9));
    }
}
