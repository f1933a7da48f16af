//! Joint engine (x) clock evolution under the autonomous total Hamiltonian.
//!
//! The clock moves through static lab-frame windows. Each step is a splitting
//! of the free clock propagator (diagonal in momentum) and the pointwise
//! engine unitaries `exp(-i (H_E + v_i / W) dt)` selected by the window that
//! contains each grid point.

mod state;
mod windows;

pub use state::{purity, reduced_engine_state, JointState};
pub use windows::{build_interaction_profile, local_hamiltonian, InteractionProfile, WindowMap};

use num_complex::Complex64;

use crate::clock::{edge_mass, free_phases, DispersionRelation, Fourier, SpatialGrid, WRAPAROUND_THRESHOLD};
use crate::engine::{GeneratorSchedule, HermitianOp};
use crate::error::{Error, Result};
use crate::timeops::{DiagnosticsRecord, Flags};

/// Everything that defines the total Hamiltonian.
#[derive(Debug, Clone)]
pub struct Model {
    pub grid: SpatialGrid,
    pub dispersion: DispersionRelation,
    /// Reference speed `c` appearing in the time operator.
    pub reference_speed: f64,
    pub h_e: HermitianOp,
    pub schedule: GeneratorSchedule,
}

impl Model {
    pub fn new(
        grid: SpatialGrid,
        dispersion: DispersionRelation,
        h_e: HermitianOp,
        schedule: GeneratorSchedule,
    ) -> Result<Self> {
        if h_e.dim() != schedule.dim() {
            return Err(Error::DimensionMismatch {
                expected: h_e.dim(),
                got: schedule.dim(),
            });
        }
        let reference_speed = dispersion.reference_velocity();
        Ok(Self {
            grid,
            dispersion,
            reference_speed,
            h_e,
            schedule,
        })
    }

    /// Clock-only model: one-dimensional engine, no coupling.
    pub fn free_clock(grid: SpatialGrid, dispersion: DispersionRelation) -> Self {
        let reference_speed = dispersion.reference_velocity();
        Self {
            grid,
            dispersion,
            reference_speed,
            h_e: HermitianOp::zero(1),
            schedule: GeneratorSchedule::decoupled(1, grid.length()),
        }
    }

    pub fn with_reference_speed(mut self, c: f64) -> Self {
        self.reference_speed = c;
        self
    }

    pub fn dim(&self) -> usize {
        self.h_e.dim()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Splitting {
    /// half free, full interaction, half free
    Strang,
    /// full interaction then full free step
    Lie,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConfig {
    pub dt: f64,
    pub steps_per_record: usize,
    pub splitting: Splitting,
    /// Required ratio `W / dt`.
    pub window_ratio: f64,
}

impl StepConfig {
    pub fn new(dt: f64, steps_per_record: usize) -> Self {
        Self {
            dt,
            steps_per_record,
            splitting: Splitting::Strang,
            window_ratio: 100.0,
        }
    }

    pub fn with_splitting(mut self, splitting: Splitting) -> Self {
        self.splitting = splitting;
        self
    }

    pub fn with_window_ratio(mut self, ratio: f64) -> Self {
        self.window_ratio = ratio;
        self
    }

    pub fn validate(&self, schedule: &GeneratorSchedule) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidStep(format!("dt must be positive, got {}", self.dt)));
        }
        if self.steps_per_record == 0 {
            return Err(Error::InvalidStep("steps_per_record must be at least 1".into()));
        }
        if schedule.has_coupling() && self.dt > schedule.width() / self.window_ratio {
            return Err(Error::InvalidStep(format!(
                "dt = {} exceeds W / {} = {}",
                self.dt,
                self.window_ratio,
                schedule.width() / self.window_ratio
            )));
        }
        Ok(())
    }
}

/// Split-step integrator with all per-step operators precomputed.
#[derive(Debug, Clone)]
pub struct SplitStepIntegrator {
    fourier: Fourier,
    free_half: Vec<Complex64>,
    free_full: Vec<Complex64>,
    profile: InteractionProfile,
    map: WindowMap,
    splitting: Splitting,
    dt: f64,
}

impl SplitStepIntegrator {
    pub fn new(model: &Model, cfg: &StepConfig) -> Result<Self> {
        cfg.validate(&model.schedule)?;
        let map = WindowMap::new(&model.grid, &model.schedule)?;
        let profile = build_interaction_profile(&model.schedule, &map, &model.h_e, cfg.dt)?;
        Ok(Self {
            fourier: Fourier::new(model.grid),
            free_half: free_phases(&model.grid, &model.dispersion, 0.5 * cfg.dt),
            free_full: free_phases(&model.grid, &model.dispersion, cfg.dt),
            profile,
            map,
            splitting: cfg.splitting,
            dt: cfg.dt,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn window_map(&self) -> &WindowMap {
        &self.map
    }

    pub fn fourier(&self) -> &Fourier {
        &self.fourier
    }

    fn free(&self, state: &mut JointState, phases: &[Complex64]) {
        let n = state.grid().n_points();
        for row in state.amplitudes_mut().chunks_mut(n) {
            self.fourier.apply_diagonal(row, phases);
        }
    }

    pub fn step(&self, state: &mut JointState) {
        let n = state.grid().n_points();
        match self.splitting {
            Splitting::Strang => {
                self.free(state, &self.free_half);
                self.profile.apply(state.amplitudes_mut(), n);
                self.free(state, &self.free_half);
            }
            Splitting::Lie => {
                self.profile.apply(state.amplitudes_mut(), n);
                self.free(state, &self.free_full);
            }
        }
    }

    pub fn run(&self, state: &mut JointState, steps: usize) {
        for _ in 0..steps {
            self.step(state);
        }
    }
}

/// One collision step as a pure function.
pub fn collision_step(state: &JointState, model: &Model, cfg: &StepConfig) -> Result<JointState> {
    let integrator = SplitStepIntegrator::new(model, cfg)?;
    let mut out = state.clone();
    integrator.step(&mut out);
    Ok(out)
}

/// Read-only view handed to observers at every record.
pub struct Snapshot<'a> {
    pub t: f64,
    pub state: &'a JointState,
    pub model: &'a Model,
    pub map: &'a WindowMap,
    pub fourier: &'a Fourier,
}

/// Fills fields of a diagnostics record from a snapshot.
pub trait Observer {
    fn observe(&mut self, snapshot: &Snapshot<'_>, record: &mut DiagnosticsRecord);
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub records: Vec<DiagnosticsRecord>,
    pub final_state: JointState,
    /// Set when the run stopped early because the pulse reached the grid edge.
    pub truncated: bool,
}

/// Number of whole steps covering `duration`.
pub fn step_count(duration: f64, dt: f64) -> Result<usize> {
    if duration == 0.0 {
        return Ok(0);
    }
    let ratio = duration / dt;
    let steps = ratio.round();
    if !(duration > 0.0) || (ratio - steps).abs() > 1e-6 * ratio.max(1.0) {
        return Err(Error::InvalidStep(format!(
            "duration {duration} is not an integer multiple of dt {dt}"
        )));
    }
    Ok(steps as usize)
}

/// Repeated collision steps with records every `steps_per_record` steps.
///
/// The initial state always yields a record, as does the final state. A record
/// whose clock mass in the outer 5% bands exceeds 1e-8 is flagged and ends the
/// run.
pub fn evolve(
    state: JointState,
    model: &Model,
    cfg: &StepConfig,
    duration: f64,
    observers: &mut [&mut dyn Observer],
) -> Result<Trajectory> {
    if state.dim() != model.dim() || state.grid() != &model.grid {
        return Err(Error::DimensionMismatch {
            expected: model.dim() * model.grid.n_points(),
            got: state.amplitudes().len(),
        });
    }
    let norm = state.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized(norm));
    }
    let integrator = SplitStepIntegrator::new(model, cfg)?;
    let total = step_count(duration, cfg.dt)?;
    let mut state = state;
    let mut records = Vec::new();
    let mut done = 0usize;
    loop {
        let t = done as f64 * cfg.dt;
        let snapshot = Snapshot {
            t,
            state: &state,
            model,
            map: integrator.window_map(),
            fourier: integrator.fourier(),
        };
        let mut record = DiagnosticsRecord::new(t, state.norm());
        for obs in observers.iter_mut() {
            obs.observe(&snapshot, &mut record);
        }
        let wrapped = edge_mass(&model.grid, &state.clock_masses()) > WRAPAROUND_THRESHOLD;
        if wrapped {
            record.flags.insert(Flags::WRAPAROUND);
        }
        records.push(record);
        if wrapped && done > 0 {
            log::warn!("pulse reached the grid edge at t = {t}; run truncated");
            return Ok(Trajectory {
                records,
                final_state: state,
                truncated: true,
            });
        }
        if done >= total {
            break;
        }
        let chunk = cfg.steps_per_record.min(total - done);
        integrator.run(&mut state, chunk);
        done += chunk;
    }
    Ok(Trajectory {
        records,
        final_state: state,
        truncated: false,
    })
}

/// `<H_C> + <H_E + V>` evaluated spectrally and pointwise.
pub fn total_energy(state: &JointState, model: &Model, map: &WindowMap, fourier: &Fourier) -> f64 {
    let grid = state.grid();
    let kmass = state.clock_momentum_masses(fourier);
    let clock: f64 = grid
        .momenta()
        .iter()
        .zip(&kmass)
        .map(|(&k, m)| model.dispersion.omega(k) * m)
        .sum();
    let d = state.dim();
    let n = grid.n_points();
    let locals: Vec<_> = (0..=model.schedule.len())
        .map(|slot| {
            let g = model.schedule.windows().get(slot);
            local_hamiltonian(&model.h_e, g, model.schedule.width())
        })
        .collect();
    let amps = state.amplitudes();
    let mut engine = 0.0;
    for j in 0..n {
        let h = &locals[map.slots()[j].unwrap_or(model.schedule.len())];
        for a in 0..d {
            for b in 0..d {
                engine += (amps[a * n + j].conj() * h[(a, b)] * amps[b * n + j]).re;
            }
        }
    }
    clock + engine * grid.spacing()
}
