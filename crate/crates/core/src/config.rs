//! JSON simulation configuration.
//!
//! Matrices are written as rows of `[re, im]` pairs or as preset names.
//! Parse errors name the offending field path together with line and column.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::clock::{make_gaussian_pulse, ClockAmplitudes, ClockPulse, DispersionRelation, SpatialGrid};
use crate::engine::{
    schedule_from_target_at, GeneratorSchedule, HermitianOp, SchedulePattern, TargetEvolution, WindowGenerator,
};
use crate::error::{Error, Result};
use crate::propagator::{JointState, Model, Splitting, StepConfig};
use crate::protocol::ModulationMode;

/// Below this value of `omega * W` the pulse is wide against a window.
pub const NARROW_WINDOW_THRESHOLD: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub grid: GridSpec,
    pub pulse: PulseSpec,
    pub dispersion: DispersionSpec,
    /// Reference speed in the time operator; defaults to the group velocity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    pub engine: EngineSpec,
    pub windows: WindowSpec,
    pub stepping: SteppingSpec,
    pub run: RunSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n_points: usize,
    pub length: f64,
    pub origin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSpec {
    pub x0: f64,
    pub omega: f64,
    #[serde(default)]
    pub k0: f64,
    #[serde(default)]
    pub chirp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DispersionSpec {
    Linear {
        v_g: f64,
    },
    Massive {
        v_g: f64,
        mass: f64,
    },
    Tabulated {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        table: Option<TableSpec>,
        /// Two-column text file of `k, omega` rows; relative to the config file.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSpec {
    pub k: Vec<f64>,
    pub omega: Vec<f64>,
}

/// Matrix given by preset name or as rows of `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Preset(String),
    Dense(Vec<Vec<[f64; 2]>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineSpec {
    pub dim: usize,
    #[serde(default = "zero_matrix")]
    pub h_e: MatrixSpec,
    /// Initial engine vector as `[re, im]` pairs; basis state 0 by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<[f64; 2]>>,
    pub schedule: ScheduleSpec,
}

fn zero_matrix() -> MatrixSpec {
    MatrixSpec::Preset("zero".into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    /// No coupling at all.
    None,
    /// Window generators listed directly. Under the alternating pattern the
    /// list holds only the live generators. The name `"dead"` marks an
    /// identity window.
    Explicit { generators: Vec<MatrixSpec> },
    /// Piecewise-constant target sampled at window centers.
    Target {
        segments: Vec<SegmentSpec>,
        /// `[window, time]` sample-time overrides.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        sample_overrides: Vec<(usize, f64)>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    /// End time of the segment.
    pub until: f64,
    pub generator: MatrixSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternSpec {
    Explicit,
    Alternating,
}

impl From<PatternSpec> for SchedulePattern {
    fn from(p: PatternSpec) -> Self {
        match p {
            PatternSpec::Explicit => SchedulePattern::Explicit,
            PatternSpec::Alternating => SchedulePattern::Alternating,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    #[serde(rename = "W")]
    pub width: f64,
    pub pattern: PatternSpec,
    #[serde(default)]
    pub origin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SplittingSpec {
    #[default]
    Strang,
    Lie,
}

impl From<SplittingSpec> for Splitting {
    fn from(s: SplittingSpec) -> Self {
        match s {
            SplittingSpec::Strang => Splitting::Strang,
            SplittingSpec::Lie => Splitting::Lie,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteppingSpec {
    pub dt: f64,
    #[serde(default)]
    pub splitting: SplittingSpec,
    #[serde(default = "default_steps_per_record")]
    pub steps_per_record: usize,
    #[serde(default = "default_window_ratio")]
    pub window_ratio: f64,
}

fn default_steps_per_record() -> usize {
    10
}

fn default_window_ratio() -> f64 {
    100.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub duration: f64,
    #[serde(default = "default_outputs")]
    pub outputs: PathBuf,
    /// Seed for randomized property checks; the simulation itself is deterministic.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: ModulationMode,
    /// Reconstruct the engine channel and report fidelity (target schedules only).
    #[serde(default)]
    pub fidelity: bool,
}

fn default_outputs() -> PathBuf {
    PathBuf::from("out")
}

/// Sweep axes; the sweep runs over their cartesian product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default, rename = "W", skip_serializing_if = "Vec::is_empty")]
    pub width: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub omega: Vec<f64>,
    #[serde(default, rename = "M", skip_serializing_if = "Vec::is_empty")]
    pub mass: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dt: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pattern: Vec<PatternSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mode: Vec<ModulationMode>,
}

fn config_err(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

impl MatrixSpec {
    pub fn to_op(&self, dim: usize, path: &str) -> Result<HermitianOp> {
        let op = match self {
            MatrixSpec::Preset(name) => HermitianOp::preset(name, dim),
            MatrixSpec::Dense(rows) => {
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return Err(config_err(path, format!("expected a {dim}x{dim} matrix")));
                }
                if rows.iter().flatten().flatten().any(|v| !v.is_finite()) {
                    return Err(config_err(path, "matrix entries must be finite"));
                }
                let flat: Vec<[f64; 2]> = rows.iter().flatten().copied().collect();
                HermitianOp::from_pairs(dim, &flat)
            }
        };
        op.map_err(|e| config_err(path, e.to_string()))
    }

    fn to_generator(&self, dim: usize, path: &str) -> Result<WindowGenerator> {
        match self {
            MatrixSpec::Preset(name) if name == "dead" => Ok(WindowGenerator::Identity),
            m => m.to_op(dim, path).map(WindowGenerator::Live),
        }
    }
}

/// Everything needed to start a run, built from a config.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub model: Model,
    pub pulse: ClockPulse,
    pub clock: ClockAmplitudes,
    pub initial: JointState,
    pub step: StepConfig,
    pub duration: f64,
    pub mode: ModulationMode,
    pub target: Option<TargetEvolution>,
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            config_err(
                &path,
                format!("line {} column {}: {}", inner.line(), inner.column(), inner),
            )
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| config_err("<file>", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn group_velocity(&self) -> f64 {
        match &self.dispersion {
            DispersionSpec::Linear { v_g } | DispersionSpec::Massive { v_g, .. } => *v_g,
            DispersionSpec::Tabulated { .. } => 1.0,
        }
    }

    fn dispersion(&self, base: &Path) -> Result<DispersionRelation> {
        let d = match &self.dispersion {
            DispersionSpec::Linear { v_g } => Ok(DispersionRelation::linear(*v_g)),
            DispersionSpec::Massive { v_g, mass } => DispersionRelation::massive(*v_g, *mass),
            DispersionSpec::Tabulated { table, path } => match (table, path) {
                (Some(t), None) => DispersionRelation::tabulated(t.k.clone(), t.omega.clone()),
                (None, Some(p)) => {
                    let (k, w) = read_table(&base.join(p))?;
                    DispersionRelation::tabulated(k, w)
                }
                _ => {
                    return Err(config_err(
                        "dispersion",
                        "tabulated dispersion needs exactly one of `table` or `path`",
                    ))
                }
            },
        };
        d.map_err(|e| config_err("dispersion", e.to_string()))
    }

    fn schedule(&self) -> Result<(GeneratorSchedule, Option<TargetEvolution>)> {
        let dim = self.engine.dim;
        let w = self.windows.width;
        let pattern: SchedulePattern = self.windows.pattern.into();
        let built = match &self.engine.schedule {
            ScheduleSpec::None => Ok((GeneratorSchedule::decoupled(dim, w).with_origin(self.windows.origin), None)),
            ScheduleSpec::Explicit { generators } => {
                let gens = generators
                    .iter()
                    .enumerate()
                    .map(|(i, g)| g.to_generator(dim, &format!("engine.schedule.generators[{i}]")))
                    .collect::<Result<Vec<_>>>()?;
                let s = match pattern {
                    SchedulePattern::Explicit => GeneratorSchedule::explicit(w, self.windows.origin, dim, gens),
                    SchedulePattern::Alternating => {
                        let windows = gens.into_iter().flat_map(|g| [g, WindowGenerator::Identity]).collect();
                        GeneratorSchedule::new(w, self.windows.origin, dim, pattern, windows)
                    }
                };
                s.map(|s| (s, None))
            }
            ScheduleSpec::Target {
                segments,
                sample_overrides,
            } => {
                let segs = segments
                    .iter()
                    .enumerate()
                    .map(|(i, s)| Ok((s.until, s.generator.to_op(dim, &format!("engine.schedule.segments[{i}]"))?)))
                    .collect::<Result<Vec<_>>>()?;
                let target = TargetEvolution::piecewise(segs).map_err(|e| config_err("engine.schedule", e.to_string()))?;
                schedule_from_target_at(&target, w, pattern, sample_overrides)
                    .map(|s| (s.with_origin(self.windows.origin), Some(target)))
            }
        };
        built.map_err(|e| match e {
            Error::Config { .. } => e,
            other => config_err("engine.schedule", other.to_string()),
        })
    }

    /// Checks the config and assembles the model, pulse and initial state.
    pub fn build(&self, base: &Path) -> Result<Simulation> {
        let g = &self.grid;
        let grid = SpatialGrid::new(g.n_points, g.length, g.origin).map_err(|e| config_err("grid", e.to_string()))?;
        let dispersion = self.dispersion(base)?;
        let dim = self.engine.dim;
        if dim == 0 {
            return Err(config_err("engine.dim", "engine dimension must be positive"));
        }
        let h_e = self.engine.h_e.to_op(dim, "engine.h_e")?;
        let (schedule, target) = self.schedule()?;
        let mut model = Model::new(grid, dispersion, h_e, schedule)?;
        if let Some(c) = self.c {
            if !(c.is_finite() && c > 0.0) {
                return Err(config_err("c", "reference speed must be positive"));
            }
            model = model.with_reference_speed(c);
        }
        let p = &self.pulse;
        let pulse = ClockPulse::new(p.x0, p.omega, p.k0).with_chirp(p.chirp);
        let clock = make_gaussian_pulse(grid, pulse).map_err(|e| config_err("pulse", e.to_string()))?;
        if p.omega * self.windows.width < NARROW_WINDOW_THRESHOLD {
            log::warn!(
                "omega * W = {} is below {NARROW_WINDOW_THRESHOLD}; the pulse is wide against a window",
                p.omega * self.windows.width
            );
        }
        let engine: Vec<Complex64> = match &self.engine.initial {
            None => (0..dim).map(|e| Complex64::new(if e == 0 { 1.0 } else { 0.0 }, 0.0)).collect(),
            Some(v) if v.len() == dim => v.iter().map(|p| Complex64::new(p[0], p[1])).collect(),
            Some(v) => {
                return Err(config_err(
                    "engine.initial",
                    format!("expected {dim} entries, got {}", v.len()),
                ))
            }
        };
        let initial = JointState::product(&engine, &clock).map_err(|e| config_err("engine.initial", e.to_string()))?;
        let s = &self.stepping;
        let step = StepConfig::new(s.dt, s.steps_per_record)
            .with_splitting(s.splitting.into())
            .with_window_ratio(s.window_ratio);
        step.validate(&model.schedule).map_err(|e| config_err("stepping", e.to_string()))?;
        let duration = self.run.duration;
        crate::propagator::step_count(duration, s.dt).map_err(|e| config_err("run.duration", e.to_string()))?;
        if model.schedule.has_coupling() {
            let travel = duration * model.dispersion.reference_velocity().abs();
            let covered = model.schedule.len() as f64 * model.schedule.width();
            if covered < travel {
                log::warn!("schedule covers {covered} but the pulse travels about {travel}");
            }
        }
        Ok(Simulation {
            model,
            pulse,
            clock,
            initial,
            step,
            duration,
            mode: self.run.mode,
            target,
        })
    }
}

/// Reads `k, omega` rows separated by commas or whitespace; `#` starts a comment
/// and a non-numeric first line is treated as a header.
pub fn read_table(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = fs::read_to_string(path)
        .map_err(|e| config_err("dispersion.path", format!("cannot read {}: {e}", path.display())))?;
    let mut k = Vec::new();
    let mut w = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
        let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(v) if v.len() == 2 => {
                k.push(v[0]);
                w.push(v[1]);
            }
            Err(_) if k.is_empty() => continue,
            _ => {
                return Err(config_err(
                    "dispersion.path",
                    format!("{}:{}: expected two numbers", path.display(), lineno + 1),
                ))
            }
        }
    }
    Ok((k, w))
}
