use crate::error::{Error, Result};

use super::hermitian::HermitianOp;
use super::target::TargetEvolution;

/// Generator attached to one window.
#[derive(Debug, Clone, PartialEq)]
pub enum WindowGenerator {
    Live(HermitianOp),
    /// Dead window: the engine sees the identity, i.e. only a global phase.
    Identity,
}

impl WindowGenerator {
    pub fn is_identity(&self) -> bool {
        matches!(self, WindowGenerator::Identity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchedulePattern {
    Explicit,
    /// Even windows carry generators, odd windows are dead.
    Alternating,
}

/// Window-indexed engine generators.
///
/// Window `i` spans `[origin + i W, origin + (i + 1) W)`. Positions outside
/// the listed windows carry no coupling at all.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSchedule {
    width: f64,
    origin: f64,
    dim: usize,
    pattern: SchedulePattern,
    windows: Vec<WindowGenerator>,
}

impl GeneratorSchedule {
    pub fn new(
        width: f64,
        origin: f64,
        dim: usize,
        pattern: SchedulePattern,
        windows: Vec<WindowGenerator>,
    ) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::InvalidSchedule(format!("window width must be positive, got {width}")));
        }
        if !origin.is_finite() {
            return Err(Error::InvalidSchedule("window origin must be finite".into()));
        }
        for (i, w) in windows.iter().enumerate() {
            if let WindowGenerator::Live(op) = w {
                if op.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: op.dim(),
                    });
                }
                if pattern == SchedulePattern::Alternating && i % 2 == 1 {
                    return Err(Error::InvalidSchedule(format!(
                        "alternating schedule has a live generator in odd window {i}"
                    )));
                }
            }
        }
        Ok(Self {
            width,
            origin,
            dim,
            pattern,
            windows,
        })
    }

    /// `[v_0, 1, v_1, 1, ...]`.
    pub fn alternating(width: f64, origin: f64, live: Vec<HermitianOp>) -> Result<Self> {
        let dim = live.first().map(|v| v.dim()).ok_or_else(|| {
            Error::InvalidSchedule("alternating schedule needs at least one generator".into())
        })?;
        let windows = live
            .into_iter()
            .flat_map(|v| [WindowGenerator::Live(v), WindowGenerator::Identity])
            .collect();
        Self::new(width, origin, dim, SchedulePattern::Alternating, windows)
    }

    pub fn explicit(width: f64, origin: f64, dim: usize, windows: Vec<WindowGenerator>) -> Result<Self> {
        Self::new(width, origin, dim, SchedulePattern::Explicit, windows)
    }

    /// No windows: the engine and clock never couple.
    pub fn decoupled(dim: usize, width: f64) -> Self {
        Self {
            width,
            origin: 0.0,
            dim,
            pattern: SchedulePattern::Explicit,
            windows: Vec::new(),
        }
    }

    pub fn with_origin(mut self, origin: f64) -> Self {
        self.origin = origin;
        self
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pattern(&self) -> SchedulePattern {
        self.pattern
    }

    pub fn windows(&self) -> &[WindowGenerator] {
        &self.windows
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn window(&self, i: i64) -> Option<&WindowGenerator> {
        usize::try_from(i).ok().and_then(|i| self.windows.get(i))
    }

    pub fn center(&self, i: i64) -> f64 {
        self.origin + (i as f64 + 0.5) * self.width
    }

    pub fn left_edge(&self, i: i64) -> f64 {
        self.origin + i as f64 * self.width
    }

    /// Window index containing position `x` (may be outside the schedule).
    pub fn index_of(&self, x: f64) -> i64 {
        ((x - self.origin) / self.width).floor() as i64
    }

    pub fn has_coupling(&self) -> bool {
        self.windows.iter().any(|w| match w {
            WindowGenerator::Live(op) => !op.is_zero(),
            WindowGenerator::Identity => true,
        })
    }
}

/// Samples a target at window centers `(i + 1/2) W`.
///
/// The schedule's spatial origin is 0; reposition it with
/// [`GeneratorSchedule::with_origin`].
pub fn schedule_from_target(
    target: &TargetEvolution,
    width: f64,
    pattern: SchedulePattern,
) -> Result<GeneratorSchedule> {
    schedule_from_target_at(target, width, pattern, &[])
}

/// Like [`schedule_from_target`] with per-window sample-time overrides `(window, time)`.
pub fn schedule_from_target_at(
    target: &TargetEvolution,
    width: f64,
    pattern: SchedulePattern,
    overrides: &[(usize, f64)],
) -> Result<GeneratorSchedule> {
    if !(width.is_finite() && width > 0.0) {
        return Err(Error::InvalidSchedule(format!("window width must be positive, got {width}")));
    }
    let count = ((target.duration() / width) - 1e-9).ceil().max(1.0) as usize;
    let mut windows = Vec::with_capacity(count);
    for i in 0..count {
        if pattern == SchedulePattern::Alternating && i % 2 == 1 {
            windows.push(WindowGenerator::Identity);
            continue;
        }
        let s = overrides
            .iter()
            .find(|(w, _)| *w == i)
            .map(|(_, t)| *t)
            .unwrap_or((i as f64 + 0.5) * width);
        if s > target.duration() {
            // padding window beyond the target
            windows.push(WindowGenerator::Identity);
            continue;
        }
        windows.push(WindowGenerator::Live(target.sample(s)?));
    }
    GeneratorSchedule::new(width, 0.0, target.dim(), pattern, windows)
}
