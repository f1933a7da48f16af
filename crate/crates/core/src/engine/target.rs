use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

use super::hermitian::{max_abs, CMatrix, HermitianOp};

type Sampler = Arc<dyn Fn(f64) -> CMatrix + Send + Sync>;

#[derive(Clone)]
enum Generator {
    /// `(end_time, generator)`, segments start where the previous one ends.
    Piecewise(Vec<(f64, HermitianOp)>),
    Sampled(Sampler),
}

/// Time-dependent engine Hamiltonian `V_E(t)` on `[0, duration]`.
#[derive(Clone)]
pub struct TargetEvolution {
    dim: usize,
    duration: f64,
    generator: Generator,
}

impl fmt::Debug for TargetEvolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.generator {
            Generator::Piecewise(s) => format!("piecewise({} segments)", s.len()),
            Generator::Sampled(_) => "sampled".to_string(),
        };
        f.debug_struct("TargetEvolution")
            .field("dim", &self.dim)
            .field("duration", &self.duration)
            .field("generator", &kind)
            .finish()
    }
}

pub const CONVERGENCE_TOL: f64 = 1e-8;

impl TargetEvolution {
    pub fn constant(op: HermitianOp, duration: f64) -> Self {
        Self {
            dim: op.dim(),
            duration,
            generator: Generator::Piecewise(vec![(duration, op)]),
        }
    }

    pub fn piecewise(segments: Vec<(f64, HermitianOp)>) -> Result<Self> {
        let first = segments
            .first()
            .ok_or_else(|| Error::InvalidSchedule("piecewise target needs a segment".into()))?;
        let dim = first.1.dim();
        let mut prev = 0.0;
        for (end, op) in &segments {
            if !(*end > prev) {
                return Err(Error::InvalidSchedule(format!(
                    "segment end times must increase (got {end} after {prev})"
                )));
            }
            if op.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: op.dim(),
                });
            }
            prev = *end;
        }
        Ok(Self {
            dim,
            duration: prev,
            generator: Generator::Piecewise(segments),
        })
    }

    /// Closed-form sampler; Hermiticity is checked on every sample.
    pub fn from_fn(dim: usize, duration: f64, f: impl Fn(f64) -> CMatrix + Send + Sync + 'static) -> Self {
        Self {
            dim,
            duration,
            generator: Generator::Sampled(Arc::new(f)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn is_piecewise(&self) -> bool {
        matches!(self.generator, Generator::Piecewise(_))
    }

    pub fn sample(&self, t: f64) -> Result<HermitianOp> {
        match &self.generator {
            Generator::Piecewise(segments) => Ok(segments
                .iter()
                .find(|(end, _)| t < *end)
                .unwrap_or_else(|| segments.last().unwrap())
                .1
                .clone()),
            Generator::Sampled(f) => HermitianOp::new(f(t)),
        }
    }

    /// Applies `g(V) = offset + scale * V` to every generator.
    pub fn affine(&self, offset: &HermitianOp, scale: f64) -> Result<Self> {
        if offset.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: offset.dim(),
            });
        }
        let generator = match &self.generator {
            Generator::Piecewise(segments) => Generator::Piecewise(
                segments
                    .iter()
                    .map(|(end, op)| Ok((*end, offset.add(&op.scaled(scale))?)))
                    .collect::<Result<_>>()?,
            ),
            Generator::Sampled(f) => {
                let f = f.clone();
                let offset = offset.matrix().clone();
                Generator::Sampled(Arc::new(move |t| &offset + f(t) * num_complex::Complex64::from(scale)))
            }
        };
        Ok(Self {
            dim: self.dim,
            duration: self.duration,
            generator,
        })
    }
}

/// Midpoint-sampled ordered product over `n` equal substeps, latest factor leftmost.
pub fn ordered_product(target: &TargetEvolution, t: f64, n: usize) -> Result<CMatrix> {
    let d = target.dim;
    let mut u = CMatrix::identity(d, d);
    if t == 0.0 {
        return Ok(u);
    }
    let n = n.max(1);
    let dt = t / n as f64;
    for j in 0..n {
        let v = target.sample((j as f64 + 0.5) * dt)?;
        u = v.propagator(dt) * u;
    }
    Ok(u)
}

fn piecewise_product(segments: &[(f64, HermitianOp)], t: f64, dim: usize) -> CMatrix {
    let mut u = CMatrix::identity(dim, dim);
    let mut start = 0.0;
    for (end, op) in segments {
        if start >= t {
            break;
        }
        let stop = end.min(t);
        u = op.propagator(stop - start) * u;
        start = *end;
    }
    if start < t {
        // hold the final generator past the last breakpoint
        u = segments.last().unwrap().1.propagator(t - start) * u;
    }
    u
}

/// Time-ordered propagator of the target from 0 to `t`.
///
/// Piecewise-constant targets are integrated exactly segment by segment.
/// Sampled targets use the midpoint ordered product and double the substep
/// count until successive products agree to [`CONVERGENCE_TOL`], trying at
/// most `n_substeps`, `2 n`, `4 n`, `8 n`.
pub fn target_propagator(target: &TargetEvolution, t: f64, n_substeps: usize) -> Result<CMatrix> {
    match &target.generator {
        Generator::Piecewise(segments) => Ok(piecewise_product(segments, t, target.dim)),
        Generator::Sampled(_) => {
            let mut n = n_substeps.max(1);
            let mut prev = ordered_product(target, t, n)?;
            let mut change = f64::INFINITY;
            for _ in 0..3 {
                n *= 2;
                let next = ordered_product(target, t, n)?;
                change = max_abs(&(&next - &prev));
                if change < CONVERGENCE_TOL {
                    return Ok(next);
                }
                prev = next;
            }
            Err(Error::NonConvergent(change))
        }
    }
}
