use num_complex::Complex64;

use crate::clock::{ClockAmplitudes, Fourier, SpatialGrid};
use crate::engine::CMatrix;
use crate::error::{Error, Result};

/// Joint engine (x) clock amplitudes in the single-excitation sector.
///
/// Stored engine-major: amplitude `(e, j)` lives at `e * n_points + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    grid: SpatialGrid,
    dim: usize,
    amplitudes: Vec<Complex64>,
}

impl JointState {
    pub fn from_raw(grid: SpatialGrid, dim: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if dim == 0 || amplitudes.len() != dim * grid.n_points() {
            return Err(Error::DimensionMismatch {
                expected: dim * grid.n_points(),
                got: amplitudes.len(),
            });
        }
        Ok(Self {
            grid,
            dim,
            amplitudes,
        })
    }

    /// `|engine> (x) clock`, with the engine vector normalized.
    pub fn product(engine: &[Complex64], clock: &ClockAmplitudes) -> Result<Self> {
        let norm: f64 = engine.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NotNormalized(norm));
        }
        let grid = *clock.grid();
        let amplitudes = engine
            .iter()
            .flat_map(|e| clock.amplitudes().iter().map(move |a| a * (e / norm)))
            .collect();
        Self::from_raw(grid, engine.len(), amplitudes)
    }

    /// Engine basis state `|e>` times the clock pulse.
    pub fn basis_product(dim: usize, e: usize, clock: &ClockAmplitudes) -> Result<Self> {
        let mut v = vec![Complex64::new(0.0, 0.0); dim];
        v[e] = Complex64::new(1.0, 0.0);
        Self::product(&v, clock)
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn row(&self, e: usize) -> &[Complex64] {
        let n = self.grid.n_points();
        &self.amplitudes[e * n..(e + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Complex64]> {
        self.amplitudes.chunks(self.grid.n_points())
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.spacing()
    }

    /// Clock marginal `sum_e |Psi_ej|^2 dx`.
    pub fn clock_masses(&self) -> Vec<f64> {
        let dx = self.grid.spacing();
        let mut out = vec![0.0; self.grid.n_points()];
        for row in self.rows() {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a.norm_sqr() * dx;
            }
        }
        out
    }

    /// Clock marginal in momentum, `sum_e |Psi~_e(k_m)|^2 dk`.
    pub fn clock_momentum_masses(&self, fourier: &Fourier) -> Vec<f64> {
        let dk = self.grid.dk();
        let mut out = vec![0.0; self.grid.n_points()];
        for row in self.rows() {
            for (o, a) in out.iter_mut().zip(fourier.to_momentum(row)) {
                *o += a.norm_sqr() * dk;
            }
        }
        out
    }

    /// Largest amplitude difference against another state on the same grid.
    pub fn max_deviation(&self, other: &JointState) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Partial trace over the grid: `rho_E = sum_j Psi_.j Psi_.j^dagger dx`.
pub fn reduced_engine_state(state: &JointState) -> CMatrix {
    let d = state.dim;
    let dx = state.grid.spacing();
    CMatrix::from_fn(d, d, |a, b| {
        state
            .row(a)
            .iter()
            .zip(state.row(b))
            .map(|(x, y)| x * y.conj())
            .sum::<Complex64>()
            * dx
    })
}

pub fn purity(rho: &CMatrix) -> f64 {
    (rho * rho).trace().re
}
