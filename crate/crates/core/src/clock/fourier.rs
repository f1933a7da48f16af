use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::grid::SpatialGrid;

/// Cached FFT plans for one grid.
///
/// The momentum representation is
/// `psi~(k_m) = dx / sqrt(2 pi) * sum_j psi_j exp(-i k_m x_j)`, so that
/// `sum |psi~|^2 dk = sum |psi|^2 dx` and `psi~` approximates the continuum
/// transform of the envelope.
#[derive(Clone)]
pub struct Fourier {
    grid: SpatialGrid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    origin_phase: Vec<Complex64>,
}

impl fmt::Debug for Fourier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fourier").field("grid", &self.grid).finish()
    }
}

impl Fourier {
    pub fn new(grid: SpatialGrid) -> Self {
        let mut planner = FftPlanner::new();
        let n = grid.n_points();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let origin_phase = grid
            .momenta()
            .iter()
            .map(|k| Complex64::from_polar(1.0, -k * grid.origin()))
            .collect();
        Self {
            grid,
            forward,
            inverse,
            origin_phase,
        }
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn to_momentum(&self, position: &[Complex64]) -> Vec<Complex64> {
        let mut buf = position.to_vec();
        self.forward.process(&mut buf);
        let scale = self.grid.spacing() / (2.0 * PI).sqrt();
        for (b, p) in buf.iter_mut().zip(&self.origin_phase) {
            *b *= p * scale;
        }
        buf
    }

    pub fn to_position(&self, momentum: &[Complex64]) -> Vec<Complex64> {
        let scale = (2.0 * PI).sqrt() / (self.grid.spacing() * self.grid.n_points() as f64);
        let mut buf: Vec<Complex64> = momentum
            .iter()
            .zip(&self.origin_phase)
            .map(|(m, p)| m * p.conj() * scale)
            .collect();
        self.inverse.process(&mut buf);
        buf
    }

    /// In place `psi -> F^-1 diag(phases) F psi`, phases in FFT order.
    pub fn apply_diagonal(&self, psi: &mut [Complex64], phases: &[Complex64]) {
        self.forward.process(psi);
        let inv_n = 1.0 / self.grid.n_points() as f64;
        for (a, p) in psi.iter_mut().zip(phases) {
            *a *= p * inv_n;
        }
        self.inverse.process(psi);
    }
}
