//! The clock field restricted to its single-excitation sector.
//!
//! A clock state is one complex amplitude per grid point. Free evolution is
//! diagonal in momentum and applied spectrally, so any dispersion relation
//! `omega(k)` is propagated exactly up to roundoff.

mod dispersion;
mod fourier;
mod grid;

pub use dispersion::{DispersionRelation, DispersionTable};
pub use fourier::Fourier;
pub use grid::SpatialGrid;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Gaussian envelope with optional carrier momentum and quadratic chirp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockPulse {
    pub center: f64,
    /// Frequency bandwidth; the position standard deviation is `1 / bandwidth`.
    pub bandwidth: f64,
    pub carrier: f64,
    /// Coefficient of the phase `exp(i chirp (x - center)^2)`.
    pub chirp: f64,
}

impl ClockPulse {
    pub fn new(center: f64, bandwidth: f64, carrier: f64) -> Self {
        Self {
            center,
            bandwidth,
            carrier,
            chirp: 0.0,
        }
    }

    pub fn with_chirp(mut self, chirp: f64) -> Self {
        self.chirp = chirp;
        self
    }

    /// Unnormalized envelope value at `x`.
    pub fn amplitude(&self, x: f64) -> Complex64 {
        let d = x - self.center;
        let w2 = self.bandwidth * self.bandwidth;
        let norm = (w2 / (2.0 * std::f64::consts::PI)).powf(0.25);
        let mag = norm * (-w2 * d * d / 4.0).exp();
        Complex64::from_polar(mag, self.carrier * x + self.chirp * d * d)
    }

    /// True when the spectral width is not small against the carrier.
    pub fn is_broadband(&self) -> bool {
        self.bandwidth >= self.carrier.abs() / 5.0
    }

    pub fn check_fits(&self, grid: &SpatialGrid) -> Result<()> {
        let width = 1.0 / self.bandwidth;
        let min = 4.0 * grid.spacing();
        if !(self.bandwidth > 0.0) || width < min {
            return Err(Error::PulseUnresolvable { width, min });
        }
        let extent = 6.0 / self.bandwidth;
        let max = grid.length() / 2.0;
        if extent > max {
            return Err(Error::PulseTooWide { extent, max });
        }
        Ok(())
    }
}

/// Position-space amplitudes of a single-excitation clock state.
#[derive(Debug, Clone, PartialEq)]
pub struct ClockAmplitudes {
    grid: SpatialGrid,
    amplitudes: Vec<Complex64>,
}

impl ClockAmplitudes {
    /// Wraps raw amplitudes without normalizing.
    pub fn from_raw(grid: SpatialGrid, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != grid.n_points() {
            return Err(Error::DimensionMismatch {
                expected: grid.n_points(),
                got: amplitudes.len(),
            });
        }
        Ok(Self { grid, amplitudes })
    }

    /// Samples `f` on the grid and normalizes.
    pub fn from_fn(grid: SpatialGrid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let amplitudes = grid.positions().into_iter().map(f).collect();
        let mut s = Self::from_raw(grid, amplitudes)?;
        let n = s.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::NotNormalized(n));
        }
        let scale = 1.0 / n.sqrt();
        s.amplitudes.iter_mut().for_each(|a| *a *= scale);
        Ok(s)
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    /// `sum |psi_j|^2 dx`.
    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.spacing()
    }

    /// Position-space probability masses `|psi_j|^2 dx`.
    pub fn masses(&self) -> Vec<f64> {
        let dx = self.grid.spacing();
        self.amplitudes.iter().map(|a| a.norm_sqr() * dx).collect()
    }
}

pub fn make_gaussian_pulse(grid: SpatialGrid, pulse: ClockPulse) -> Result<ClockAmplitudes> {
    pulse.check_fits(&grid)?;
    if pulse.is_broadband() {
        log::warn!(
            "pulse bandwidth {} is not small against carrier {}; quasimonochromatic regime violated",
            pulse.bandwidth,
            pulse.carrier
        );
    }
    ClockAmplitudes::from_fn(grid, |x| pulse.amplitude(x))
}

pub fn to_momentum(state: &ClockAmplitudes) -> Vec<Complex64> {
    Fourier::new(state.grid).to_momentum(&state.amplitudes)
}

pub fn to_position(grid: SpatialGrid, momentum: &[Complex64]) -> Result<ClockAmplitudes> {
    if momentum.len() != grid.n_points() {
        return Err(Error::DimensionMismatch {
            expected: grid.n_points(),
            got: momentum.len(),
        });
    }
    let amplitudes = Fourier::new(grid).to_position(momentum);
    ClockAmplitudes::from_raw(grid, amplitudes)
}

/// Phases `exp(-i omega(k_m) dt)` in FFT order.
pub fn free_phases(grid: &SpatialGrid, disp: &DispersionRelation, dt: f64) -> Vec<Complex64> {
    grid.momenta()
        .iter()
        .map(|&k| Complex64::from_polar(1.0, -disp.omega(k) * dt))
        .collect()
}

/// Free clock evolution over `dt`.
pub fn free_step(state: &ClockAmplitudes, disp: &DispersionRelation, dt: f64) -> ClockAmplitudes {
    if dt == 0.0 {
        return state.clone();
    }
    let fourier = Fourier::new(state.grid);
    let phases = free_phases(&state.grid, disp, dt);
    let mut amplitudes = state.amplitudes.clone();
    fourier.apply_diagonal(&mut amplitudes, &phases);
    ClockAmplitudes {
        grid: state.grid,
        amplitudes,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean_x: f64,
    pub var_x: f64,
    pub mean_k: f64,
    pub var_k: f64,
}

/// Mean and variance of `values` under the weights `masses` (which sum to the norm).
pub(crate) fn weighted_moments(values: &[f64], masses: &[f64]) -> (f64, f64) {
    let total: f64 = masses.iter().sum();
    let mean = values.iter().zip(masses).map(|(v, m)| v * m).sum::<f64>() / total;
    let var = values
        .iter()
        .zip(masses)
        .map(|(v, m)| (v - mean) * (v - mean) * m)
        .sum::<f64>()
        / total;
    (mean, var.max(0.0))
}

pub fn moments(state: &ClockAmplitudes) -> Moments {
    let grid = state.grid;
    let (mean_x, var_x) = weighted_moments(&grid.positions(), &state.masses());
    let dk = grid.dk();
    let kmass: Vec<f64> = to_momentum(state).iter().map(|a| a.norm_sqr() * dk).collect();
    let (mean_k, var_k) = weighted_moments(&grid.momenta(), &kmass);
    Moments {
        mean_x,
        var_x,
        mean_k,
        var_k,
    }
}

/// Probability mass in the outer 5% bands at either end of the grid.
pub fn edge_mass(grid: &SpatialGrid, masses: &[f64]) -> f64 {
    let band = grid.edge_band();
    let n = grid.n_points();
    masses[..band].iter().sum::<f64>() + masses[n - band..].iter().sum::<f64>()
}

pub const WRAPAROUND_THRESHOLD: f64 = 1e-8;

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> (SpatialGrid, ClockAmplitudes) {
        let grid = SpatialGrid::centered(1024, 100.0).unwrap();
        let psi = make_gaussian_pulse(grid, ClockPulse::new(-30.0, 1.0, 10.0)).unwrap();
        (grid, psi)
    }

    #[test]
    fn gaussian_pulse_is_normalized_with_expected_moments() {
        let (_, psi) = reference();
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        let m = moments(&psi);
        assert!((m.mean_x + 30.0).abs() < 1e-3);
        assert!((m.var_x - 1.0).abs() < 1e-3);
        assert!((m.mean_k - 10.0).abs() < 1e-3);
        assert!((m.var_k - 0.25).abs() < 1e-3);
    }

    #[test]
    fn pulse_preconditions() {
        let grid = SpatialGrid::centered(64, 64.0).unwrap();
        assert!(matches!(
            make_gaussian_pulse(grid, ClockPulse::new(0.0, 1.0, 10.0)),
            Err(Error::PulseUnresolvable { .. })
        ));
        let grid = SpatialGrid::centered(1024, 20.0).unwrap();
        assert!(matches!(
            make_gaussian_pulse(grid, ClockPulse::new(0.0, 0.5, 10.0)),
            Err(Error::PulseTooWide { .. })
        ));
        // broadband pulses only warn
        assert!(make_gaussian_pulse(grid, ClockPulse::new(0.0, 1.0, 0.0)).is_ok());
        assert!(ClockPulse::new(0.0, 1.0, 0.0).is_broadband());
        assert!(!ClockPulse::new(0.0, 1.0, 10.0).is_broadband());
    }

    #[test]
    fn fourier_round_trip_and_parseval() {
        let (grid, psi) = reference();
        let k = to_momentum(&psi);
        let back = to_position(grid, &k).unwrap();
        let err = psi
            .amplitudes()
            .iter()
            .zip(back.amplitudes())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-13, "{err}");
        let pk: f64 = k.iter().map(|a| a.norm_sqr()).sum::<f64>() * grid.dk();
        assert!((pk - psi.norm()).abs() < 1e-12);
    }

    #[test]
    fn delta_has_flat_spectrum() {
        let grid = SpatialGrid::centered(64, 16.0).unwrap();
        let mut amps = vec![Complex64::new(0.0, 0.0); 64];
        amps[17] = Complex64::new(1.0, 0.0);
        let psi = ClockAmplitudes::from_raw(grid, amps).unwrap();
        let k = to_momentum(&psi);
        let m0 = k[0].norm();
        assert!(k.iter().all(|a| (a.norm() - m0).abs() < 1e-14));
    }

    #[test]
    fn spectrum_peaks_at_carrier() {
        let (grid, psi) = reference();
        let k = to_momentum(&psi);
        let peak = (0..k.len())
            .max_by(|&a, &b| k[a].norm().partial_cmp(&k[b].norm()).unwrap())
            .unwrap();
        assert!((grid.momentum(peak) - 10.0).abs() <= grid.dk() / 2.0);
    }

    #[test]
    fn linear_free_step_translates() {
        let (_, psi) = reference();
        let out = free_step(&psi, &DispersionRelation::linear(1.0), 5.0);
        let (m0, m1) = (moments(&psi), moments(&out));
        assert!((m1.mean_x + 25.0).abs() < 1e-6);
        assert!((m1.var_x - m0.var_x).abs() < 1e-9);
    }

    #[test]
    fn zero_step_is_bitwise_identity() {
        let (_, psi) = reference();
        let out = free_step(&psi, &DispersionRelation::massive(1.0, 3.0).unwrap(), 0.0);
        assert_eq!(out, psi);
    }

    #[test]
    fn two_gaussian_mixture_variance() {
        // equal mixture of separated Gaussians: var = a^2 + sigma^2
        let grid = SpatialGrid::centered(2048, 200.0).unwrap();
        let (a, omega) = (20.0, 1.0);
        let left = ClockPulse::new(-a, omega, 0.0);
        let right = ClockPulse::new(a, omega, 0.0);
        let psi = ClockAmplitudes::from_fn(grid, |x| left.amplitude(x) + right.amplitude(x)).unwrap();
        let m = moments(&psi);
        assert!((m.var_x - (a * a + 1.0)).abs() < 1e-6);
    }
}
