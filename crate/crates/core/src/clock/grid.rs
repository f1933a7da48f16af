use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Periodic one-dimensional grid carrying the clock field.
///
/// Positions are `origin + j * spacing`; momenta follow the FFT layout, so
/// index `m` maps to `2 pi m~ / length` with `m~` wrapped into `[-n/2, n/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    n_points: usize,
    length: f64,
    origin: f64,
}

impl SpatialGrid {
    pub fn new(n_points: usize, length: f64, origin: f64) -> Result<Self> {
        if n_points < 2 || !n_points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n_points must be a power of two >= 2, got {n_points}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("length must be positive, got {length}")));
        }
        if !origin.is_finite() {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        Ok(Self {
            n_points,
            length,
            origin,
        })
    }

    /// Grid symmetric about zero.
    pub fn centered(n_points: usize, length: f64) -> Result<Self> {
        Self::new(n_points, length, -0.5 * length)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n_points as f64
    }

    /// Momentum spacing `2 pi / length`.
    pub fn dk(&self) -> f64 {
        2.0 * PI / self.length
    }

    pub fn position(&self, j: usize) -> f64 {
        self.origin + j as f64 * self.spacing()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.position(j)).collect()
    }

    /// Signed frequency index of FFT slot `m`.
    pub fn signed_index(&self, m: usize) -> i64 {
        let n = self.n_points as i64;
        let m = m as i64;
        if m < n / 2 {
            m
        } else {
            m - n
        }
    }

    pub fn momentum(&self, m: usize) -> f64 {
        self.dk() * self.signed_index(m) as f64
    }

    /// Momenta in FFT order.
    pub fn momenta(&self) -> Vec<f64> {
        (0..self.n_points).map(|m| self.momentum(m)).collect()
    }

    pub fn nyquist(&self) -> f64 {
        PI / self.spacing()
    }

    /// Number of points in each outer edge band used by the wraparound sentinel.
    pub fn edge_band(&self) -> usize {
        ((self.n_points as f64) * 0.05).ceil() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_times_points_is_length() {
        let g = SpatialGrid::centered(1024, 100.0).unwrap();
        assert!((g.spacing() * 1024.0 - 100.0).abs() < 1e-12);
        assert_eq!(g.position(0), -50.0);
        assert!((g.position(1023) - (50.0 - g.spacing())).abs() < 1e-12);
    }

    #[test]
    fn momenta_follow_fft_layout() {
        let g = SpatialGrid::new(8, 2.0 * PI, 0.0).unwrap();
        let k = g.momenta();
        assert_eq!(k, vec![0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0]);
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(matches!(SpatialGrid::new(100, 1.0, 0.0), Err(Error::InvalidGrid(_))));
        assert!(SpatialGrid::new(64, -1.0, 0.0).is_err());
    }
}
