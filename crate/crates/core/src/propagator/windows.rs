use num_complex::Complex64;

use crate::clock::SpatialGrid;
use crate::engine::{CMatrix, GeneratorSchedule, HermitianOp, WindowGenerator};
use crate::error::{Error, Result};

/// Window index of every grid point, with boundaries snapped to grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowMap {
    indices: Vec<i64>,
    /// Schedule slot per grid point; `None` outside the schedule.
    slots: Vec<Option<usize>>,
}

impl WindowMap {
    /// Uses the default snapping tolerance of half a grid spacing.
    pub fn new(grid: &SpatialGrid, schedule: &GeneratorSchedule) -> Result<Self> {
        Self::with_tolerance(grid, schedule, 0.5 * grid.spacing())
    }

    pub fn with_tolerance(grid: &SpatialGrid, schedule: &GeneratorSchedule, tolerance: f64) -> Result<Self> {
        let dx = grid.spacing();
        let w = schedule.width();
        if w < dx {
            return Err(Error::WindowGridMisaligned {
                boundary: schedule.origin() + w,
                offset: dx - w,
                tolerance,
            });
        }
        let snapped = |i: i64| ((schedule.left_edge(i) - grid.origin()) / dx).round() as i64;

        // every schedule boundary inside the grid must sit on a grid point
        let grid_end = grid.origin() + grid.length();
        for i in 0..=schedule.len() as i64 {
            let b = schedule.left_edge(i);
            if b < grid.origin() || b >= grid_end {
                continue;
            }
            let nearest = grid.origin() + snapped(i) as f64 * dx;
            let offset = (b - nearest).abs();
            if offset > tolerance {
                return Err(Error::WindowGridMisaligned {
                    boundary: b,
                    offset,
                    tolerance,
                });
            }
        }

        let n = grid.n_points();
        let mut indices = Vec::with_capacity(n);
        for j in 0..n {
            let jj = j as i64;
            let mut i = schedule.index_of(grid.position(j));
            while snapped(i + 1) <= jj {
                i += 1;
            }
            while snapped(i) > jj {
                i -= 1;
            }
            indices.push(i);
        }
        let slots = indices
            .iter()
            .map(|&i| usize::try_from(i).ok().filter(|&i| i < schedule.len()))
            .collect();
        Ok(Self { indices, slots })
    }

    pub fn indices(&self) -> &[i64] {
        &self.indices
    }

    pub fn slots(&self) -> &[Option<usize>] {
        &self.slots
    }

    /// Probability mass per window index, from position masses.
    pub fn window_mass(&self, masses: &[f64], window: i64) -> f64 {
        self.indices
            .iter()
            .zip(masses)
            .filter(|(&i, _)| i == window)
            .map(|(_, m)| m)
            .sum()
    }
}

/// Engine-space Hamiltonian acting at positions in one window: `H_E + g / W`.
pub fn local_hamiltonian(h_e: &HermitianOp, generator: Option<&WindowGenerator>, width: f64) -> CMatrix {
    let d = h_e.dim();
    match generator {
        None => h_e.matrix().clone(),
        Some(WindowGenerator::Identity) => h_e.matrix() + CMatrix::identity(d, d) / Complex64::from(width),
        Some(WindowGenerator::Live(v)) => h_e.matrix() + v.matrix() / Complex64::from(width),
    }
}

/// Precomputed per-window engine unitaries for one time step.
#[derive(Debug, Clone)]
pub struct InteractionProfile {
    dim: usize,
    /// One row-major `d x d` unitary per schedule slot, plus the uncoupled one last.
    unitaries: Vec<Vec<Complex64>>,
    /// Index into `unitaries` per grid point.
    lookup: Vec<usize>,
}

impl InteractionProfile {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn unitary_for_slot(&self, slot: Option<usize>) -> CMatrix {
        let idx = slot.unwrap_or(self.unitaries.len() - 1);
        CMatrix::from_row_slice(self.dim, self.dim, &self.unitaries[idx])
    }

    pub fn unitary_at(&self, j: usize) -> CMatrix {
        CMatrix::from_row_slice(self.dim, self.dim, &self.unitaries[self.lookup[j]])
    }

    /// Applies the pointwise engine unitaries to engine-major amplitudes.
    pub fn apply(&self, amplitudes: &mut [Complex64], n: usize) {
        let d = self.dim;
        if d == 1 {
            for (j, a) in amplitudes.iter_mut().enumerate() {
                *a *= self.unitaries[self.lookup[j]][0];
            }
            return;
        }
        let mut column = vec![Complex64::new(0.0, 0.0); d];
        for j in 0..n {
            let u = &self.unitaries[self.lookup[j]];
            for (e, c) in column.iter_mut().enumerate() {
                *c = amplitudes[e * n + j];
            }
            for e in 0..d {
                let row = &u[e * d..(e + 1) * d];
                amplitudes[e * n + j] = row.iter().zip(&column).map(|(a, b)| a * b).sum();
            }
        }
    }
}

/// `U_i(dt) = exp(-i (H_E + v_i / W) dt)` for every window; dead windows get
/// `exp(-i H_E dt) exp(-i dt / W)` and uncovered positions `exp(-i H_E dt)`.
pub fn build_interaction_profile(
    schedule: &GeneratorSchedule,
    map: &WindowMap,
    h_e: &HermitianOp,
    dt: f64,
) -> Result<InteractionProfile> {
    let d = h_e.dim();
    if schedule.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: schedule.dim(),
        });
    }
    let to_row_major = |m: CMatrix| -> Vec<Complex64> {
        (0..d).flat_map(|r| (0..d).map(move |c| (r, c))).map(|(r, c)| m[(r, c)]).collect()
    };
    let free = h_e.propagator(dt);
    let mut unitaries = Vec::with_capacity(schedule.len() + 1);
    for w in schedule.windows() {
        let u = match w {
            WindowGenerator::Identity => &free * Complex64::from_polar(1.0, -dt / schedule.width()),
            WindowGenerator::Live(v) => {
                HermitianOp::new(local_hamiltonian(h_e, Some(&WindowGenerator::Live(v.clone())), schedule.width()))?
                    .propagator(dt)
            }
        };
        unitaries.push(to_row_major(u));
    }
    unitaries.push(to_row_major(free));
    let uncovered = schedule.len();
    let lookup = map.slots().iter().map(|s| s.unwrap_or(uncovered)).collect();
    Ok(InteractionProfile {
        dim: d,
        unitaries,
        lookup,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{max_abs, SchedulePattern};
    use std::f64::consts::PI;

    fn grid() -> SpatialGrid {
        SpatialGrid::new(16, 16.0, 0.0).unwrap()
    }

    #[test]
    fn map_assigns_snapped_windows() {
        let s = GeneratorSchedule::explicit(4.0, 2.0, 2, vec![WindowGenerator::Identity; 2]).unwrap();
        let m = WindowMap::new(&grid(), &s).unwrap();
        let idx = m.indices();
        assert_eq!(&idx[..3], &[-1, -1, 0]);
        assert_eq!(idx[6], 1);
        assert_eq!(idx[10], 2);
        assert_eq!(m.slots()[10], None);
        assert_eq!(m.slots()[5], Some(0));
    }

    #[test]
    fn misalignment_is_reported_under_tight_tolerance() {
        let s = GeneratorSchedule::explicit(4.0, 2.3, 2, vec![WindowGenerator::Identity; 2]).unwrap();
        assert!(WindowMap::new(&grid(), &s).is_ok());
        assert!(matches!(
            WindowMap::with_tolerance(&grid(), &s, 0.1),
            Err(Error::WindowGridMisaligned { .. })
        ));
        let narrow = GeneratorSchedule::explicit(0.5, 0.0, 2, vec![WindowGenerator::Identity]).unwrap();
        assert!(WindowMap::new(&grid(), &narrow).is_err());
    }

    #[test]
    fn zero_generators_give_free_engine_unitary() {
        let h_e = HermitianOp::pauli_z().scaled(0.3);
        let s = GeneratorSchedule::explicit(4.0, 0.0, 2, vec![WindowGenerator::Live(HermitianOp::zero(2)); 4]).unwrap();
        let m = WindowMap::new(&grid(), &s).unwrap();
        let p = build_interaction_profile(&s, &m, &h_e, 0.1).unwrap();
        let free = h_e.propagator(0.1);
        for j in 0..16 {
            assert!(max_abs(&(p.unitary_at(j) - &free)) < 1e-14);
        }
    }

    #[test]
    fn live_sigma_x_window_half_turn() {
        // dt / W = pi with v = sigma_x gives -1
        let w = 4.0;
        let s = GeneratorSchedule::explicit(w, 0.0, 2, vec![WindowGenerator::Live(HermitianOp::pauli_x())]).unwrap();
        let m = WindowMap::new(&grid(), &s).unwrap();
        let p = build_interaction_profile(&s, &m, &HermitianOp::zero(2), PI * w).unwrap();
        assert!(max_abs(&(p.unitary_at(0) + CMatrix::identity(2, 2))) < 1e-13);
    }

    #[test]
    fn dead_windows_carry_scalar_phase() {
        let s = GeneratorSchedule::alternating(4.0, 0.0, vec![HermitianOp::pauli_x(), HermitianOp::pauli_z()]).unwrap();
        assert_eq!(s.pattern(), SchedulePattern::Alternating);
        let m = WindowMap::new(&grid(), &s).unwrap();
        let dt = 0.01;
        let p = build_interaction_profile(&s, &m, &HermitianOp::zero(2), dt).unwrap();
        let phase = Complex64::from_polar(1.0, -dt / 4.0);
        let expected = CMatrix::identity(2, 2) * phase;
        assert_eq!(p.unitary_at(5), expected);
        assert_eq!(p.unitary_at(13), expected);
    }
}
