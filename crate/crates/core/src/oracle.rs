//! Dense-matrix reference on small instances: the full joint Hamiltonian, its
//! exact propagator and the time operators as explicit matrices.

use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::clock::{DispersionRelation, SpatialGrid};
use crate::engine::{CMatrix, GeneratorSchedule, HermitianOp, WindowGenerator};
use crate::error::{Error, Result};
use crate::propagator::{JointState, WindowMap};

/// Largest joint dimension `d_E * N` accepted by the dense routines.
pub const MAX_DENSE_DIM: usize = 4096;

pub type CVector = DVector<Complex64>;

fn guard(dim: usize) -> Result<()> {
    if dim > MAX_DENSE_DIM {
        return Err(Error::TooLarge {
            dim,
            limit: MAX_DENSE_DIM,
        });
    }
    Ok(())
}

/// `F^dagger diag(f(k_m)) F` with `F` the unitary DFT on the grid.
pub fn momentum_diagonal(grid: &SpatialGrid, f: impl Fn(f64) -> f64) -> CMatrix {
    let n = grid.n_points();
    let dx = grid.spacing();
    let weights: Vec<(f64, f64)> = grid.momenta().into_iter().map(|k| (k, f(k) / n as f64)).collect();
    // entries depend only on i - j
    let kernel: Vec<Complex64> = (0..2 * n - 1)
        .map(|s| {
            let delta = (s as f64 - (n - 1) as f64) * dx;
            weights.iter().map(|(k, w)| Complex64::from_polar(*w, k * delta)).sum()
        })
        .collect();
    CMatrix::from_fn(n, n, |i, j| kernel[i + n - 1 - j])
}

/// Joint Hamiltonian `H_E (x) 1 + 1 (x) H_C + sum_i g_i (x) P_i / W`, stored
/// block by block on the engine-major index `e * N + j`.
#[derive(Debug, Clone)]
pub struct DenseJointHamiltonian {
    pub engine: CMatrix,
    pub clock: CMatrix,
    pub interaction: CMatrix,
    /// Clock-factor `H_C` (`N x N`).
    pub clock_factor: CMatrix,
    /// Window index of each grid point.
    pub window_of: Vec<i64>,
    pub dim_engine: usize,
    pub n_points: usize,
}

impl DenseJointHamiltonian {
    pub fn dim(&self) -> usize {
        self.dim_engine * self.n_points
    }

    pub fn total(&self) -> CMatrix {
        &self.engine + &self.clock + &self.interaction
    }

    /// `1 (x) P_i` for window `i`.
    pub fn window_projector(&self, window: i64) -> CMatrix {
        let n = self.n_points;
        CMatrix::from_fn(self.dim(), self.dim(), |r, c| {
            if r == c && self.window_of[r % n] == window {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }
}

pub fn build_dense(
    grid: &SpatialGrid,
    disp: &DispersionRelation,
    h_e: &HermitianOp,
    schedule: &GeneratorSchedule,
) -> Result<DenseJointHamiltonian> {
    let d = h_e.dim();
    let n = grid.n_points();
    guard(d * n)?;
    if schedule.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: schedule.dim(),
        });
    }
    let map = WindowMap::new(grid, schedule)?;
    let hc = momentum_diagonal(grid, |k| disp.omega(k));
    let dim = d * n;
    let zero = Complex64::new(0.0, 0.0);
    let engine = CMatrix::from_fn(dim, dim, |r, c| {
        if r % n == c % n {
            h_e.matrix()[(r / n, c / n)]
        } else {
            zero
        }
    });
    let clock = CMatrix::from_fn(dim, dim, |r, c| if r / n == c / n { hc[(r % n, c % n)] } else { zero });
    let w = schedule.width();
    let identity = CMatrix::identity(d, d);
    let local: Vec<Option<CMatrix>> = map
        .slots()
        .iter()
        .map(|slot| {
            slot.map(|s| match &schedule.windows()[s] {
                WindowGenerator::Identity => identity.clone() / Complex64::from(w),
                WindowGenerator::Live(v) => v.matrix() / Complex64::from(w),
            })
        })
        .collect();
    let interaction = CMatrix::from_fn(dim, dim, |r, c| {
        if r % n != c % n {
            return zero;
        }
        local[r % n].as_ref().map_or(zero, |g| g[(r / n, c / n)])
    });
    Ok(DenseJointHamiltonian {
        engine,
        clock,
        interaction,
        clock_factor: hc,
        window_of: map.indices().to_vec(),
        dim_engine: d,
        n_points: n,
    })
}

/// Unit-norm dense vector `Psi_ej sqrt(dx)`.
pub fn to_dense(state: &JointState) -> CVector {
    let s = state.grid().spacing().sqrt();
    CVector::from_iterator(state.amplitudes().len(), state.amplitudes().iter().map(|a| a * s))
}

pub fn from_dense(grid: SpatialGrid, dim: usize, v: &CVector) -> Result<JointState> {
    let s = 1.0 / grid.spacing().sqrt();
    JointState::from_raw(grid, dim, v.iter().map(|a| a * s).collect())
}

/// Eigendecomposition of a Hermitian matrix, reusable for many times.
#[derive(Debug, Clone)]
pub struct ExactPropagator {
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
}

impl ExactPropagator {
    pub fn new(h: &CMatrix) -> Result<Self> {
        guard(h.nrows())?;
        HermitianOp::new(h.clone())?;
        let eig = SymmetricEigen::new(h.clone());
        Ok(Self {
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            eigenvectors: eig.eigenvectors,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `exp(-i H t) v`.
    pub fn apply(&self, v: &CVector, t: f64) -> CVector {
        let mut coeffs = self.eigenvectors.ad_mul(v);
        for (c, l) in coeffs.iter_mut().zip(&self.eigenvalues) {
            *c *= Complex64::from_polar(1.0, -l * t);
        }
        &self.eigenvectors * coeffs
    }

    /// `exp(-i H t)` as a matrix.
    pub fn matrix(&self, t: f64) -> CMatrix {
        let v = &self.eigenvectors;
        let phases = CVector::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues.iter().map(|l| Complex64::from_polar(1.0, -l * t)),
        );
        v * CMatrix::from_diagonal(&phases) * v.adjoint()
    }
}

/// `exp(-i H_tot t)` applied to a joint state.
pub fn exact_evolve(h: &DenseJointHamiltonian, state: &JointState, t: f64) -> Result<JointState> {
    if state.dim() != h.dim_engine || state.grid().n_points() != h.n_points {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            got: state.amplitudes().len(),
        });
    }
    if t == 0.0 {
        return Ok(state.clone());
    }
    let prop = ExactPropagator::new(&h.total())?;
    from_dense(*state.grid(), state.dim(), &prop.apply(&to_dense(state), t))
}

/// `<v| A |v>` for a unit vector.
pub fn expectation(a: &CMatrix, v: &CVector) -> Complex64 {
    v.dotc(&(a * v))
}

/// Clock-factor operators `T = diag(x) / c`, `Lambda = F^dagger diag(omega'/c) F`
/// and `H_C = F^dagger diag(omega) F`.
#[derive(Debug, Clone)]
pub struct DenseTimeOperators {
    pub time: CMatrix,
    pub lambda: CMatrix,
    pub hc: CMatrix,
}

pub fn dense_time_operators(grid: &SpatialGrid, disp: &DispersionRelation, c: f64) -> Result<DenseTimeOperators> {
    guard(grid.n_points())?;
    let x = DVector::from_iterator(
        grid.n_points(),
        grid.positions().into_iter().map(|x| Complex64::new(x / c, 0.0)),
    );
    Ok(DenseTimeOperators {
        time: CMatrix::from_diagonal(&x),
        lambda: momentum_diagonal(grid, |k| disp.derivative(k) / c),
        hc: momentum_diagonal(grid, |k| disp.omega(k)),
    })
}

impl DenseTimeOperators {
    /// `|<[T, H_C]> - i <Lambda>|` for a unit clock vector.
    pub fn commutator_residual(&self, psi: &CVector) -> f64 {
        let comm = &self.time * &self.hc - &self.hc * &self.time;
        (expectation(&comm, psi) - Complex64::i() * expectation(&self.lambda, psi)).norm()
    }

    /// `|<T_H(t)> - <T> - t <Lambda>|` with `T_H(t) = exp(i H_C t) T exp(-i H_C t)`.
    pub fn heisenberg_residual(&self, psi: &CVector, t: f64) -> Result<f64> {
        let prop = ExactPropagator::new(&self.hc)?;
        let moved = prop.apply(psi, t);
        let lhs = expectation(&self.time, &moved).re;
        let rhs = expectation(&self.time, psi).re + t * expectation(&self.lambda, psi).re;
        Ok((lhs - rhs).abs())
    }

    /// `max |[Lambda, H_C]|`.
    pub fn lambda_commutator_defect(&self) -> f64 {
        let comm = &self.lambda * &self.hc - &self.hc * &self.lambda;
        comm.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Unit clock vector `psi_j sqrt(dx)`.
pub fn clock_vector(state: &crate::clock::ClockAmplitudes) -> CVector {
    let s = state.grid().spacing().sqrt();
    CVector::from_iterator(state.amplitudes().len(), state.amplitudes().iter().map(|a| a * s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::{free_step, ClockAmplitudes, ClockPulse};
    use crate::engine::{hermiticity_defect, max_abs};

    fn small_grid() -> SpatialGrid {
        SpatialGrid::new(16, 16.0, 0.0).unwrap()
    }

    fn sorted(mut v: Vec<f64>) -> Vec<f64> {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    #[test]
    fn decoupled_interaction_is_zero() {
        let s = GeneratorSchedule::decoupled(2, 4.0);
        let h = build_dense(&small_grid(), &DispersionRelation::linear(1.0), &HermitianOp::pauli_x(), &s).unwrap();
        assert!(h.interaction.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
        assert!(hermiticity_defect(&h.total()) < 1e-12);
    }

    #[test]
    fn linear_clock_block_spectrum_is_doubled_momenta() {
        let grid = small_grid();
        let s = GeneratorSchedule::decoupled(2, 4.0);
        let h = build_dense(&grid, &DispersionRelation::linear(1.0), &HermitianOp::zero(2), &s).unwrap();
        let got = sorted(ExactPropagator::new(&h.clock).unwrap().eigenvalues().to_vec());
        let want = sorted(grid.momenta().into_iter().flat_map(|k| [k, k]).collect());
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn half_grid_sigma_z_window_spectrum() {
        let grid = small_grid();
        let w = 8.0;
        let s = GeneratorSchedule::explicit(w, 0.0, 2, vec![WindowGenerator::Live(HermitianOp::pauli_z())]).unwrap();
        let h = build_dense(&grid, &DispersionRelation::linear(1.0), &HermitianOp::zero(2), &s).unwrap();
        let eig = ExactPropagator::new(&h.interaction).unwrap();
        let count = |target: f64| eig.eigenvalues().iter().filter(|l| (*l - target).abs() < 1e-12).count();
        assert_eq!(count(1.0 / w), 8);
        assert_eq!(count(-1.0 / w), 8);
        assert_eq!(count(0.0), 16);
        for i in -1..2 {
            let p = h.window_projector(i);
            let comm = &h.interaction * &p - &p * &h.interaction;
            assert!(max_abs(&comm) < 1e-15);
        }
    }

    #[test]
    fn exact_evolution_of_decoupled_system_factorizes() {
        let grid = SpatialGrid::centered(64, 32.0).unwrap();
        let disp = DispersionRelation::massive(1.0, 3.0).unwrap();
        let s = GeneratorSchedule::decoupled(2, 4.0);
        let h_e = HermitianOp::pauli_x().scaled(0.7);
        let h = build_dense(&grid, &disp, &h_e, &s).unwrap();
        let pulse = ClockPulse::new(-3.0, 1.0, 1.0);
        let clock = ClockAmplitudes::from_fn(grid, |x| pulse.amplitude(x)).unwrap();
        let state = JointState::basis_product(2, 0, &clock).unwrap();
        assert_eq!(exact_evolve(&h, &state, 0.0).unwrap(), state);
        let t = 2.5;
        let out = exact_evolve(&h, &state, t).unwrap();
        let moved = free_step(&clock, &disp, t);
        let u = h_e.propagator(t);
        let expected = JointState::product(&[u[(0, 0)], u[(1, 0)]], &moved).unwrap();
        assert!(out.max_deviation(&expected) < 1e-10);
        assert!((out.norm() - 1.0).abs() < 1e-11);
    }

    #[test]
    fn time_operator_identities() {
        let grid = SpatialGrid::centered(64, 32.0).unwrap();
        let ops = dense_time_operators(&grid, &DispersionRelation::linear(1.0), 1.0).unwrap();
        assert!(max_abs(&(&ops.lambda - CMatrix::identity(64, 64))) < 1e-12);
        let massive = dense_time_operators(&grid, &DispersionRelation::massive(1.0, 2.0).unwrap(), 1.0).unwrap();
        assert!(massive.lambda_commutator_defect() < 1e-12);
        let pulse = ClockPulse::new(0.5, 0.9, 2.0);
        let psi = clock_vector(&ClockAmplitudes::from_fn(grid, |x| pulse.amplitude(x)).unwrap());
        assert!(massive.commutator_residual(&psi) < 1e-6);
        assert!(massive.heisenberg_residual(&psi, 1.5).unwrap() < 1e-6);
    }

    #[test]
    fn guard_rejects_large_instances() {
        let grid = SpatialGrid::centered(4096, 100.0).unwrap();
        let s = GeneratorSchedule::decoupled(2, 4.0);
        let r = build_dense(&grid, &DispersionRelation::linear(1.0), &HermitianOp::zero(2), &s);
        assert!(matches!(r, Err(Error::TooLarge { .. })));
    }

    #[test]
    fn dense_round_trip() {
        let grid = small_grid();
        let clock = ClockAmplitudes::from_fn(grid, |x| Complex64::new((-(x - 8.0).powi(2)).exp(), 0.0)).unwrap();
        let s = JointState::basis_product(2, 1, &clock).unwrap();
        let v = to_dense(&s);
        assert!((v.norm() - 1.0).abs() < 1e-14);
        assert!(from_dense(grid, 2, &v).unwrap().max_deviation(&s) < 1e-15);
    }
}
