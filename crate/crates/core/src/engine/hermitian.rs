use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

const HERMITIAN_TOL: f64 = 1e-12;

pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Largest entry of `|A - A^dagger|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Hermitian operator on the engine space.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOp {
    matrix: CMatrix,
}

impl HermitianOp {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NotHermitian(f64::NAN));
        }
        let defect = hermiticity_defect(&matrix);
        if defect > HERMITIAN_TOL * max_abs(&matrix).max(1.0) {
            return Err(Error::NotHermitian(defect));
        }
        Ok(Self { matrix })
    }

    /// Row-major `[re, im]` entries.
    pub fn from_pairs(dim: usize, entries: &[[f64; 2]]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        Self::new(CMatrix::from_row_iterator(
            dim,
            dim,
            entries.iter().map(|p| c(p[0], p[1])),
        ))
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            matrix: CMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim),
        }
    }

    pub fn pauli_x() -> Self {
        Self {
            matrix: CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
        }
    }

    pub fn pauli_y() -> Self {
        Self {
            matrix: CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]),
        }
    }

    pub fn pauli_z() -> Self {
        Self {
            matrix: CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]),
        }
    }

    /// `diag(0, 1, ..., dim - 1)`.
    pub fn number(dim: usize) -> Self {
        Self {
            matrix: CMatrix::from_fn(dim, dim, |i, j| if i == j { c(i as f64, 0.0) } else { c(0., 0.) }),
        }
    }

    /// Qubit detuning term `sigma_z / 2 (x) 1` on a qubit (x) mode space of even dimension.
    pub fn jaynes_cummings_detuning(dim: usize) -> Result<Self> {
        if dim < 2 || !dim.is_multiple_of(2) {
            return Err(Error::DimensionMismatch {
                expected: 2 * (dim / 2).max(1),
                got: dim,
            });
        }
        let half = dim / 2;
        Ok(Self {
            matrix: CMatrix::from_fn(dim, dim, |i, j| match (i == j, i < half) {
                (true, true) => c(0.5, 0.0),
                (true, false) => c(-0.5, 0.0),
                _ => c(0.0, 0.0),
            }),
        })
    }

    pub fn preset(name: &str, dim: usize) -> Result<Self> {
        let need_qubit = |op: HermitianOp| {
            if dim == 2 {
                Ok(op)
            } else {
                Err(Error::DimensionMismatch { expected: 2, got: dim })
            }
        };
        match name {
            "pauli_x" => need_qubit(Self::pauli_x()),
            "pauli_y" => need_qubit(Self::pauli_y()),
            "pauli_z" => need_qubit(Self::pauli_z()),
            "number" => Ok(Self::number(dim)),
            "jaynes_cummings_detuning" => Self::jaynes_cummings_detuning(dim),
            "identity" => Ok(Self::identity(dim)),
            "zero" => Ok(Self::zero(dim)),
            other => Err(Error::Config {
                path: "preset".into(),
                message: format!("unknown operator preset `{other}`"),
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            matrix: self.matrix.map(|z| z * s),
        }
    }

    pub fn add(&self, other: &HermitianOp) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(Self {
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.iter().all(|z| *z == c(0.0, 0.0))
    }

    /// `exp(-i H theta)`.
    pub fn propagator(&self, theta: f64) -> CMatrix {
        unitary_exp(&self.matrix, theta)
    }
}

fn unitary_exp(h: &CMatrix, theta: f64) -> CMatrix {
    let n = h.nrows();
    if theta == 0.0 || h.iter().all(|z| *z == c(0.0, 0.0)) {
        return CMatrix::identity(n, n);
    }
    let eig = SymmetricEigen::new(h.clone());
    let v = &eig.eigenvectors;
    let phases = CMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex64::from_polar(1.0, -l * theta)));
    v * phases * v.adjoint()
}

/// `exp(-i H theta)` through the Hermitian eigendecomposition.
pub fn hermitian_propagator(h: &CMatrix, theta: f64) -> Result<CMatrix> {
    HermitianOp::new(h.clone())?;
    Ok(unitary_exp(h, theta))
}

/// `max |U^dagger U - 1|`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - CMatrix::identity(n, n)))
}
