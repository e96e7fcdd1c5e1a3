//! Symmetric positive definite matrices with a cached Cholesky factor.
//!
//! Covariance inverses are never materialized: quadratic and bilinear forms
//! are evaluated through triangular solves against the lower factor, which
//! keeps the conditioning of every downstream computation tied to the factor
//! rather than to an explicitly inverted matrix.

use crate::error::{Error, Result};

/// Relative symmetry tolerance applied before factorization.
const SYMMETRY_TOL: f64 = 1e-12;

/// Dense row-major matrix of `f64`, used for sample batches.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Allocates a zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from row-major data. `data.len()` must equal `rows * cols`.
    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Splits the underlying storage into consecutive mutable chunks of whole rows.
    pub(crate) fn row_chunks_mut(&mut self, rows_per_chunk: usize) -> Vec<&mut [f64]> {
        self.data.chunks_mut(rows_per_chunk * self.cols).collect()
    }
}

/// Symmetric positive definite matrix with its lower Cholesky factor.
///
/// `entries` holds the caller's matrix bit-for-bit; the factor is computed
/// from the symmetrized matrix `(m + m')/2` after a relative symmetry check.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    dim: usize,
    entries: Vec<f64>,
    chol: Vec<f64>,
}

impl SpdMatrix {
    /// Checks symmetry, symmetrizes, and computes the lower Cholesky factor.
    ///
    /// The symmetry check is relative to the largest absolute entry: the pair
    /// `(i, j)` fails if `|m[i][j] - m[j][i]|` exceeds `1e-12 * scale`.
    pub fn factorize(m: &[Vec<f64>]) -> Result<Self> {
        let dim = m.len();
        if dim == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        for row in m {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
        }
        let mut entries = Vec::with_capacity(dim * dim);
        let mut scale = 0.0_f64;
        for row in m {
            for &v in row {
                if !v.is_finite() {
                    return Err(Error::NonFiniteInput {
                        context: "matrix entry",
                    });
                }
                scale = scale.max(v.abs());
                entries.push(v);
            }
        }

        for i in 0..dim {
            for j in (i + 1)..dim {
                let deviation = (entries[i * dim + j] - entries[j * dim + i]).abs();
                if deviation > SYMMETRY_TOL * scale {
                    return Err(Error::NotSymmetric {
                        row: i,
                        col: j,
                        deviation,
                    });
                }
            }
        }

        // Factor the symmetrized matrix; `entries` stays exactly as given.
        let mut chol = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..=i {
                let sym = 0.5 * (entries[i * dim + j] + entries[j * dim + i]);
                let mut s = sym;
                for k in 0..j {
                    s -= chol[i * dim + k] * chol[j * dim + k];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::NotPositiveDefinite { index: i, pivot: s });
                    }
                    chol[i * dim + i] = s.sqrt();
                } else {
                    chol[i * dim + j] = s / chol[j * dim + j];
                }
            }
        }

        Ok(Self { dim, entries, chol })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entry `(i, j)` of the matrix exactly as passed to `factorize`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    /// Entry `(i, j)` of the lower Cholesky factor (zero above the diagonal).
    pub fn chol_entry(&self, i: usize, j: usize) -> f64 {
        self.chol[i * self.dim + j]
    }

    /// Log-determinant, computed as twice the log-sum of the factor diagonal.
    pub fn log_det(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            acc += self.chol[i * self.dim + i].ln();
        }
        2.0 * acc
    }

    /// Solves `L x = b` by forward substitution.
    pub(crate) fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut x = vec![0.0; n];
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.chol[i * n + k] * x[k];
            }
            x[i] = s / self.chol[i * n + i];
        }
        x
    }

    /// Multiplies the lower factor by a vector: `L v`.
    pub(crate) fn mul_lower(&self, v: &[f64], out: &mut [f64]) {
        let n = self.dim;
        for i in 0..n {
            let mut s = 0.0;
            for k in 0..=i {
                s += self.chol[i * n + k] * v[k];
            }
            out[i] = s;
        }
    }

    /// Quadratic form `v' m^{-1} v`, evaluated as the squared norm of `L^{-1} v`.
    pub fn quad_form(&self, v: &[f64]) -> Result<f64> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        let x = self.solve_lower(v);
        Ok(x.iter().map(|t| t * t).sum())
    }

    /// Bilinear form `u' m^{-1} v` via two triangular solves.
    pub fn bilinear_form(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        if u.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: u.len(),
            });
        }
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        let xu = self.solve_lower(u);
        let xv = self.solve_lower(v);
        Ok(xu.iter().zip(&xv).map(|(a, b)| a * b).sum())
    }
}
