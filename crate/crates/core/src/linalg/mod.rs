//! Dense symmetric linear algebra.
//!
//! [`SymMatrix`] is the carrier for every square matrix in the crate (the
//! ground truth, observations, SDP iterates and dual certificates). Rectangular
//! sub-blocks such as the off-support block are extracted as [`Mat`] views.

mod eigen;
mod norms;
mod spectraplex;

pub use eigen::{sym_eig, sym_eig_with, EigenDecomposition, DEFAULT_EIG_TOL};
pub use norms::{norms, NormReport};
pub use spectraplex::{project_simplex, project_spectraplex, soft_threshold};
pub(crate) use spectraplex::shrink as shrink_scalar;

use crate::error::{invalid, Result};

/// Dense symmetric real matrix.
///
/// Entries are stored row-major and every write goes through both `(i, j)` and
/// `(j, i)`, so the two halves are bit-identical by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Result<Self> {
        if dim == 0 {
            return invalid("matrix dimension must be at least 1");
        }
        Ok(Self {
            dim,
            data: vec![0.0; dim * dim],
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        Ok(m)
    }

    /// Builds a matrix from `f(i, j)` evaluated on the upper triangle `i <= j`.
    pub fn from_upper_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                if !v.is_finite() {
                    return invalid(format!("non-finite entry at ({i}, {j})"));
                }
                m.data[i * dim + j] = v;
                m.data[j * dim + i] = v;
            }
        }
        Ok(m)
    }

    /// Builds from a full row-major buffer, rejecting asymmetric or non-finite input.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return invalid(format!(
                "expected {dim}x{dim} = {} entries, got {}",
                dim * dim,
                data.len()
            ));
        }
        for i in 0..dim {
            for j in 0..dim {
                let v = data[i * dim + j];
                if !v.is_finite() {
                    return invalid(format!("non-finite entry at ({i}, {j})"));
                }
                if v.to_bits() != data[j * dim + i].to_bits() {
                    return invalid(format!("matrix is not symmetric at ({i}, {j})"));
                }
            }
        }
        Ok(Self { dim, data })
    }

    /// Wraps a buffer the caller guarantees is symmetric (e.g. produced by an
    /// entrywise map of symmetric inputs).
    pub(crate) fn from_row_major_unchecked(dim: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), dim * dim);
        Self { dim, data }
    }

    /// Builds from rows, symmetrizing nothing: the rows must already be symmetric.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return invalid("matrix rows must all have length equal to the row count");
        }
        Self::from_row_major(dim, rows.concat())
    }

    /// `sum_k w_k v_k v_k^T` for the given weights and column vectors.
    pub fn from_outer_sum(dim: usize, terms: &[(f64, &[f64])]) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for &(w, v) in terms {
            if v.len() != dim {
                return invalid("outer-product vector has wrong length");
            }
            m.add_outer(w, v);
        }
        Ok(m)
    }

    /// `self += w * v v^T`.
    pub fn add_outer(&mut self, w: f64, v: &[f64]) {
        let d = self.dim;
        for i in 0..d {
            let wi = w * v[i];
            if wi == 0.0 {
                continue;
            }
            for j in i..d {
                let x = self.data[i * d + j] + wi * v[j];
                self.data[i * d + j] = x;
                self.data[j * d + i] = x;
            }
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Writes both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Frobenius inner product.
    pub fn inner(&self, other: &SymMatrix) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// `||self - other||_F`.
    pub fn frobenius_dist(&self, other: &SymMatrix) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn l11(&self) -> f64 {
        self.data.iter().map(|a| a.abs()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    pub fn scaled(&self, c: f64) -> SymMatrix {
        self.map(|a| a * c)
    }

    /// Entrywise map. `f` must be an odd-or-even-agnostic scalar function; the
    /// result stays symmetric because both halves see identical inputs.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().map(|&a| f(a)).collect(),
        }
    }

    /// `a * self + b * other`.
    pub fn lin_comb(&self, a: f64, other: &SymMatrix, b: f64) -> SymMatrix {
        debug_assert_eq!(self.dim, other.dim);
        SymMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        }
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        self.lin_comb(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        self.lin_comb(1.0, other, -1.0)
    }

    pub fn mat_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Quadratic form `v^T A v`.
    pub fn quad(&self, v: &[f64]) -> f64 {
        self.mat_vec(v).iter().zip(v).map(|(a, b)| a * b).sum()
    }

    /// Principal sub-matrix on the index set `idx` (in the given order).
    pub fn principal(&self, idx: &[usize]) -> Result<SymMatrix> {
        if idx.is_empty() {
            return invalid("empty principal sub-matrix");
        }
        let n = idx.len();
        let mut data = Vec::with_capacity(n * n);
        for &i in idx {
            for &j in idx {
                data.push(self.get(i, j));
            }
        }
        Ok(SymMatrix { dim: n, data })
    }

    /// Rectangular block with the given rows and columns.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> Mat {
        let mut data = Vec::with_capacity(rows.len() * cols.len());
        for &i in rows {
            for &j in cols {
                data.push(self.get(i, j));
            }
        }
        Mat {
            rows: rows.len(),
            cols: cols.len(),
            data,
        }
    }

    /// Applies the permutation `perm` to rows and columns: `out(i, j) = self(perm[i], perm[j])`.
    pub fn permuted(&self, perm: &[usize]) -> SymMatrix {
        let d = self.dim;
        let mut data = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                data[i * d + j] = self.get(perm[i], perm[j]);
            }
        }
        SymMatrix { dim: d, data }
    }

    pub fn to_mat(&self) -> Mat {
        Mat {
            rows: self.dim,
            cols: self.dim,
            data: self.data.clone(),
        }
    }
}

/// Dense rectangular row-major matrix, used for sub-block views.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return invalid(format!(
                "expected {rows}x{cols} = {} entries, got {}",
                rows * cols,
                data.len()
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return invalid("non-finite entry");
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn transpose(&self) -> Mat {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j));
            }
        }
        Mat {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub fn mat_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Gram matrix `A^T A`.
    pub fn gram(&self) -> SymMatrix {
        let n = self.cols;
        let mut data = vec![0.0; n * n];
        for a in 0..n {
            for b in a..n {
                let s: f64 = (0..self.rows).map(|k| self.get(k, a) * self.get(k, b)).sum();
                data[a * n + b] = s;
                data[b * n + a] = s;
            }
        }
        SymMatrix { dim: n, data }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|a| a * a).sum::<f64>().sqrt()
    }
}

/// Euclidean norm of a vector.
pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
