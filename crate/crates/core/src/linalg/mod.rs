//! Small dense linear algebra kernels: column-major complex matrices,
//! Householder least squares, one-sided Jacobi SVD, symmetric tridiagonal
//! eigenvalues and a Hessenberg-QR eigenvalue solver.
//!
//! Everything here is sized for the filter pipeline (dimensions up to a few
//! hundred); the routines favour clarity and deterministic behaviour over
//! cache blocking.

mod eigen;
mod householder;
mod jacobi;
mod tridiag;

pub use eigen::eigenvalues;
pub use householder::{lstsq, LstsqOutcome};
pub use jacobi::jacobi_svd;
pub use tridiag::tridiag_eigenvalues;

use num_complex::Complex64;

/// Dense column-major complex matrix; `col(j)` is a contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_cols(cols: &[Vec<Complex64>]) -> Self {
        let rows = cols.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), rows);
            m.col_mut(j).copy_from_slice(c);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[j * self.rows + i] = v;
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [Complex64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// Mutable access to two distinct columns at once.
    pub fn two_cols_mut(&mut self, p: usize, q: usize) -> (&mut [Complex64], &mut [Complex64]) {
        assert!(p < q && q < self.cols);
        let (left, right) = self.data.split_at_mut(q * self.rows);
        (
            &mut left[p * self.rows..(p + 1) * self.rows],
            &mut right[..self.rows],
        )
    }

    /// Keeps the first `k` columns (contiguous prefix in column-major order).
    pub fn truncate_cols(&self, k: usize) -> Self {
        assert!(k <= self.cols);
        Self {
            rows: self.rows,
            cols: k,
            data: self.data[..k * self.rows].to_vec(),
        }
    }

    /// Copy of the matrix without row `row`.
    pub fn drop_row(&self, row: usize) -> Self {
        assert!(row < self.rows);
        let mut out = Self::zeros(self.rows - 1, self.cols);
        for j in 0..self.cols {
            let mut r = 0;
            for i in 0..self.rows {
                if i != row {
                    let v = self.at(i, j);
                    out.set(r, j, v);
                    r += 1;
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.set(j, i, self.at(i, j).conj());
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            for t in 0..self.cols {
                let w = other.at(t, j);
                if w.re == 0.0 && w.im == 0.0 {
                    continue;
                }
                let src = self.col(t).to_vec();
                let dst = out.col_mut(j);
                for i in 0..src.len() {
                    dst[i] += src[i] * w;
                }
            }
        }
        out
    }

    /// `A x` for a vector.
    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.cols);
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        for (j, &w) in x.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.col(j)) {
                *o += a * w;
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest absolute entry of `self^H self - I`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for p in 0..self.cols {
            for q in p..self.cols {
                let g = cdot(self.col(p), self.col(q));
                let target = if p == q { 1.0 } else { 0.0 };
                worst = worst.max((g - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }
}

/// Inner product `sum conj(x_i) y_i`.
#[inline]
pub fn cdot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    debug_assert_eq!(x.len(), y.len());
    let mut acc = Complex64::new(0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        acc += a.conj() * b;
    }
    acc
}

#[inline]
pub fn vec_norm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `y += alpha * x`.
#[inline]
pub fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    debug_assert_eq!(x.len(), y.len());
    for (a, b) in x.iter().zip(y.iter_mut()) {
        *b += alpha * a;
    }
}

#[inline]
pub fn scale(x: &mut [Complex64], factor: f64) {
    for v in x {
        *v *= factor;
    }
}
