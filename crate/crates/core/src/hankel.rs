//! Implicit Hankel matrix with FFT-accelerated products.
//!
//! The L x M Hankel matrix over a length-N signal (entry `(i, j)` equal to
//! `signal[i + j]`, `L + M = N + 1`) is never materialized. Both `H x` and
//! `H^H y` reduce to one convolution with the signal, computed by embedding
//! the signal in a circulant of power-of-two size >= N: one forward and one
//! inverse FFT per product, `O((L+M) log2(L+M))` instead of `O(L M)`.
//!
//! The transform of the signal is computed once at construction; each
//! product call uses its own scratch buffers, so a shared operator supports
//! concurrent products without locking.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub struct HankelOperator {
    data: Vec<Complex64>,
    rows: usize,
    cols: usize,
    fft_len: usize,
    symbol_fft: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for HankelOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HankelOperator")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .field("signal_len", &self.data.len())
            .field("fft_len", &self.fft_len)
            .finish()
    }
}

impl HankelOperator {
    /// Builds the operator over a complex signal. `rows` defaults to
    /// `floor((N + 1) / 2)`; when given it must satisfy `2 <= rows <= N - 1`.
    pub fn new(signal: &[Complex64], rows: Option<usize>) -> Result<Self> {
        let n = signal.len();
        if n < 3 {
            return Err(Error::InvalidShape(format!(
                "signal must have at least 3 samples, got {n}"
            )));
        }
        let rows = rows.unwrap_or((n + 1) / 2);
        if rows < 2 || rows > n - 1 {
            return Err(Error::InvalidShape(format!(
                "row count {rows} outside admissible range 2..={}",
                n - 1
            )));
        }
        let cols = n + 1 - rows;

        let fft_len = n.next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(fft_len);
        let inverse = planner.plan_fft_inverse(fft_len);

        let mut symbol = vec![Complex64::new(0.0, 0.0); fft_len];
        symbol[..n].copy_from_slice(signal);
        let mut scratch = vec![Complex64::new(0.0, 0.0); forward.get_inplace_scratch_len()];
        forward.process_with_scratch(&mut symbol, &mut scratch);

        Ok(Self {
            data: signal.to_vec(),
            rows,
            cols,
            fft_len,
            symbol_fft: symbol,
            forward,
            inverse,
        })
    }

    /// Builds the operator over a real signal promoted to complex.
    pub fn from_real(signal: &[f64], rows: Option<usize>) -> Result<Self> {
        let promoted: Vec<Complex64> = signal.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Self::new(&promoted, rows)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn signal(&self) -> &[Complex64] {
        &self.data
    }

    /// Matrix entry (i, j) = signal[i + j].
    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i + j]
    }

    /// `y = H x` via the circulant embedding.
    pub fn matvec(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: x.len(),
            });
        }
        let conv = self.convolve_reversed(x);
        Ok(conv[self.cols - 1..self.cols - 1 + self.rows].to_vec())
    }

    /// `z = H^H y` via the same embedding with conjugated input and output.
    pub fn rmatvec(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        if y.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                got: y.len(),
            });
        }
        let conj: Vec<Complex64> = y.iter().map(|z| z.conj()).collect();
        let conv = self.convolve_reversed(&conj);
        Ok(conv[self.rows - 1..self.rows - 1 + self.cols]
            .iter()
            .map(|z| z.conj())
            .collect())
    }

    /// Cyclic convolution of the stored signal with the reversal of `v`,
    /// which is zero-pad exact for the index window the products read.
    fn convolve_reversed(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.fft_len];
        for (j, &value) in v.iter().enumerate() {
            buf[v.len() - 1 - j] = value;
        }
        let mut scratch =
            vec![Complex64::new(0.0, 0.0); self.forward.get_inplace_scratch_len()];
        self.forward.process_with_scratch(&mut buf, &mut scratch);
        for (b, s) in buf.iter_mut().zip(&self.symbol_fft) {
            *b *= s;
        }
        let mut scratch =
            vec![Complex64::new(0.0, 0.0); self.inverse.get_inplace_scratch_len()];
        self.inverse.process_with_scratch(&mut buf, &mut scratch);
        let scale = 1.0 / self.fft_len as f64;
        for b in &mut buf {
            *b *= scale;
        }
        buf
    }

    /// Reference `O(L M)` product, kept as the independent check of the FFT
    /// path (tests, benches and the acceptance suite compare against it).
    pub fn matvec_naive(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: x.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, &xj) in x.iter().enumerate() {
                    acc += self.data[i + j] * xj;
                }
                acc
            })
            .collect())
    }

    /// Reference `O(L M)` adjoint product.
    pub fn rmatvec_naive(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        if y.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                got: y.len(),
            });
        }
        Ok((0..self.cols)
            .map(|j| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (i, &yi) in y.iter().enumerate() {
                    acc += self.data[i + j].conj() * yi;
                }
                acc
            })
            .collect())
    }

    /// Dense row-major materialization, for small-problem oracles.
    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.data[i + j]).collect())
            .collect()
    }
}
