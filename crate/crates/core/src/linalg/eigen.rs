//! Eigenvalues of small dense complex matrices.
//!
//! Householder reduction to upper Hessenberg form followed by an explicitly
//! shifted QR iteration with Wilkinson shifts and deflation. Only the
//! spectrum is computed; no Schur vectors are accumulated.

use num_complex::Complex64;

use super::{cdot, CMat};
use crate::error::{Error, Result};

pub fn eigenvalues(a: &CMat) -> Result<Vec<Complex64>> {
    assert_eq!(a.rows(), a.cols(), "eigenvalues need a square matrix");
    let n = a.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![a.at(0, 0)]);
    }

    let mut h = a.clone();
    hessenberg(&mut h);

    let mut eigs = vec![Complex64::new(0.0, 0.0); n];
    let mut hi = n - 1;
    let mut stalled = 0usize;
    let mut total_iter = 0usize;
    let max_iter = 50 * n * n + 100;

    loop {
        // Deflate negligible subdiagonal entries.
        let mut lo = hi;
        while lo > 0 {
            let sub = h.at(lo, lo - 1).norm();
            let local = h.at(lo - 1, lo - 1).norm() + h.at(lo, lo).norm();
            if sub <= f64::EPSILON * local.max(f64::MIN_POSITIVE) {
                h.set(lo, lo - 1, Complex64::new(0.0, 0.0));
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            eigs[hi] = h.at(hi, hi);
            if hi == 0 {
                break;
            }
            hi -= 1;
            stalled = 0;
            continue;
        }

        total_iter += 1;
        stalled += 1;
        if total_iter > max_iter {
            return Err(Error::EigenNoConvergence {
                iterations: total_iter,
            });
        }

        let shift = if stalled % 12 == 0 {
            // Exceptional shift to break symmetric stalls.
            h.at(hi, hi) + Complex64::new(0.75 * h.at(hi, hi - 1).norm(), 0.0)
        } else {
            wilkinson_shift(&h, hi)
        };

        qr_step(&mut h, lo, hi, shift);
    }

    Ok(eigs)
}

/// In-place Householder reduction to upper Hessenberg form.
fn hessenberg(h: &mut CMat) {
    let n = h.rows();
    for k in 0..n.saturating_sub(2) {
        let mut v: Vec<Complex64> = (k + 1..n).map(|i| h.at(i, k)).collect();
        let norm_x: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm_x == 0.0 {
            continue;
        }
        let phase = if v[0].norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            v[0] / v[0].norm()
        };
        let alpha = -phase * norm_x;
        v[0] -= alpha;
        let vnorm_sq: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm_sq == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm_sq;

        // Left: rows k+1..n of columns k..n.
        for j in k..n {
            let col: Vec<Complex64> = (k + 1..n).map(|i| h.at(i, j)).collect();
            let w = cdot(&v, &col) * beta;
            for (off, i) in (k + 1..n).enumerate() {
                h.set(i, j, col[off] - w * v[off]);
            }
        }
        // Right: columns k+1..n of all rows.
        for i in 0..n {
            let row: Vec<Complex64> = (k + 1..n).map(|j| h.at(i, j)).collect();
            let w: Complex64 = row
                .iter()
                .zip(&v)
                .map(|(r, vv)| r * vv)
                .sum::<Complex64>()
                * beta;
            for (off, j) in (k + 1..n).enumerate() {
                h.set(i, j, row[off] - w * v[off].conj());
            }
        }
        // Zero out the annihilated entries explicitly.
        h.set(k + 1, k, alpha);
        for i in k + 2..n {
            h.set(i, k, Complex64::new(0.0, 0.0));
        }
    }
}

/// Eigenvalue of the trailing 2x2 block closest to the corner entry.
fn wilkinson_shift(h: &CMat, hi: usize) -> Complex64 {
    let a = h.at(hi - 1, hi - 1);
    let b = h.at(hi - 1, hi);
    let c = h.at(hi, hi - 1);
    let d = h.at(hi, hi);
    let tr_half = (a + d) * 0.5;
    let disc = ((a - d) * (a - d) * 0.25 + b * c).sqrt();
    let l1 = tr_half + disc;
    let l2 = tr_half - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// One explicit shifted QR step on the active block `lo..=hi`:
/// `H - mu I = Q R`, then `H <- R Q + mu I`, via Givens rotations.
fn qr_step(h: &mut CMat, lo: usize, hi: usize, shift: Complex64) {
    for i in lo..=hi {
        let v = h.at(i, i) - shift;
        h.set(i, i, v);
    }

    let mut rotations: Vec<(f64, Complex64)> = Vec::with_capacity(hi - lo);
    for i in lo..hi {
        let f = h.at(i, i);
        let g = h.at(i + 1, i);
        let (c, s) = givens(f, g);
        rotations.push((c, s));
        // Apply from the left to rows i, i+1.
        for j in i..=hi {
            let x = h.at(i, j);
            let y = h.at(i + 1, j);
            h.set(i, j, c * x + s * y);
            h.set(i + 1, j, -s.conj() * x + c * y);
        }
    }
    for (idx, (c, s)) in rotations.iter().enumerate() {
        let i = lo + idx;
        // Apply Q^H from the right to columns i, i+1.
        for r in lo..=(i + 1).min(hi) {
            let x = h.at(r, i);
            let y = h.at(r, i + 1);
            h.set(r, i, x * c + y * s.conj());
            h.set(r, i + 1, -x * s + y * c);
        }
    }

    for i in lo..=hi {
        let v = h.at(i, i) + shift;
        h.set(i, i, v);
    }
}

/// Complex Givens rotation [[c, s], [-conj(s), c]] with real c zeroing the
/// second component of (f, g).
fn givens(f: Complex64, g: Complex64) -> (f64, Complex64) {
    if g.norm() == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if f.norm() == 0.0 {
        return (0.0, g.conj() / g.norm());
    }
    let d = (f.norm_sqr() + g.norm_sqr()).sqrt();
    let c = f.norm() / d;
    let s = (f / f.norm()) * g.conj() / d;
    (c, s)
}
