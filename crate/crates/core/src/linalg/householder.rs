//! Complex least squares via Householder QR.

use num_complex::Complex64;

use super::{cdot, CMat};

/// Solution of `min ||A X - B||_F` together with a column-norm condition
/// estimate (ratio of the largest to the smallest |R_ii|).
#[derive(Debug, Clone)]
pub struct LstsqOutcome {
    pub solution: CMat,
    pub condition: f64,
    /// True when a pivot collapsed below roundoff and its direction was
    /// zeroed out instead of solved.
    pub rank_deflated: bool,
}

/// Householder-QR least squares for `A` (m x n, m >= n) against one or more
/// right-hand sides. No pivoting; the caller interprets the condition
/// estimate.
pub fn lstsq(a: &CMat, b: &CMat) -> LstsqOutcome {
    let m = a.rows();
    let n = a.cols();
    assert!(m >= n, "least squares requires at least as many rows as columns");
    assert_eq!(b.rows(), m);
    let p = b.cols();

    let mut qr = a.clone();
    let mut rhs = b.clone();

    // Factor A = QR, applying each reflector to the right-hand sides.
    for k in 0..n {
        let norm_x = {
            let col = &qr.col(k)[k..];
            col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
        };
        if norm_x == 0.0 {
            continue;
        }
        let x0 = qr.at(k, k);
        let phase = if x0.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * norm_x;

        // v = x - alpha e1, stored in place of the column tail.
        let mut v: Vec<Complex64> = qr.col(k)[k..].to_vec();
        v[0] -= alpha;
        let vnorm_sq: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm_sq > 0.0 {
            let beta = 2.0 / vnorm_sq;
            for j in k + 1..n {
                let w = cdot(&v, &qr.col(j)[k..]) * beta;
                let col = &mut qr.col_mut(j)[k..];
                for (c, vv) in col.iter_mut().zip(&v) {
                    *c -= w * vv;
                }
            }
            for j in 0..p {
                let w = cdot(&v, &rhs.col(j)[k..]) * beta;
                let col = &mut rhs.col_mut(j)[k..];
                for (c, vv) in col.iter_mut().zip(&v) {
                    *c -= w * vv;
                }
            }
        }
        qr.set(k, k, alpha);
        for i in k + 1..m {
            qr.set(i, k, Complex64::new(0.0, 0.0));
        }
    }

    let diag: Vec<f64> = (0..n).map(|i| qr.at(i, i).norm()).collect();
    let dmax = diag.iter().cloned().fold(0.0, f64::max);
    let dmin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if n == 0 {
        1.0
    } else if dmin == 0.0 {
        f64::INFINITY
    } else {
        dmax / dmin
    };

    // Back substitution; pivots at roundoff level are deflated to zero.
    let deflate_below = dmax * f64::EPSILON;
    let mut rank_deflated = false;
    let mut solution = CMat::zeros(n, p);
    for j in 0..p {
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        for i in (0..n).rev() {
            if diag[i] <= deflate_below {
                rank_deflated = true;
                continue;
            }
            let mut acc = rhs.at(i, j);
            for (t, xt) in x.iter().enumerate().skip(i + 1) {
                acc -= qr.at(i, t) * xt;
            }
            x[i] = acc / qr.at(i, i);
        }
        solution.col_mut(j).copy_from_slice(&x);
    }

    LstsqOutcome {
        solution,
        condition,
        rank_deflated,
    }
}
