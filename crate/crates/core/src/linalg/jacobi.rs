//! One-sided Jacobi SVD for dense complex matrices.
//!
//! Column rotations drive the Gram matrix to diagonal form; singular values
//! are the final column norms. The method converges for any matrix and keeps
//! high relative accuracy for small singular values, which matters when the
//! spectrum spans many decades (numerical-rank decisions downstream).

use num_complex::Complex64;

use super::{cdot, CMat};

const MAX_SWEEPS: usize = 60;

/// Economy SVD `A = U S V^H` with `S` descending.
///
/// Requires `rows >= cols`; `U` is rows x cols, `V` is cols x cols. Columns
/// of `U` belonging to zero singular values are filled with a deterministic
/// orthonormal completion so `U` always has orthonormal columns.
pub fn jacobi_svd(a: &CMat) -> (CMat, Vec<f64>, CMat) {
    let m = a.rows();
    let n = a.cols();
    assert!(m >= n, "jacobi_svd expects rows >= cols; pass the adjoint instead");

    let mut work = a.clone();
    let mut v = CMat::identity(n);

    let gram_tol = f64::EPSILON * (m as f64).sqrt();
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let (app, aqq, apq) = {
                    let cp = work.col(p);
                    let cq = work.col(q);
                    let app: f64 = cp.iter().map(|z| z.norm_sqr()).sum();
                    let aqq: f64 = cq.iter().map(|z| z.norm_sqr()).sum();
                    (app, aqq, cdot(cp, cq))
                };
                let off = apq.norm();
                if app == 0.0 || aqq == 0.0 || off <= gram_tol * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;

                // Phase the q-column so the cross term becomes real, then a
                // real Jacobi rotation diagonalizes the 2x2 Gram block.
                let phase = apq / off;
                let tau = (aqq - app) / (2.0 * off);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                let rot = |cols: (&mut [Complex64], &mut [Complex64])| {
                    let (cp, cq) = cols;
                    for (zp, zq) in cp.iter_mut().zip(cq.iter_mut()) {
                        let qp = *zq * phase.conj();
                        let new_p = c * *zp - s * qp;
                        let new_q = s * *zp + c * qp;
                        *zp = new_p;
                        *zq = new_q;
                    }
                };
                rot(work.two_cols_mut(p, q));
                rot(v.two_cols_mut(p, q));
            }
        }
        if !rotated {
            break;
        }
    }

    // Column norms are the singular values; sort descending.
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n)
        .map(|j| work.col(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap().then(i.cmp(&j)));

    let mut s = Vec::with_capacity(n);
    let mut u = CMat::zeros(m, n);
    let mut v_sorted = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        s.push(norms[src]);
        v_sorted.col_mut(dst).copy_from_slice(v.col(src));
        u.col_mut(dst).copy_from_slice(work.col(src));
    }

    let smax = s.first().copied().unwrap_or(0.0);
    for j in 0..n {
        if s[j] > smax * 1e-300 && s[j] > 0.0 {
            let inv = 1.0 / s[j];
            for z in u.col_mut(j) {
                *z *= inv;
            }
        } else {
            s[j] = s[j].max(0.0);
            fill_orthonormal(&mut u, j);
        }
    }

    (u, s, v_sorted)
}

/// Replaces column `j` with a unit vector orthogonal to columns `0..j`,
/// built deterministically from coordinate vectors.
fn fill_orthonormal(u: &mut CMat, j: usize) {
    let m = u.rows();
    for candidate in 0..m {
        let mut w = vec![Complex64::new(0.0, 0.0); m];
        w[candidate] = Complex64::new(1.0, 0.0);
        for _ in 0..2 {
            for t in 0..j {
                let g = cdot(u.col(t), &w);
                let col = u.col(t).to_vec();
                for (wi, ci) in w.iter_mut().zip(&col) {
                    *wi -= g * ci;
                }
            }
        }
        let norm: f64 = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.5 {
            let inv = 1.0 / norm;
            for z in &mut w {
                *z *= inv;
            }
            u.col_mut(j).copy_from_slice(&w);
            return;
        }
    }
    panic!("no orthonormal completion found -- more columns than rows?");
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(u: &CMat, s: &[f64], v: &CMat) -> CMat {
        let mut us = u.clone();
        for (j, &sv) in s.iter().enumerate() {
            for z in us.col_mut(j) {
                *z *= sv;
            }
        }
        us.matmul(&v.adjoint())
    }

    #[test]
    fn identity_has_unit_singular_values() {
        let a = CMat::identity(3);
        let (_, s, _) = jacobi_svd(&a);
        for sv in s {
            assert!((sv - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn diagonal_singular_values_sorted() {
        let mut a = CMat::zeros(3, 3);
        a.set(0, 0, Complex64::new(1.0, 0.0));
        a.set(1, 1, Complex64::new(3.0, 0.0));
        a.set(2, 2, Complex64::new(2.0, 0.0));
        let (_, s, _) = jacobi_svd(&a);
        assert!((s[0] - 3.0).abs() < 1e-14);
        assert!((s[1] - 2.0).abs() < 1e-14);
        assert!((s[2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_matrix_factors_accurately() {
        let mut state = 1u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64) / (1u64 << 31) as f64 - 1.0
        };
        let a = CMat::from_fn(20, 20, |_, _| Complex64::new(next(), next()));
        let (u, s, v) = jacobi_svd(&a);
        assert!(u.orthonormality_defect() < 1e-12);
        assert!(v.orthonormality_defect() < 1e-12);
        let rec = reconstruct(&u, &s, &v);
        let mut err = 0.0f64;
        for j in 0..20 {
            for i in 0..20 {
                err = err.max((rec.at(i, j) - a.at(i, j)).norm());
            }
        }
        assert!(err < 1e-12 * a.frobenius_norm());
    }

    #[test]
    fn rank_deficient_columns_get_orthonormal_completion() {
        let a = CMat::from_fn(4, 3, |i, _| Complex64::new((i == 0) as u8 as f64, 0.0));
        let (u, s, _) = jacobi_svd(&a);
        assert!(s[1] < 1e-14 * s[0].max(1.0));
        assert!(u.orthonormality_defect() < 1e-12);
    }

    #[test]
    fn tiny_singular_values_keep_relative_accuracy() {
        // diag(1, 1e-13) should come back with both values accurate.
        let mut a = CMat::zeros(2, 2);
        a.set(0, 0, Complex64::new(1.0, 0.0));
        a.set(1, 1, Complex64::new(1e-13, 0.0));
        let (_, s, _) = jacobi_svd(&a);
        assert!((s[0] - 1.0).abs() < 1e-14);
        assert!((s[1] - 1e-13).abs() < 1e-26);
    }
}
