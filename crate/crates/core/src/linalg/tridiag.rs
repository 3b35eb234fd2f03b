//! Symmetric tridiagonal eigenvalues (implicit QL with Wilkinson shifts).

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `d` and
/// off-diagonal `e` (`e.len() == d.len() - 1`), returned ascending.
pub fn tridiag_eigenvalues(d: &[f64], e: &[f64]) -> Vec<f64> {
    let n = d.len();
    assert!(n == 0 || e.len() == n - 1);
    if n == 0 {
        return Vec::new();
    }
    let mut d = d.to_vec();
    let mut e = {
        let mut v = e.to_vec();
        v.push(0.0);
        v
    };

    for l in 0..n {
        let mut iter = 0;
        loop {
            // Look for a negligible off-diagonal element to split at.
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 80 {
                // Give up on further refinement of this eigenvalue; the
                // accumulated d[l] is still a good approximation.
                break;
            }

            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                f = (d[i] - g) * s + 2.0 * c * b;
                p = s * f;
                d[i + 1] = g + p;
                g = c * f - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_matches_quadratic_formula() {
        // [[2, 1], [1, 3]]: eigenvalues (5 +- sqrt(5)) / 2
        let vals = tridiag_eigenvalues(&[2.0, 3.0], &[1.0]);
        let lo = (5.0 - 5.0f64.sqrt()) / 2.0;
        let hi = (5.0 + 5.0f64.sqrt()) / 2.0;
        assert!((vals[0] - lo).abs() < 1e-14);
        assert!((vals[1] - hi).abs() < 1e-14);
    }

    #[test]
    fn laplacian_eigenvalues_are_known() {
        // Second-difference matrix: eigenvalues 2 - 2 cos(k pi / (n + 1)).
        let n = 24;
        let d = vec![2.0; n];
        let e = vec![-1.0; n - 1];
        let vals = tridiag_eigenvalues(&d, &e);
        for (k, v) in vals.iter().enumerate() {
            let expect = 2.0 - 2.0 * (std::f64::consts::PI * (k + 1) as f64 / (n as f64 + 1.0)).cos();
            assert!((v - expect).abs() < 1e-12, "k={k}: {v} vs {expect}");
        }
    }

    #[test]
    fn diagonal_passthrough() {
        let vals = tridiag_eigenvalues(&[3.0, -1.0, 7.0], &[0.0, 0.0]);
        assert_eq!(vals, vec![-1.0, 3.0, 7.0]);
    }
}
