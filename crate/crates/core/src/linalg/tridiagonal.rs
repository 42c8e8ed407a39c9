//! Implicit QL with Wilkinson shifts on a real symmetric tridiagonal matrix.

use crate::error::{Error, Result};

/// Shift budget per eigenvalue.
pub const MAX_SHIFTS: usize = 30;

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `diag` and
/// sub-diagonal `off` (`off.len() + 1 == diag.len()`), sorted ascending.
pub fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if off.len() + 1 != n {
        return Err(Error::Unsupported(format!(
            "sub-diagonal of length {} for order {n}",
            off.len()
        )));
    }
    let mut d = diag.to_vec();
    let mut e = Vec::with_capacity(n);
    e.extend_from_slice(off);
    e.push(0.0);
    ql_implicit(&mut d, &mut e)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// In-place implicit QL. `e[i]` couples `i` and `i + 1`; `e[n-1]` is
/// scratch. On return `d` holds the (unsorted) eigenvalues.
pub(crate) fn ql_implicit(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for l in 0..n {
        let mut shifts = 0;
        loop {
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
            if shifts == MAX_SHIFTS {
                return Err(Error::NoConvergence {
                    index: l,
                    iterations: MAX_SHIFTS,
                });
            }
            shifts += 1;

            // Wilkinson shift from the leading 2x2 block.
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
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
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        let v = tridiagonal_eigenvalues(&[2.0, 2.0], &[1.0]).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-15 && (v[1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn discrete_laplacian() {
        // eigenvalues 2 - 2 cos(kπ/(n+1))
        let n = 50;
        let v = tridiagonal_eigenvalues(&vec![2.0; n], &vec![-1.0; n - 1]).unwrap();
        for (k, got) in v.iter().enumerate() {
            let want = 2.0 - 2.0 * (std::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64).cos();
            assert!((got - want).abs() < 1e-13, "k={k}");
        }
    }

    #[test]
    fn already_diagonal() {
        let v = tridiagonal_eigenvalues(&[3.0, -1.0, 2.0], &[0.0, 0.0]).unwrap();
        assert_eq!(v, vec![-1.0, 2.0, 3.0]);
        assert!(tridiagonal_eigenvalues(&[], &[]).unwrap().is_empty());
        assert!(tridiagonal_eigenvalues(&[1.0], &[1.0]).is_err());
    }
}
