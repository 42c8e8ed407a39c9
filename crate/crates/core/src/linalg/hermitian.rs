use num_complex::Complex64;

use super::scalar::Scalar;
use super::tridiagonal::ql_implicit;
use super::SpectrumSample;
use crate::error::{Error, Result};

/// Dense Hermitian matrix holding only its lower triangle (column-major,
/// full `n x n` stride). The upper triangle is never read, so the matrix is
/// Hermitian by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Hermitian<T: Scalar> {
    order: usize,
    data: Vec<T>,
}

impl<T: Scalar> Hermitian<T> {
    /// Builds from `entry(i, j)` evaluated for `i >= j`. Diagonal entries
    /// keep only their real part.
    pub fn from_lower<F: FnMut(usize, usize) -> T>(order: usize, mut entry: F) -> Self {
        let mut data = vec![T::ZERO; order * order];
        for j in 0..order {
            data[j * order + j] = T::from_real(entry(j, j).re());
            for i in j + 1..order {
                data[j * order + i] = entry(i, j);
            }
        }
        Self { order, data }
    }

    /// Builds from full rows, rejecting input that is not Hermitian to
    /// within `tol` (absolute).
    #[allow(clippy::needless_range_loop)]
    pub fn from_rows(rows: &[Vec<T>], tol: f64) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Unsupported(
                "rows of a square matrix differ in length".into(),
            ));
        }
        for i in 0..n {
            for j in 0..=i {
                if (rows[i][j] - rows[j][i].conj()).norm_sqr() > tol * tol {
                    return Err(Error::Unsupported(format!(
                        "entry ({i}, {j}) breaks symmetry"
                    )));
                }
            }
        }
        Ok(Self::from_lower(n, |i, j| rows[i][j]))
    }

    pub(crate) fn from_lower_storage(order: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), order * order);
        Self { order, data }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if i >= j {
            self.data[j * self.order + i]
        } else {
            self.data[i * self.order + j].conj()
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.order)
            .map(|i| self.data[i * self.order + i].re())
            .sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        let n = self.order;
        let mut acc = 0.0;
        for j in 0..n {
            acc += self.data[j * n + j].norm_sqr();
            for i in j + 1..n {
                acc += 2.0 * self.data[j * n + i].norm_sqr();
            }
        }
        acc
    }

    fn check_finite(&self) -> Result<()> {
        let n = self.order;
        for j in 0..n {
            for i in j..n {
                let z = self.data[j * n + i];
                if !z.is_finite() {
                    return Err(Error::NonFinite {
                        what: "matrix entry",
                        value: if z.re().is_finite() { f64::NAN } else { z.re() },
                    });
                }
            }
        }
        Ok(())
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Result<SpectrumSample> {
        self.check_finite()?;
        let mut work = self.data.clone();
        let (mut d, mut e) = tridiagonalize(&mut work, self.order);
        ql_implicit(&mut d, &mut e)?;
        SpectrumSample::new(d)
    }
}

/// Reduces the lower triangle of `a` to real tridiagonal form by unitary
/// Householder similarities `P = I - β u u*`. Returns `(diag, off)` with
/// `off[k]` coupling `k` and `k + 1` and `off[n-1] = 0`.
///
/// The sub-diagonal produced by a complex reflector is `-e^{iφ}‖x‖`; only its
/// modulus is kept, which amounts to a further diagonal unitary similarity.
pub(crate) fn tridiagonalize<T: Scalar>(a: &mut [T], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n];
    let mut u = vec![T::ZERO; n];
    let mut p = vec![T::ZERO; n];
    for k in 0..n.saturating_sub(1) {
        let col = k * n;
        diag[k] = a[col + k].re();
        let alpha = a[col + k + 1];
        let tail: f64 = a[col + k + 2..col + n].iter().map(|z| z.norm_sqr()).sum();
        if tail == 0.0 {
            off[k] = alpha.modulus();
            continue;
        }
        let alpha_abs = alpha.modulus();
        let xnorm = (alpha_abs * alpha_abs + tail).sqrt();
        let beta = 1.0 / (xnorm * (xnorm + alpha_abs));
        off[k] = xnorm;

        let len = n - k - 1;
        let base = k + 1;
        let u = &mut u[..len];
        let p = &mut p[..len];
        u.copy_from_slice(&a[col + base..col + n]);
        u[0] += alpha.phase().scale(xnorm);

        // p = β B u with B the trailing block, read from its lower triangle.
        p.fill(T::ZERO);
        for c in 0..len {
            let start = (base + c) * n + base;
            let column = &a[start..start + len];
            let uc = u[c];
            let mut acc = T::from_real(column[c].re()) * uc;
            for r in c + 1..len {
                p[r] += column[r] * uc;
                acc += column[r].conj() * u[r];
            }
            p[c] += acc;
        }
        let mut upk = 0.0;
        for (pi, ui) in p.iter_mut().zip(u.iter()) {
            *pi = pi.scale(beta);
            upk += (ui.conj() * *pi).re();
        }
        let kappa = 0.5 * beta * upk;
        for (pi, ui) in p.iter_mut().zip(u.iter()) {
            *pi -= ui.scale(kappa);
        }

        // B -= u q* + q u*
        for c in 0..len {
            let start = (base + c) * n + base;
            let column = &mut a[start..start + len];
            let qc = p[c].conj();
            let uc = u[c].conj();
            for r in c..len {
                column[r] -= u[r] * qc + p[r] * uc;
            }
        }
    }
    if n > 0 {
        diag[n - 1] = a[(n - 1) * n + n - 1].re();
    }
    (diag, off)
}

/// A Hermitian matrix over either field.
#[derive(Debug, Clone, PartialEq)]
pub enum HermitianMatrix {
    Real(Hermitian<f64>),
    Complex(Hermitian<Complex64>),
}

impl HermitianMatrix {
    pub fn order(&self) -> usize {
        match self {
            Self::Real(h) => h.order(),
            Self::Complex(h) => h.order(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        match self {
            Self::Real(h) => Complex64::new(h.get(i, j), 0.0),
            Self::Complex(h) => h.get(i, j),
        }
    }

    pub fn trace(&self) -> f64 {
        match self {
            Self::Real(h) => h.trace(),
            Self::Complex(h) => h.trace(),
        }
    }

    pub fn frobenius_sq(&self) -> f64 {
        match self {
            Self::Real(h) => h.frobenius_sq(),
            Self::Complex(h) => h.frobenius_sq(),
        }
    }
}

/// All eigenvalues of a Hermitian matrix, ascending.
pub fn eigenvalues(matrix: &HermitianMatrix) -> Result<SpectrumSample> {
    match matrix {
        HermitianMatrix::Real(h) => h.eigenvalues(),
        HermitianMatrix::Complex(h) => h.eigenvalues(),
    }
}
