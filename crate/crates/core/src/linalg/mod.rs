//! Eigenvalues of dense Hermitian matrices and covariance Gram products.

mod hermitian;
mod scalar;
mod tridiagonal;

pub use hermitian::{eigenvalues, Hermitian, HermitianMatrix};
pub use scalar::Scalar;
pub use tridiagonal::{tridiagonal_eigenvalues, MAX_SHIFTS};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance below zero accepted in a covariance spectrum.
pub const PSD_TOLERANCE: f64 = 1e-9;

/// An `m x n` data matrix, column-major. Complex data is kept as split real
/// and imaginary planes so the Gram kernel runs on contiguous `f64` slices.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleMatrix {
    Real {
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    },
    Complex {
        rows: usize,
        cols: usize,
        re: Vec<f64>,
        im: Vec<f64>,
    },
}

impl SampleMatrix {
    pub fn real(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Unsupported(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self::Real { rows, cols, data })
    }

    pub fn complex(rows: usize, cols: usize, re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        if re.len() != rows * cols || im.len() != rows * cols {
            return Err(Error::Unsupported(format!(
                "{}+{} entries for a {rows}x{cols} matrix",
                re.len(),
                im.len()
            )));
        }
        Ok(Self::Complex { rows, cols, re, im })
    }

    pub fn from_complex(rows: usize, cols: usize, data: &[Complex64]) -> Result<Self> {
        let re = data.iter().map(|z| z.re).collect();
        let im = data.iter().map(|z| z.im).collect();
        Self::complex(rows, cols, re, im)
    }

    pub fn rows(&self) -> usize {
        match self {
            Self::Real { rows, .. } | Self::Complex { rows, .. } => *rows,
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            Self::Real { cols, .. } | Self::Complex { cols, .. } => *cols,
        }
    }

    /// Entry `(i, j)`, zero-based.
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        match self {
            Self::Real { rows, data, .. } => Complex64::new(data[j * rows + i], 0.0),
            Self::Complex { rows, re, im, .. } => {
                Complex64::new(re[j * rows + i], im[j * rows + i])
            }
        }
    }
}

/// `S = X*X / n` for an `m x n` matrix `X` with `m >= n`.
pub fn gram_matrix(x: &SampleMatrix) -> Result<HermitianMatrix> {
    let (m, n) = (x.rows(), x.cols());
    if n == 0 || m < n {
        return Err(Error::InvalidDimensions { m, n });
    }
    let inv = 1.0 / n as f64;
    Ok(match x {
        SampleMatrix::Real { data, .. } => {
            let mut out = vec![0.0; n * n];
            for j in 0..n {
                let cj = &data[j * m..(j + 1) * m];
                for i in j..n {
                    out[j * n + i] = dot(&data[i * m..(i + 1) * m], cj) * inv;
                }
            }
            HermitianMatrix::Real(Hermitian::from_lower_storage(n, out))
        }
        SampleMatrix::Complex { re, im, .. } => {
            let mut out = vec![Complex64::new(0.0, 0.0); n * n];
            for j in 0..n {
                let (rj, ij) = (&re[j * m..(j + 1) * m], &im[j * m..(j + 1) * m]);
                for i in j..n {
                    let (ri, ii) = (&re[i * m..(i + 1) * m], &im[i * m..(i + 1) * m]);
                    let (real, imag) = if i == j {
                        (dot(ri, ri) + dot(ii, ii), 0.0)
                    } else {
                        conj_dot(ri, ii, rj, ij)
                    };
                    out[j * n + i] = Complex64::new(real * inv, imag * inv);
                }
            }
            HermitianMatrix::Complex(Hermitian::from_lower_storage(n, out))
        }
    })
}

/// Four independent accumulators so the loop pipelines; fixed order keeps
/// the result reproducible.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let mut xs = a.chunks_exact(4);
    let mut ys = b.chunks_exact(4);
    for (x, y) in (&mut xs).zip(&mut ys) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let tail: f64 = xs
        .remainder()
        .iter()
        .zip(ys.remainder())
        .map(|(x, y)| x * y)
        .sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `Σ conj(a_k) b_k` over split planes, two accumulators per component.
#[inline]
fn conj_dot(ar: &[f64], ai: &[f64], br: &[f64], bi: &[f64]) -> (f64, f64) {
    let len = ar.len();
    let (ar, ai, br, bi) = (&ar[..len], &ai[..len], &br[..len], &bi[..len]);
    let mut re = [0.0; 2];
    let mut im = [0.0; 2];
    let pairs = len / 2;
    for k in 0..pairs {
        for l in 0..2 {
            let idx = 2 * k + l;
            re[l] += ar[idx] * br[idx] + ai[idx] * bi[idx];
            im[l] += ar[idx] * bi[idx] - ai[idx] * br[idx];
        }
    }
    let (mut re_sum, mut im_sum) = (re[0] + re[1], im[0] + im[1]);
    if len % 2 == 1 {
        let k = len - 1;
        re_sum += ar[k] * br[k] + ai[k] * bi[k];
        im_sum += ar[k] * bi[k] - ai[k] * br[k];
    }
    (re_sum, im_sum)
}

/// Eigenvalues of one matrix draw, ascending and finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SpectrumSample {
    values: Vec<f64>,
}

impl SpectrumSample {
    /// Sorts (stably) and validates.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "eigenvalue",
                value: bad,
            });
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    /// As [`SpectrumSample::new`], additionally rejecting eigenvalues below
    /// `-PSD_TOLERANCE * max|λ|`.
    pub fn from_covariance(values: Vec<f64>) -> Result<Self> {
        let sample = Self::new(values)?;
        sample.check_psd()?;
        Ok(sample)
    }

    pub fn check_psd(&self) -> Result<()> {
        let tol = PSD_TOLERANCE * self.spectral_norm();
        match self.values.first() {
            Some(&min) if min < -tol => Err(Error::NotPositiveSemidefinite { min, tol }),
            _ => Ok(()),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// `λ_j`, 1-based.
    pub fn lambda(&self, j: usize) -> f64 {
        self.values[j - 1]
    }

    pub fn spectral_norm(&self) -> f64 {
        match (self.values.first(), self.values.last()) {
            (Some(lo), Some(hi)) => lo.abs().max(hi.abs()),
            _ => 0.0,
        }
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

impl TryFrom<Vec<f64>> for SpectrumSample {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<SpectrumSample> for Vec<f64> {
    fn from(s: SpectrumSample) -> Self {
        s.values
    }
}

#[cfg(test)]
mod tests;
