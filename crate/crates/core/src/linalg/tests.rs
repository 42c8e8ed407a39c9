use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Characteristic polynomial coefficients (ascending) by Faddeev-LeVerrier.
fn char_poly(a: &[Vec<Complex64>]) -> Vec<f64> {
    let n = a.len();
    let mut coeffs = vec![0.0; n + 1];
    coeffs[n] = 1.0;
    let mut m = vec![vec![c(0.0, 0.0); n]; n];
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut next = vec![vec![c(0.0, 0.0); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = c(0.0, 0.0);
                for l in 0..n {
                    acc += a[i][l] * m[l][j];
                }
                next[i][j] = acc;
            }
            next[i][i] += c(coeffs[n - k + 1], 0.0);
        }
        let mut tr = c(0.0, 0.0);
        for i in 0..n {
            for l in 0..n {
                tr += a[i][l] * next[l][i];
            }
        }
        coeffs[n - k] = -tr.re / k as f64;
        m = next;
    }
    coeffs
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Real roots of a polynomial whose roots are all real and simple, found by
/// bisection between consecutive roots of its derivative.
fn real_roots(coeffs: &[f64]) -> Vec<f64> {
    let d = coeffs.len() - 1;
    if d == 1 {
        return vec![-coeffs[0] / coeffs[1]];
    }
    let deriv: Vec<f64> = (1..=d).map(|k| k as f64 * coeffs[k]).collect();
    let crit = real_roots(&deriv);
    let bound = 1.0
        + coeffs[..d]
            .iter()
            .map(|c| (c / coeffs[d]).abs())
            .fold(0.0, f64::max);
    let mut points = vec![-bound];
    points.extend(crit);
    points.push(bound);
    points
        .windows(2)
        .map(|w| {
            let (mut lo, mut hi) = (w[0], w[1]);
            let lo_sign = horner(coeffs, lo) < 0.0;
            for _ in 0..300 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if (horner(coeffs, mid) < 0.0) == lo_sign {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

#[allow(clippy::needless_range_loop)]
fn random_hermitian(rng: &mut ChaCha8Rng, n: usize, complex: bool) -> Vec<Vec<Complex64>> {
    let mut a = vec![vec![c(0.0, 0.0); n]; n];
    for i in 0..n {
        a[i][i] = c(rng.random_range(-2.0..2.0), 0.0);
        for j in 0..i {
            let im = if complex {
                rng.random_range(-1.0..1.0)
            } else {
                0.0
            };
            let z = c(rng.random_range(-1.0..1.0), im);
            a[i][j] = z;
            a[j][i] = z.conj();
        }
    }
    a
}

fn to_matrix(a: &[Vec<Complex64>], complex: bool) -> HermitianMatrix {
    let n = a.len();
    if complex {
        HermitianMatrix::Complex(Hermitian::from_lower(n, |i, j| a[i][j]))
    } else {
        HermitianMatrix::Real(Hermitian::from_lower(n, |i, j| a[i][j].re))
    }
}

#[test]
fn two_by_two_examples() {
    let real = Hermitian::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]], 0.0).unwrap();
    let v = real.eigenvalues().unwrap();
    assert!((v.lambda(1) - 1.0).abs() < 1e-14 && (v.lambda(2) - 3.0).abs() < 1e-14);
    let cplx = Hermitian::from_rows(
        &[
            vec![c(2.0, 0.0), c(0.0, 1.0)],
            vec![c(0.0, -1.0), c(2.0, 0.0)],
        ],
        0.0,
    )
    .unwrap();
    let v = cplx.eigenvalues().unwrap();
    assert!((v.lambda(1) - 1.0).abs() < 1e-14 && (v.lambda(2) - 3.0).abs() < 1e-14);
    assert!(Hermitian::from_rows(&[vec![2.0, 1.0], vec![0.5, 2.0]], 1e-12).is_err());
}

#[test]
fn non_finite_input_rejected() {
    let h = Hermitian::from_lower(3, |i, j| if i == 2 && j == 0 { f64::NAN } else { 1.0 });
    assert!(matches!(h.eigenvalues(), Err(Error::NonFinite { .. })));
}

#[test]
fn agrees_with_characteristic_polynomial() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for draw in 0..100 {
        for n in 1..=4 {
            for complex in [false, true] {
                let a = random_hermitian(&mut rng, n, complex);
                let got = eigenvalues(&to_matrix(&a, complex)).unwrap();
                let mut want = real_roots(&char_poly(&a));
                want.sort_by(f64::total_cmp);
                for (g, w) in got.as_slice().iter().zip(&want) {
                    assert!((g - w).abs() < 1e-10, "draw {draw} n={n}: {g} vs {w}");
                }
            }
        }
    }
}

#[test]
fn gram_examples() {
    let eye = SampleMatrix::real(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
    let s = gram_matrix(&eye).unwrap();
    assert_eq!(s.get(0, 0), c(0.5, 0.0));
    assert_eq!(s.get(1, 0), c(0.0, 0.0));
    assert_eq!(s.get(1, 1), c(0.5, 0.0));
    let one = SampleMatrix::real(1, 1, vec![-3.0]).unwrap();
    assert_eq!(gram_matrix(&one).unwrap().get(0, 0), c(9.0, 0.0));
    let wide = SampleMatrix::real(2, 3, vec![0.0; 6]).unwrap();
    assert!(matches!(
        gram_matrix(&wide),
        Err(Error::InvalidDimensions { m: 2, n: 3 })
    ));
}

#[test]
fn gram_matches_triple_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (m, n) in [(3, 2), (7, 7), (13, 5)] {
        let data: Vec<Complex64> = (0..m * n)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let x = SampleMatrix::from_complex(m, n, &data).unwrap();
        let s = gram_matrix(&x).unwrap();
        for i in 0..n {
            for j in 0..n {
                let mut want = c(0.0, 0.0);
                for k in 0..m {
                    want += x.get(k, i).conj() * x.get(k, j);
                }
                want /= n as f64;
                assert!((s.get(i, j) - want).norm() < 1e-14, "({i},{j})");
            }
        }
    }
}

#[test]
fn spectrum_sample_validation() {
    let s = SpectrumSample::new(vec![3.0, -1.0, 2.0]).unwrap();
    assert_eq!(s.as_slice(), &[-1.0, 2.0, 3.0]);
    assert!(SpectrumSample::new(vec![1.0, f64::INFINITY]).is_err());
    assert!(SpectrumSample::from_covariance(vec![-1e-3, 1.0]).is_err());
    assert!(SpectrumSample::from_covariance(vec![-1e-12, 1.0]).is_ok());
    let json = serde_json::to_string(&s).unwrap();
    assert_eq!(json, "[-1.0,2.0,3.0]");
    let back: SpectrumSample = serde_json::from_str("[2.0,1.0]").unwrap();
    assert_eq!(back.as_slice(), &[1.0, 2.0]);
}

fn gram_strategy() -> impl Strategy<Value = (usize, usize, bool, Vec<f64>)> {
    (1usize..24, 0usize..24, any::<bool>()).prop_flat_map(|(n, extra, complex)| {
        let m = n + extra;
        let len = m * n * if complex { 2 } else { 1 };
        (
            Just(n),
            Just(m),
            Just(complex),
            prop::collection::vec(-3.0f64..3.0, len),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spectrum_preserves_trace_and_frobenius((n, m, complex, raw) in gram_strategy()) {
        let x = if complex {
            let (re, im) = raw.split_at(m * n);
            SampleMatrix::complex(m, n, re.to_vec(), im.to_vec()).unwrap()
        } else {
            SampleMatrix::real(m, n, raw).unwrap()
        };
        let s = gram_matrix(&x).unwrap();
        let spec = eigenvalues(&s).unwrap();
        let norm = spec.spectral_norm().max(f64::MIN_POSITIVE);
        let sum: f64 = spec.as_slice().iter().sum();
        let sum_sq: f64 = spec.as_slice().iter().map(|v| v * v).sum();
        prop_assert!((sum - s.trace()).abs() <= 1e-10 * n as f64 * norm);
        prop_assert!((sum_sq - s.frobenius_sq()).abs() <= 1e-9 * n as f64 * norm * norm);
        prop_assert!(spec.as_slice()[0] >= -1e-9 * norm);
        prop_assert!(spec.as_slice().windows(2).all(|w| w[0] <= w[1]));
    }
}
