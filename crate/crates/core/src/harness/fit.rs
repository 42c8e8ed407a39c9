use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Least-squares fit of `ln y = intercept + slope · ln n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub name: String,
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope. With per-point standard errors this is
    /// the propagated Monte Carlo error; otherwise the residual estimate.
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub points: usize,
}

impl ExponentFit {
    pub fn ci_contains(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }
}

pub fn fit_exponent(
    name: &str,
    ns: &[f64],
    ys: &[f64],
    y_stderr: Option<&[f64]>,
) -> Result<ExponentFit> {
    let k = ns.len();
    if k < 2 || ys.len() != k || y_stderr.is_some_and(|s| s.len() != k) {
        return Err(Error::TooFew {
            what: "fit points",
            needed: 2,
            got: k.min(ys.len()),
        });
    }
    if let Some(&bad) = ns.iter().chain(ys).find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::OutOfRange {
            what: "fit value",
            value: bad,
            lo: f64::MIN_POSITIVE,
            hi: f64::INFINITY,
        });
    }
    let x: Vec<f64> = ns.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let kf = k as f64;
    let mx = x.iter().sum::<f64>() / kf;
    let my = y.iter().sum::<f64>() / kf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    // slope = Σ w_i y_i
    let w: Vec<f64> = x.iter().map(|v| (v - mx) / sxx).collect();
    let slope: f64 = w.iter().zip(&y).map(|(wi, yi)| wi * yi).sum();
    let intercept = my - slope * mx;
    let stderr = match y_stderr {
        Some(se) => w
            .iter()
            .zip(se.iter().zip(ys))
            .map(|(wi, (s, yv))| (wi * s / yv).powi(2))
            .sum::<f64>()
            .sqrt(),
        None if k > 2 => {
            let rss: f64 = x
                .iter()
                .zip(&y)
                .map(|(xi, yi)| (yi - intercept - slope * xi).powi(2))
                .sum();
            (rss / (kf - 2.0) / sxx).sqrt()
        }
        None => 0.0,
    };
    Ok(ExponentFit {
        name: name.to_string(),
        slope,
        intercept,
        stderr,
        ci_low: slope - Z95 * stderr,
        ci_high: slope + Z95 * stderr,
        points: k,
    })
}

/// `max / min` of positive values.
pub fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}
