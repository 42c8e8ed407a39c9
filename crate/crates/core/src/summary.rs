//! Order-fixed summary statistics shared by the Monte Carlo modules.

/// Pairwise (cascade) summation; the split points depend only on the length,
/// so the result is reproducible.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let (lo, hi) = values.split_at(values.len() / 2);
    pairwise_sum(lo) + pairwise_sum(hi)
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(values) / values.len() as f64
}

fn centered_sum_sq(values: &[f64], center: f64) -> f64 {
    let sq: Vec<f64> = values.iter().map(|x| (x - center) * (x - center)).collect();
    pairwise_sum(&sq)
}

/// Unbiased sample variance.
pub fn sample_variance(values: &[f64]) -> f64 {
    let r = values.len();
    if r < 2 {
        return f64::NAN;
    }
    centered_sum_sq(values, mean(values)) / (r - 1) as f64
}

/// `sqrt(var / R)`.
pub fn mean_stderr(values: &[f64]) -> f64 {
    (sample_variance(values) / values.len() as f64).sqrt()
}

/// Unbiased variance together with its jackknife standard error.
///
/// Leave-one-out variances come from the closed form
/// `S2_{-i} = S2 - (x_i - M)² R/(R-1)`, so the cost is linear.
pub fn variance_with_jackknife(values: &[f64]) -> (f64, f64) {
    let r = values.len();
    if r < 3 {
        return (sample_variance(values), f64::NAN);
    }
    let rf = r as f64;
    let m = mean(values);
    let s2 = centered_sum_sq(values, m);
    let var = s2 / (rf - 1.0);
    let loo: Vec<f64> = values
        .iter()
        .map(|x| (s2 - (x - m) * (x - m) * rf / (rf - 1.0)) / (rf - 2.0))
        .collect();
    let loo_mean = mean(&loo);
    let spread = centered_sum_sq(&loo, loo_mean);
    (var, ((rf - 1.0) / rf * spread).sqrt())
}

/// Standard error of an empirical frequency `p` over `r` trials.
pub fn frequency_stderr(p: f64, r: usize) -> f64 {
    (p * (1.0 - p) / r as f64).sqrt()
}
