//! Summary statistics used by the verification suites and bandwidth rules.

/// Arithmetic mean; 0 for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (denominator n − 1).
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

/// Sample standard deviation.
pub fn sample_sd(xs: &[f64]) -> f64 {
    sample_variance(xs).sqrt()
}

/// Sample covariance (denominator n − 1).
pub fn sample_covariance(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mx = mean(xs);
    let my = mean(ys);
    xs.iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / (n - 1) as f64
}

/// Standardized third central moment.
pub fn skewness(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let n = xs.len() as f64;
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m3 = xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n;
    m3 / m2.powf(1.5)
}

/// Excess kurtosis (0 for a normal law).
pub fn excess_kurtosis(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let n = xs.len() as f64;
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    m4 / (m2 * m2) - 3.0
}

/// Kolmogorov–Smirnov distance between the empirical law of `sorted` (which
/// must be ascending) and the reference CDF `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    let mut sup: f64 = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        let c = cdf(v);
        let lower = (c - i as f64 / n).abs();
        let upper = ((i + 1) as f64 / n - c).abs();
        sup = sup.max(lower).max(upper);
    }
    sup
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn moments_of_a_symmetric_sample() {
        let xs = [-2.0, -1.0, 0.0, 1.0, 2.0];
        assert_abs_diff_eq!(mean(&xs), 0.0);
        assert_abs_diff_eq!(sample_variance(&xs), 2.5);
        assert_abs_diff_eq!(skewness(&xs), 0.0);
    }

    #[test]
    fn covariance_of_identical_series_is_the_variance() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        assert_abs_diff_eq!(sample_covariance(&xs, &xs), sample_variance(&xs));
    }

    #[test]
    fn ks_distance_on_exact_quantiles() {
        // Points at i/n of the uniform CDF: the distance is exactly 1/n.
        let xs = [0.25, 0.5, 0.75, 1.0];
        assert_abs_diff_eq!(ks_statistic(&xs, |x| x.clamp(0.0, 1.0)), 0.25);
    }
}
