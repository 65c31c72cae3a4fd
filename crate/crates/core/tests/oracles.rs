//! Cross-checks against values computed independently of the estimator code:
//! closed-form smoothing expansions, exact Beta moments, and identities that
//! must hold bit-for-bit.

use std::sync::Arc;

use cskde::bandwidth::{beta_mom, moment_estimates, MomentEstimates};
use cskde::stats;
use cskde::{generate_css, transform, CdfEstimate, Family, GEstimate, Kernel, ObservationDensity};

const BETA22: Family = Family::Beta {
    alpha: 2.0,
    beta: 2.0,
};

/// For a Beta(2, 2) latent time and uniform inspections, F is the cubic
/// 3x² − 2x³, so the smoothing expansion of the left cdf route terminates:
/// the expected value of ĝ(x) at an interior point is exactly
/// F(x) + (h²/2)·(1/7)·F″(x), the 1/7 being the second moment of the
/// biweight. At x = 0.25 and h = 0.1 the bias is (0.01/2)·(1/7)·3 = 3/1400.
#[test]
fn cdf_left_route_bias_matches_the_smoothing_expansion() {
    let n = 10_000;
    let reps = 1_000u64;
    let h2 = 0.1;
    let x = 0.25;
    let kernel = Kernel::biweight();
    let q = ObservationDensity::analytic(Family::Uniform).unwrap();

    let mut values = Vec::with_capacity(reps as usize);
    for rep in 0..reps {
        let generated = generate_css(&BETA22, &Family::Uniform, n, 1729, rep).unwrap();
        let data = transform(&generated.sample);
        let cdf = CdfEstimate::new(&data, h2, &kernel, &q).unwrap();
        values.push(cdf.cdf_minus(x).unwrap());
    }

    let bias = stats::mean(&values) - BETA22.cdf(x);
    let predicted = 3.0 / 1400.0;
    let se = (stats::sample_variance(&values) / reps as f64).sqrt();
    assert!(
        (bias - predicted).abs() <= 3.0 * se,
        "bias {bias:.6e} vs predicted {predicted:.6e} (3 se = {:.2e})",
        3.0 * se
    );
}

/// Feeding the exact moments of a Beta(α, β) into the fit must return the
/// same shape parameters for every combination over a wide range.
#[test]
fn beta_fit_recovers_exact_moments() {
    let shapes = [0.5, 1.0, 2.0, 5.0];
    for &alpha in &shapes {
        for &beta in &shapes {
            let mean = alpha / (alpha + beta);
            let second = alpha * (alpha + 1.0) / ((alpha + beta) * (alpha + beta + 1.0));
            let moments = MomentEstimates {
                mean,
                second_moment: second,
                variance: second - mean * mean,
            };
            let fit = beta_mom(&moments).unwrap();
            assert!(
                (fit.alpha - alpha).abs() <= 1e-12 && (fit.beta - beta).abs() <= 1e-12,
                "({alpha}, {beta}) came back as ({}, {})",
                fit.alpha,
                fit.beta
            );
        }
    }
}

/// The weighted sums behind the moment estimates are exactly unbiased for
/// E[X] and E[X²] whatever the inspection density, because the 1/q̄ weight
/// cancels it from the observed density. Monte Carlo means over many small
/// samples must land within three standard errors of the Beta(2, 2) truth.
#[test]
fn moment_estimates_are_unbiased_for_the_latent_moments() {
    let inspections = Family::TruncNorm {
        mu: 0.5,
        sigma: 0.3,
    };
    let qbar = |v: f64| inspections.pdf(v) + inspections.pdf(v - 1.0);
    let reps = 1_000u64;
    let mut means = Vec::with_capacity(reps as usize);
    let mut seconds = Vec::with_capacity(reps as usize);
    for rep in 0..reps {
        let generated = generate_css(&BETA22, &inspections, 100, 55_555, rep).unwrap();
        let data = transform(&generated.sample);
        let est = moment_estimates(data.values(), qbar).unwrap();
        means.push(est.mean);
        seconds.push(est.second_moment);
    }

    let m = stats::mean(&means);
    let se_m = (stats::sample_variance(&means) / reps as f64).sqrt();
    assert!(
        (m - 0.5).abs() <= 3.0 * se_m,
        "mean estimate averaged {m:.5}, expected 0.5 within {:.1e}",
        3.0 * se_m
    );

    let s = stats::mean(&seconds);
    let se_s = (stats::sample_variance(&seconds) / reps as f64).sqrt();
    assert!(
        (s - 0.3).abs() <= 3.0 * se_s,
        "second moment averaged {s:.5}, expected 0.3 within {:.1e}",
        3.0 * se_s
    );
}

/// Reordering the sample must not change a single bit of the estimates.
#[test]
fn moment_estimates_ignore_sample_order() {
    let inspections = Family::TruncNorm {
        mu: 0.5,
        sigma: 0.3,
    };
    let qbar = |v: f64| inspections.pdf(v) + inspections.pdf(v - 1.0);
    let generated = generate_css(&BETA22, &inspections, 500, 99, 0).unwrap();
    let data = transform(&generated.sample);
    let baseline = moment_estimates(data.values(), qbar).unwrap();

    let mut reversed = data.values().to_vec();
    reversed.reverse();
    let mut rotated = data.values().to_vec();
    rotated.rotate_left(123);

    for permuted in [reversed, rotated] {
        let est = moment_estimates(&permuted, qbar).unwrap();
        assert_eq!(est.mean.to_bits(), baseline.mean.to_bits());
        assert_eq!(est.second_moment.to_bits(), baseline.second_moment.to_bits());
        assert_eq!(est.variance.to_bits(), baseline.variance.to_bits());
    }
}

/// Supplying the inspection density as plain closures must route through the
/// same arithmetic as the built-in analytic mode: every estimate agrees
/// bit-for-bit.
#[test]
fn caller_supplied_weight_functions_match_the_analytic_path() {
    let family = Family::TruncNorm {
        mu: 0.5,
        sigma: 0.3,
    };
    let analytic = ObservationDensity::analytic(family.clone()).unwrap();
    let f = family.clone();
    let f1 = family.clone();
    let f2 = family.clone();
    let f3 = family.clone();
    let custom = ObservationDensity::custom(
        Arc::new(move |x| f.pdf(x)),
        Arc::new(move |x| f1.pdf_d1(x)),
        Some(Arc::new(move |x| f2.pdf_d2(x))),
        Some(Arc::new(move |x| f3.pdf_d3(x))),
    );

    let generated = generate_css(&BETA22, &family, 2_000, 4_242, 0).unwrap();
    let data = transform(&generated.sample);
    let kernel = Kernel::biweight();
    let g1 = GEstimate::new(&data, 0.15, &kernel).unwrap();
    let cdf_a = CdfEstimate::new(&data, 0.1, &kernel, &analytic).unwrap();
    let cdf_c = CdfEstimate::new(&data, 0.1, &kernel, &custom).unwrap();

    for &x in &[0.2, 0.35, 0.5, 0.65, 0.8] {
        let fm_a = g1.f_minus(&analytic, x).unwrap();
        let fm_c = g1.f_minus(&custom, x).unwrap();
        assert_eq!(fm_a.to_bits(), fm_c.to_bits(), "f_minus at {x}");

        let fp_a = g1.f_plus(&analytic, x).unwrap();
        let fp_c = g1.f_plus(&custom, x).unwrap();
        assert_eq!(fp_a.to_bits(), fp_c.to_bits(), "f_plus at {x}");

        let cdf_av = cdf_a.cdf_combined(x).unwrap();
        let cdf_cv = cdf_c.cdf_combined(x).unwrap();
        assert_eq!(cdf_av.to_bits(), cdf_cv.to_bits(), "cdf at {x}");

        let ff_a = g1
            .f_final(&analytic, |p| cdf_a.cdf_combined(p), x, false)
            .unwrap();
        let ff_c = g1
            .f_final(&custom, |p| cdf_c.cdf_combined(p), x, false)
            .unwrap();
        assert_eq!(ff_a.to_bits(), ff_c.to_bits(), "f_final at {x}");
    }
}
