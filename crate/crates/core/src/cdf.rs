//! Distribution function estimation for the latent event time.
//!
//! The identities g(x) = q(x)F(x) and g(x + 1) = q(x)(1 − F(x)) on the
//! transformed scale invert directly at the level of the density estimate:
//!
//! ```text
//! F⁻(x) = ĝ(x)/q(x),        F⁺(x) = 1 − ĝ(x + 1)/q(x),
//! Fᵗ(x) = t·F⁻(x) + (1 − t)·F⁺(x).
//! ```
//!
//! Both routes converge at the nh rate with variances proportional to F(x)
//! and 1 − F(x); the fixed-weight combination has variance constant
//! (t²F + (1 − t)²(1 − F))·∫w²/q. These estimates feed the plug-in weight of
//! the final density estimator, where a bandwidth slower than n^{−9/35}
//! keeps the weight noise below the density estimator's own error.

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::q_estimation::ObservationDensity;
use crate::transform::TransformedSample;

/// Default combination weight for the plug-in distribution estimate.
pub const DEFAULT_T_RULE: f64 = 0.5;

/// Kernel estimate of the latent distribution function.
#[derive(Debug)]
pub struct CdfEstimate<'a> {
    g: crate::density::GEstimate<'a>,
    q: &'a ObservationDensity,
    t_rule: f64,
}

impl<'a> CdfEstimate<'a> {
    pub fn new(
        data: &'a TransformedSample,
        h2: f64,
        kernel: &'a Kernel,
        q: &'a ObservationDensity,
    ) -> Result<Self> {
        Ok(CdfEstimate {
            g: crate::density::GEstimate::new(data, h2, kernel)?,
            q,
            t_rule: DEFAULT_T_RULE,
        })
    }

    /// Overrides the combination weight (must lie in `[0, 1]`).
    pub fn with_t_rule(mut self, t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) || !t.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "combination weight must lie in [0, 1], got {t}"
            )));
        }
        self.t_rule = t;
        Ok(self)
    }

    pub fn h2(&self) -> f64 {
        self.g.h()
    }

    pub fn t_rule(&self) -> f64 {
        self.t_rule
    }

    fn checked_q(&self, x: f64) -> Result<f64> {
        if !(0.0 < x && x < 1.0) {
            return Err(Error::EvaluationPoint { x });
        }
        let qx = self.q.q(x);
        if qx <= crate::density::Q_FLOOR {
            return Err(Error::DegenerateObservationDensity {
                x,
                q: qx,
                floor: crate::density::Q_FLOOR,
            });
        }
        Ok(qx)
    }

    /// Left route F⁻(x) = ĝ(x)/q(x).
    pub fn cdf_minus(&self, x: f64) -> Result<f64> {
        Ok(self.g.g_hat(x) / self.checked_q(x)?)
    }

    /// Right route F⁺(x) = 1 − ĝ(x + 1)/q(x).
    pub fn cdf_plus(&self, x: f64) -> Result<f64> {
        Ok(1.0 - self.g.g_hat(x + 1.0) / self.checked_q(x)?)
    }

    /// Combination with the configured weight.
    pub fn cdf_combined(&self, x: f64) -> Result<f64> {
        self.cdf_combined_with(self.t_rule, x)
    }

    /// Combination t·F⁻(x) + (1 − t)·F⁺(x) with an explicit weight.
    pub fn cdf_combined_with(&self, t: f64, x: f64) -> Result<f64> {
        Ok(t * self.cdf_minus(x)? + (1.0 - t) * self.cdf_plus(x)?)
    }
}

/// Relationship between the density bandwidth h₁ and the plug-in weight
/// bandwidth h₂.
///
/// The weight estimate does not degrade the density estimator when
/// h₂⁵ ≫ h₁⁷, i.e. when h₁ stays above the n^{−9/35} scale for h₂ of the
/// usual n^{−1/5} order.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingDiagnostics {
    pub h1: f64,
    pub h2: f64,
    /// The n^{−9/35} reference scale for h₁.
    pub h1_floor: f64,
    /// The n^{−1/5} reference scale for h₂.
    pub h2_reference: f64,
    pub satisfied: bool,
    pub warnings: Vec<String>,
}

/// Checks the bandwidth coupling for a sample of size `n`: h₁ at or above
/// the n^{−9/35} scale, h₂ within a factor 3 of n^{−1/5}.
pub fn validate_bandwidth_coupling(h1: f64, h2: f64, n: usize) -> Result<CouplingDiagnostics> {
    if !(h1 > 0.0 && h1.is_finite()) || !(h2 > 0.0 && h2.is_finite()) {
        return Err(Error::InvalidBandwidth(format!(
            "bandwidths must be positive and finite, got h1 = {h1}, h2 = {h2}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidSample(
            "bandwidth coupling needs a nonempty sample".to_string(),
        ));
    }
    let nf = n as f64;
    let h1_floor = nf.powf(-9.0 / 35.0);
    let h2_reference = nf.powf(-0.2);
    let mut warnings = Vec::new();
    if h1 < h1_floor {
        warnings.push(format!(
            "density bandwidth h1 = {h1:.6} sits below the n^(-9/35) scale \
             {h1_floor:.6}; the plug-in weight may dominate the error"
        ));
    }
    if h2 < h2_reference / 3.0 || h2 > 3.0 * h2_reference {
        warnings.push(format!(
            "weight bandwidth h2 = {h2:.6} is far from the n^(-1/5) scale \
             {h2_reference:.6}"
        ));
    }
    Ok(CouplingDiagnostics {
        h1,
        h2,
        h1_floor,
        h2_reference,
        satisfied: warnings.is_empty(),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::Family;
    use approx::assert_abs_diff_eq;

    fn sample(values: &[f64]) -> TransformedSample {
        TransformedSample::new(values.to_vec(), (0.0, 1.0)).unwrap()
    }

    #[test]
    fn single_observation_values() {
        let data = sample(&[0.5]);
        let k = Kernel::biweight();
        let q = ObservationDensity::analytic(Family::Uniform).unwrap();
        let est = CdfEstimate::new(&data, 0.1, &k, &q).unwrap();
        // ĝ(0.5) = w(0)/h = 9.375, and the right window sees no data.
        assert_abs_diff_eq!(est.cdf_minus(0.5).unwrap(), 9.375);
        assert_eq!(est.cdf_plus(0.5).unwrap(), 1.0);
        assert_eq!(est.cdf_minus(0.8).unwrap(), 0.0);
    }

    #[test]
    fn routes_agree_through_the_observed_density_identity() {
        // F⁻ − (1 − F⁺) differs from 0 exactly by (ĝ(x) + ĝ(x+1) − q(x))/q(x)
        // evaluated against the estimate; equivalently
        // t F⁻ + (1−t) F⁺ is affine in t.
        let data = sample(&[0.2, 0.7, 1.1, 1.4, 1.9]);
        let k = Kernel::biweight();
        let q = ObservationDensity::analytic(Family::Uniform).unwrap();
        let est = CdfEstimate::new(&data, 0.25, &k, &q).unwrap();
        let x = 0.55;
        let minus = est.cdf_minus(x).unwrap();
        let plus = est.cdf_plus(x).unwrap();
        let g_sum = {
            let g = crate::density::GEstimate::new(&data, 0.25, &k).unwrap();
            g.g_hat(x) + g.g_hat(x + 1.0)
        };
        assert_abs_diff_eq!(minus - plus, g_sum - 1.0, epsilon = 1e-14);
        for t in [0.0, 0.3, 0.5, 1.0] {
            assert_abs_diff_eq!(
                est.cdf_combined_with(t, x).unwrap(),
                t * minus + (1.0 - t) * plus,
                epsilon = 1e-15
            );
        }
        assert_abs_diff_eq!(
            est.cdf_combined(x).unwrap(),
            0.5 * (minus + plus),
            epsilon = 1e-15
        );
    }

    #[test]
    fn t_rule_overrides_and_validation() {
        let data = sample(&[0.5]);
        let k = Kernel::biweight();
        let q = ObservationDensity::analytic(Family::Uniform).unwrap();
        let est = CdfEstimate::new(&data, 0.1, &k, &q)
            .unwrap()
            .with_t_rule(1.0)
            .unwrap();
        assert_eq!(est.cdf_combined(0.5).unwrap(), est.cdf_minus(0.5).unwrap());
        let est = CdfEstimate::new(&data, 0.1, &k, &q).unwrap();
        assert!(est.with_t_rule(1.5).is_err());
        let est = CdfEstimate::new(&data, 0.1, &k, &q).unwrap();
        assert!(est.with_t_rule(-0.1).is_err());
    }

    #[test]
    fn evaluation_domain_is_the_open_interval() {
        let data = sample(&[0.5]);
        let k = Kernel::biweight();
        let q = ObservationDensity::analytic(Family::Uniform).unwrap();
        let est = CdfEstimate::new(&data, 0.1, &k, &q).unwrap();
        assert!(est.cdf_minus(0.0).is_err());
        assert!(est.cdf_plus(1.0).is_err());
    }

    #[test]
    fn coupling_diagnostics() {
        let n = 10_000;
        // n^{-9/35} ≈ 0.0937, n^{-1/5} ≈ 0.1585.
        let d = validate_bandwidth_coupling(0.2, 0.15, n).unwrap();
        assert!(d.satisfied, "{:?}", d.warnings);
        assert_abs_diff_eq!(d.h1_floor, 0.09368, epsilon = 5e-5);
        assert_abs_diff_eq!(d.h2_reference, 0.15849, epsilon = 5e-5);

        let d = validate_bandwidth_coupling(0.05, 0.15, n).unwrap();
        assert!(!d.satisfied);
        assert_eq!(d.warnings.len(), 1);
        assert!(d.warnings[0].contains("below the n^(-9/35) scale"));

        let d = validate_bandwidth_coupling(0.2, 0.01, n).unwrap();
        assert!(!d.satisfied);
        assert!(d.warnings[0].contains("far from the n^(-1/5) scale"));

        assert!(validate_bandwidth_coupling(0.0, 0.1, n).is_err());
        assert!(validate_bandwidth_coupling(0.1, 0.1, 0).is_err());
    }
}
