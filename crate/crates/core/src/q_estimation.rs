//! The inspection-time density q and its estimation.
//!
//! The inversion estimators divide by q and its first derivative; the bias
//! expansions additionally need q″ and q‴. [`ObservationDensity`] abstracts
//! over where those values come from:
//!
//! * **Analytic**: a named [`Family`] with closed-form derivatives.
//! * **Estimated**: kernel estimates built from the inspection times
//!   themselves, with a dedicated derivative bandwidth h̃. Only derivatives
//!   up to second order are available, and the second requires a kernel
//!   with a stored second derivative.
//! * **Custom**: caller-supplied functions (useful for testing that the
//!   estimated path is a drop-in replacement for the analytic one).
//!
//! Estimation mode deliberately performs no boundary correction at 0 and 1;
//! the convex-combination density estimator is insensitive to the resulting
//! edge bias because the two inversion routes cancel it.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::families::Family;
use crate::kernels::Kernel;
use crate::stats;

type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Kernel estimate of q at `x` from raw inspection times.
pub fn q_hat(times: &[f64], htilde: f64, kernel: &Kernel, x: f64) -> f64 {
    let n = times.len() as f64;
    let sum: f64 = times.iter().map(|&t| kernel.eval((x - t) / htilde)).sum();
    sum / (n * htilde)
}

/// Kernel estimate of q′ at `x`.
pub fn q_hat_deriv(times: &[f64], htilde: f64, kernel: &Kernel, x: f64) -> f64 {
    let n = times.len() as f64;
    let sum: f64 = times
        .iter()
        .map(|&t| kernel.eval_deriv((x - t) / htilde))
        .sum();
    sum / (n * htilde * htilde)
}

/// Kernel estimates of (q′, q″) at `x`. The second derivative needs a kernel
/// with a stored second derivative.
pub fn q_hat_derivs(times: &[f64], htilde: f64, kernel: &Kernel, x: f64) -> Result<(f64, f64)> {
    let n = times.len() as f64;
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    for &t in times {
        let u = (x - t) / htilde;
        d1 += kernel.eval_deriv(u);
        d2 += kernel.eval_second_deriv(u)?;
    }
    let h2 = htilde * htilde;
    Ok((d1 / (n * h2), d2 / (n * h2 * htilde)))
}

/// Normal-reference derivative bandwidth h̃ = (336·√π)^{1/7} σ̂ n^{−1/7}.
///
/// The constant minimizes the asymptotic mean squared error of the
/// first-derivative estimate q̂′ (the quantity the inversion formulas
/// consume) when q is replaced by a normal density with the sample's
/// standard deviation.
pub fn default_htilde(times: &[f64]) -> f64 {
    let n = times.len() as f64;
    (336.0 * PI.sqrt()).powf(1.0 / 7.0) * stats::sample_sd(times) * n.powf(-1.0 / 7.0)
}

/// True when `htilde` deviates from the n^{−1/7} scale by more than a
/// factor of five in either direction.
pub fn htilde_scale_warning(htilde: f64, n: usize) -> bool {
    let reference = (n as f64).powf(-1.0 / 7.0);
    let ratio = htilde / reference;
    !(0.2..=5.0).contains(&ratio)
}

/// Kernel-estimated q built from a copy of the inspection times.
#[derive(Clone)]
pub struct EstimatedQ {
    times: Arc<[f64]>,
    htilde: f64,
    kernel: Kernel,
}

impl EstimatedQ {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn htilde(&self) -> f64 {
        self.htilde
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }
}

/// Caller-supplied q with optional higher derivatives.
#[derive(Clone)]
pub struct CustomQ {
    pub q: Fn1,
    pub q1: Fn1,
    pub q2: Option<Fn1>,
    pub q3: Option<Fn1>,
}

/// The inspection density consumed by every inversion estimator.
#[derive(Clone)]
pub enum ObservationDensity {
    Analytic(Family),
    Estimated(EstimatedQ),
    Custom(CustomQ),
}

impl fmt::Debug for ObservationDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObservationDensity::Analytic(fam) => write!(f, "ObservationDensity::Analytic({fam})"),
            ObservationDensity::Estimated(e) => f
                .debug_struct("ObservationDensity::Estimated")
                .field("n", &e.times.len())
                .field("htilde", &e.htilde)
                .field("kernel", &e.kernel.name())
                .finish(),
            ObservationDensity::Custom(_) => write!(f, "ObservationDensity::Custom"),
        }
    }
}

impl ObservationDensity {
    /// Analytic mode from a validated family.
    pub fn analytic(family: Family) -> Result<Self> {
        family.validate()?;
        Ok(ObservationDensity::Analytic(family))
    }

    /// Estimation mode from inspection times on the unit interval. When
    /// `htilde` is `None` the normal-reference default is used.
    pub fn estimated(times: Vec<f64>, htilde: Option<f64>, kernel: Kernel) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidSample(
                "cannot estimate q from an empty sample".to_string(),
            ));
        }
        if let Some(i) = times.iter().position(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::InvalidSample(format!(
                "inspection time {} at index {i} outside [0, 1]; rescale to unit support first",
                times[i]
            )));
        }
        let htilde = match htilde {
            Some(h) if h > 0.0 && h.is_finite() => h,
            Some(h) => {
                return Err(Error::InvalidBandwidth(format!(
                    "derivative bandwidth must be positive, got {h}"
                )))
            }
            None => default_htilde(&times),
        };
        Ok(ObservationDensity::Estimated(EstimatedQ {
            times: times.into(),
            htilde,
            kernel,
        }))
    }

    /// Custom mode from caller-supplied functions.
    pub fn custom(q: Fn1, q1: Fn1, q2: Option<Fn1>, q3: Option<Fn1>) -> Self {
        ObservationDensity::Custom(CustomQ { q, q1, q2, q3 })
    }

    pub fn is_estimated(&self) -> bool {
        matches!(self, ObservationDensity::Estimated(_))
    }

    /// The derivative bandwidth in estimation mode.
    pub fn htilde(&self) -> Option<f64> {
        match self {
            ObservationDensity::Estimated(e) => Some(e.htilde),
            _ => None,
        }
    }

    /// q(x).
    pub fn q(&self, x: f64) -> f64 {
        match self {
            ObservationDensity::Analytic(fam) => fam.pdf(x),
            ObservationDensity::Estimated(e) => q_hat(&e.times, e.htilde, &e.kernel, x),
            ObservationDensity::Custom(c) => (c.q)(x),
        }
    }

    /// q′(x).
    pub fn q_deriv(&self, x: f64) -> f64 {
        match self {
            ObservationDensity::Analytic(fam) => fam.pdf_d1(x),
            ObservationDensity::Estimated(e) => q_hat_deriv(&e.times, e.htilde, &e.kernel, x),
            ObservationDensity::Custom(c) => (c.q1)(x),
        }
    }

    /// q″(x); in estimation mode this needs a kernel second derivative.
    pub fn q_second(&self, x: f64) -> Result<f64> {
        match self {
            ObservationDensity::Analytic(fam) => Ok(fam.pdf_d2(x)),
            ObservationDensity::Estimated(e) => {
                Ok(q_hat_derivs(&e.times, e.htilde, &e.kernel, x)?.1)
            }
            ObservationDensity::Custom(c) => match &c.q2 {
                Some(q2) => Ok(q2(x)),
                None => Err(Error::MissingSecondDerivative("custom q".to_string())),
            },
        }
    }

    /// q‴(x); unavailable in estimation mode.
    pub fn q_third(&self, x: f64) -> Result<f64> {
        match self {
            ObservationDensity::Analytic(fam) => Ok(fam.pdf_d3(x)),
            ObservationDensity::Estimated(_) => Err(Error::MissingThirdDerivative),
            ObservationDensity::Custom(c) => match &c.q3 {
                Some(q3) => Ok(q3(x)),
                None => Err(Error::MissingThirdDerivative),
            },
        }
    }

    /// q̄(v) = q(v) + q(v − 1), the density factor of the transformed law.
    pub fn qbar(&self, v: f64) -> f64 {
        self.q(v) + self.q(v - 1.0)
    }
}
