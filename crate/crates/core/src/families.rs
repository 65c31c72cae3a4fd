//! Analytic distribution families on the unit interval.
//!
//! The same family type serves two roles: the law of the latent variable
//! (density f, CDF F and its derivatives enter the bias expansions) and the
//! law of the inspection time (density q and derivatives up to third order
//! enter the inversion formulas and bandwidth selector). Densities are zero
//! outside `[0, 1]`; CDFs clamp to 0 and 1 there.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta_reg, ln_beta};
use statrs::function::erf::erf;

use crate::error::{Error, Result};

/// A named family with analytic density, CDF, and density derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    Uniform,
    Beta { alpha: f64, beta: f64 },
    /// Normal(mu, sigma²) truncated to `[0, 1]`; `sigma` is the standard
    /// deviation of the untruncated normal.
    TruncNorm { mu: f64, sigma: f64 },
}

impl Family {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Family::Uniform => Ok(()),
            Family::Beta { alpha, beta } => {
                if alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidDistribution(format!(
                        "beta parameters must be positive, got ({alpha}, {beta})"
                    )))
                }
            }
            Family::TruncNorm { mu, sigma } => {
                if sigma > 0.0 && sigma.is_finite() && mu.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidDistribution(format!(
                        "truncated normal needs finite mu and sigma > 0, got ({mu}, {sigma})"
                    )))
                }
            }
        }
    }

    /// Density at `x` (zero outside `[0, 1]`).
    pub fn pdf(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        match *self {
            Family::Uniform => 1.0,
            Family::Beta { alpha, beta } => beta_pdf(alpha, beta, x),
            Family::TruncNorm { mu, sigma } => {
                let z = (x - mu) / sigma;
                std_normal_pdf(z) / (sigma * truncnorm_mass(mu, sigma))
            }
        }
    }

    /// CDF at `x` (clamped to 0 below the support and 1 above it).
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        match *self {
            Family::Uniform => x,
            Family::Beta { alpha, beta } => beta_reg(alpha, beta, x),
            Family::TruncNorm { mu, sigma } => {
                let lo = std_normal_cdf((0.0 - mu) / sigma);
                (std_normal_cdf((x - mu) / sigma) - lo) / truncnorm_mass(mu, sigma)
            }
        }
    }

    /// First derivative of the density inside the support, zero outside.
    pub fn pdf_d1(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        match *self {
            Family::Uniform => 0.0,
            Family::Beta { alpha, beta } => beta_pdf(alpha, beta, x) * beta_log_d1(alpha, beta, x),
            Family::TruncNorm { mu, sigma } => {
                let z = (x - mu) / sigma;
                -(z / sigma) * self.pdf(x)
            }
        }
    }

    /// Second derivative of the density inside the support, zero outside.
    pub fn pdf_d2(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        match *self {
            Family::Uniform => 0.0,
            Family::Beta { alpha, beta } => {
                let l1 = beta_log_d1(alpha, beta, x);
                let l2 = beta_log_d2(alpha, beta, x);
                beta_pdf(alpha, beta, x) * (l1 * l1 + l2)
            }
            Family::TruncNorm { mu, sigma } => {
                let z = (x - mu) / sigma;
                (z * z - 1.0) / (sigma * sigma) * self.pdf(x)
            }
        }
    }

    /// Third derivative of the density inside the support, zero outside.
    pub fn pdf_d3(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        match *self {
            Family::Uniform => 0.0,
            Family::Beta { alpha, beta } => {
                let l1 = beta_log_d1(alpha, beta, x);
                let l2 = beta_log_d2(alpha, beta, x);
                let l3 = beta_log_d3(alpha, beta, x);
                beta_pdf(alpha, beta, x) * (l1 * l1 * l1 + 3.0 * l1 * l2 + l3)
            }
            Family::TruncNorm { mu, sigma } => {
                let z = (x - mu) / sigma;
                z * (3.0 - z * z) / (sigma * sigma * sigma) * self.pdf(x)
            }
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Family::Uniform => write!(f, "uniform"),
            Family::Beta { alpha, beta } => write!(f, "beta:{alpha},{beta}"),
            Family::TruncNorm { mu, sigma } => write!(f, "truncnorm:{mu},{sigma}"),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    /// Parses `uniform`, `beta:A,B`, or `truncnorm:MU,SIGMA`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidDistribution(format!("`{s}`: {msg}"));
        let family = match s.split_once(':') {
            None if s == "uniform" => Family::Uniform,
            None => return Err(bad("expected uniform, beta:A,B, or truncnorm:MU,SIGMA")),
            Some((name, params)) => {
                let parts: Vec<&str> = params.split(',').collect();
                if parts.len() != 2 {
                    return Err(bad("expected two comma-separated parameters"));
                }
                let a: f64 = parts[0]
                    .trim()
                    .parse()
                    .map_err(|_| bad("parameters must be numbers"))?;
                let b: f64 = parts[1]
                    .trim()
                    .parse()
                    .map_err(|_| bad("parameters must be numbers"))?;
                match name {
                    "beta" => Family::Beta { alpha: a, beta: b },
                    "truncnorm" => Family::TruncNorm { mu: a, sigma: b },
                    _ => return Err(bad("unknown family name")),
                }
            }
        };
        family.validate()?;
        Ok(family)
    }
}

fn beta_pdf(alpha: f64, beta: f64, x: f64) -> f64 {
    x.powf(alpha - 1.0) * (1.0 - x).powf(beta - 1.0) / ln_beta(alpha, beta).exp()
}

/// d/dx log f for the Beta density.
fn beta_log_d1(alpha: f64, beta: f64, x: f64) -> f64 {
    (alpha - 1.0) / x - (beta - 1.0) / (1.0 - x)
}

fn beta_log_d2(alpha: f64, beta: f64, x: f64) -> f64 {
    -(alpha - 1.0) / (x * x) - (beta - 1.0) / ((1.0 - x) * (1.0 - x))
}

fn beta_log_d3(alpha: f64, beta: f64, x: f64) -> f64 {
    2.0 * (alpha - 1.0) / (x * x * x) - 2.0 * (beta - 1.0) / ((1.0 - x) * (1.0 - x) * (1.0 - x))
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

pub(crate) fn std_normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

/// Mass the untruncated Normal(mu, sigma²) puts on `[0, 1]`.
pub(crate) fn truncnorm_mass(mu: f64, sigma: f64) -> f64 {
    std_normal_cdf((1.0 - mu) / sigma) - std_normal_cdf((0.0 - mu) / sigma)
}
