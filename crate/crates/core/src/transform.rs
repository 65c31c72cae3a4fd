//! Current status samples and the shift transform.
//!
//! A current status observation is a pair (tᵢ, δᵢ): an inspection time and
//! the indicator that the latent event happened at or before it. On support
//! `[a, b]` the transform maps each record to a single value
//!
//! ```text
//! vᵢ = tᵢ            if δᵢ = 1,
//! vᵢ = tᵢ + (b − a)  if δᵢ = 0,
//! ```
//!
//! so censored records are shifted into `(b, 2b − a]` and the pair is
//! recoverable from vᵢ alone. On the unit interval the transformed values
//! have density g(v) = q̄(v)(F(v) − F(v − 1)) with q̄(v) = q(v) + q(v − 1),
//! which satisfies g(x) + g(x + 1) = q(x); the estimators in this crate
//! invert that relation.

use crate::error::{Error, Result};
use crate::q_estimation::ObservationDensity;

/// Raw current status data: inspection times, status indicators, support.
#[derive(Clone, Debug, PartialEq)]
pub struct CurrentStatusSample {
    times: Vec<f64>,
    statuses: Vec<bool>,
    support: (f64, f64),
}

impl CurrentStatusSample {
    /// Validates lengths, the support interval, and that every inspection
    /// time lies inside the support.
    pub fn new(times: Vec<f64>, statuses: Vec<bool>, support: (f64, f64)) -> Result<Self> {
        let (a, b) = support;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidSample(format!(
                "support must be a finite interval, got [{a}, {b}]"
            )));
        }
        if times.is_empty() {
            return Err(Error::InvalidSample("sample is empty".to_string()));
        }
        if times.len() != statuses.len() {
            return Err(Error::InvalidSample(format!(
                "{} inspection times but {} status indicators",
                times.len(),
                statuses.len()
            )));
        }
        if let Some(i) = times.iter().position(|t| !(a..=b).contains(t)) {
            return Err(Error::InvalidSample(format!(
                "inspection time {} at index {i} outside support [{a}, {b}]",
                times[i]
            )));
        }
        Ok(CurrentStatusSample {
            times,
            statuses,
            support,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn statuses(&self) -> &[bool] {
        &self.statuses
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    /// Rescales the sample to unit support. Densities estimated on the unit
    /// scale must be divided by `map.width()` to return to the original one.
    pub fn to_unit(&self) -> (CurrentStatusSample, SupportMap) {
        let map = SupportMap {
            a: self.support.0,
            b: self.support.1,
        };
        let times = self.times.iter().map(|&t| map.to_unit(t)).collect();
        (
            CurrentStatusSample {
                times,
                statuses: self.statuses.clone(),
                support: (0.0, 1.0),
            },
            map,
        )
    }
}

/// The affine map between an original support `[a, b]` and `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupportMap {
    pub a: f64,
    pub b: f64,
}

impl SupportMap {
    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    pub fn to_unit(&self, x: f64) -> f64 {
        (x - self.a) / self.width()
    }

    pub fn from_unit(&self, u: f64) -> f64 {
        self.a + u * self.width()
    }
}

/// Transformed observations vᵢ on `[a, 2b − a]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformedSample {
    values: Vec<f64>,
    support: (f64, f64),
}

impl TransformedSample {
    /// Wraps precomputed transformed values; every value must lie in
    /// `[a, 2b − a]`.
    pub fn new(values: Vec<f64>, support: (f64, f64)) -> Result<Self> {
        let (a, b) = support;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidSample(format!(
                "support must be a finite interval, got [{a}, {b}]"
            )));
        }
        if values.is_empty() {
            return Err(Error::InvalidSample("sample is empty".to_string()));
        }
        let hi = 2.0 * b - a;
        if let Some(i) = values.iter().position(|v| !(a..=hi).contains(v)) {
            return Err(Error::InvalidSample(format!(
                "transformed value {} at index {i} outside [{a}, {hi}]",
                values[i]
            )));
        }
        Ok(TransformedSample { values, support })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    /// True when the sample lives on the unit interval, the convention all
    /// estimators in this crate assume.
    pub fn is_unit_support(&self) -> bool {
        self.support == (0.0, 1.0)
    }
}

/// Applies the shift transform to every record.
pub fn transform(sample: &CurrentStatusSample) -> TransformedSample {
    let (a, b) = sample.support();
    let width = b - a;
    let values = sample
        .times
        .iter()
        .zip(&sample.statuses)
        .map(|(&t, &d)| if d { t } else { t + width })
        .collect();
    TransformedSample {
        values,
        support: (a, b),
    }
}

/// Recovers the original records from transformed values. Values at most `b`
/// decode as uncensored observations; the boundary point `v = b` (which has
/// probability zero under a continuous inspection law) decodes as δ = 1.
pub fn invert(sample: &TransformedSample) -> CurrentStatusSample {
    let (a, b) = sample.support;
    let width = b - a;
    let mut times = Vec::with_capacity(sample.len());
    let mut statuses = Vec::with_capacity(sample.len());
    for &v in &sample.values {
        if v <= b {
            times.push(v);
            statuses.push(true);
        } else {
            times.push(v - width);
            statuses.push(false);
        }
    }
    CurrentStatusSample {
        times,
        statuses,
        support: (a, b),
    }
}

/// Density of the transformed observation on the unit-support convention:
/// g(v) = q̄(v)(F(v) − F(v − 1)), where `cdf` is the latent CDF (clamped to
/// 0 below 0 and 1 above 1) and q̄ comes from the observation density.
pub fn true_g<F: Fn(f64) -> f64>(v: f64, cdf: F, q: &ObservationDensity) -> f64 {
    let qbar = q.qbar(v);
    if qbar == 0.0 {
        return 0.0;
    }
    qbar * (cdf(v) - cdf(v - 1.0))
}
