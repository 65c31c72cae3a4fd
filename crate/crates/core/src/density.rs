//! Density estimation for the latent event time.
//!
//! With transformed observations vᵢ on `[0, 2]` and bandwidth h, the
//! building blocks are the kernel estimates of the observed density and its
//! derivative,
//!
//! ```text
//! ĝ(x)  = (1/(nh))  Σ w((x − vᵢ)/h),
//! ĝ′(x) = (1/(nh²)) Σ w′((x − vᵢ)/h).
//! ```
//!
//! Differentiating g(x) = q(x)F(x) and g(x + 1) = q(x)(1 − F(x)) gives two
//! inversion routes to the latent density,
//!
//! ```text
//! f⁻(x) =   ĝ′(x)/q(x)     − q′(x) ĝ(x)/q(x)²,
//! f⁺(x) = −(ĝ′(x + 1)/q(x) − q′(x) ĝ(x + 1)/q(x)²),
//! ```
//!
//! whose asymptotic variances are proportional to F(x) and 1 − F(x)
//! respectively. The convex combination with weight t = 1 − F(x) minimizes
//! the combined variance; the final estimator plugs in a distribution
//! function estimate for the weight. Estimates are confined to the open
//! interval (0, 1): at the endpoints one of the two routes carries no
//! information and the combination degenerates.

use crate::error::{Error, Result};
use crate::families::Family;
use crate::kernels::Kernel;
use crate::q_estimation::ObservationDensity;
use crate::quad;

/// Smallest inspection-density value accepted at an inversion division.
pub const Q_FLOOR: f64 = 1e-8;

/// Trim distance of the default evaluation grid from the support endpoints.
pub const GRID_TRIM: f64 = 0.0025;
/// Number of points in the default evaluation grid.
pub const DEFAULT_GRID_POINTS: usize = 401;

/// Equispaced evaluation grid of `points` values on
/// `[GRID_TRIM, 1 − GRID_TRIM]`.
pub fn grid(points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::InvalidConfig(format!(
            "grid needs at least 2 points, got {points}"
        )));
    }
    let lo = GRID_TRIM;
    let hi = 1.0 - GRID_TRIM;
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points).map(|i| lo + i as f64 * step).collect())
}

/// The default 401-point evaluation grid.
pub fn default_grid() -> Vec<f64> {
    grid(DEFAULT_GRID_POINTS).expect("default grid size is valid")
}

/// Kernel estimate of the observed density, bound to a transformed sample,
/// a bandwidth, and a kernel.
#[derive(Debug)]
pub struct GEstimate<'a> {
    data: &'a crate::transform::TransformedSample,
    h: f64,
    kernel: &'a Kernel,
}

impl<'a> GEstimate<'a> {
    /// Requires unit support (rescale first) and a positive bandwidth.
    pub fn new(
        data: &'a crate::transform::TransformedSample,
        h: f64,
        kernel: &'a Kernel,
    ) -> Result<Self> {
        if !data.is_unit_support() {
            return Err(Error::InvalidSample(
                "estimators assume unit support; rescale the sample first".to_string(),
            ));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidBandwidth(format!(
                "bandwidth must be positive and finite, got {h}"
            )));
        }
        Ok(GEstimate { data, h, kernel })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn kernel(&self) -> &Kernel {
        self.kernel
    }

    pub fn data(&self) -> &crate::transform::TransformedSample {
        self.data
    }

    /// True when h ≥ 1/2, where the two kernel windows of the combined
    /// estimator can overlap across the support midpoint. Estimation still
    /// proceeds; callers should surface the warning.
    pub fn wide_bandwidth(&self) -> bool {
        self.h >= 0.5
    }

    /// ĝ(x).
    pub fn g_hat(&self, x: f64) -> f64 {
        let n = self.data.len() as f64;
        let sum: f64 = self
            .data
            .values()
            .iter()
            .map(|&v| self.kernel.eval((x - v) / self.h))
            .sum();
        sum / (n * self.h)
    }

    /// ĝ′(x).
    pub fn g_hat_deriv(&self, x: f64) -> f64 {
        let n = self.data.len() as f64;
        let sum: f64 = self
            .data
            .values()
            .iter()
            .map(|&v| self.kernel.eval_deriv((x - v) / self.h))
            .sum();
        sum / (n * self.h * self.h)
    }

    /// Left inversion estimator f⁻(x).
    pub fn f_minus(&self, q: &ObservationDensity, x: f64) -> Result<f64> {
        let qx = checked_q(q, x)?;
        Ok(invert_minus(self.g_hat(x), self.g_hat_deriv(x), qx, q.q_deriv(x)))
    }

    /// Right inversion estimator f⁺(x).
    pub fn f_plus(&self, q: &ObservationDensity, x: f64) -> Result<f64> {
        let qx = checked_q(q, x)?;
        Ok(invert_plus(
            self.g_hat(x + 1.0),
            self.g_hat_deriv(x + 1.0),
            qx,
            q.q_deriv(x),
        ))
    }

    /// Convex combination t·f⁻(x) + (1 − t)·f⁺(x) with a fixed weight.
    pub fn f_combined(&self, q: &ObservationDensity, t: f64, x: f64) -> Result<f64> {
        Ok(t * self.f_minus(q, x)? + (1.0 - t) * self.f_plus(q, x)?)
    }

    /// Final estimator with an estimated weight:
    /// (1 − F̂(x))·f⁻(x) + F̂(x)·f⁺(x).
    ///
    /// The plug-in weight is used as supplied; it is not clamped to `[0, 1]`
    /// unless `clamp_weight` is set (distribution estimates can leave the
    /// unit interval near the support ends).
    pub fn f_final<Fhat>(
        &self,
        q: &ObservationDensity,
        fhat: Fhat,
        x: f64,
        clamp_weight: bool,
    ) -> Result<f64>
    where
        Fhat: FnOnce(f64) -> Result<f64>,
    {
        let mut cdf = fhat(x)?;
        if clamp_weight {
            cdf = cdf.clamp(0.0, 1.0);
        }
        self.f_combined(q, 1.0 - cdf, x)
    }
}

/// Weight minimizing the combined-estimator variance at a point where the
/// latent CDF equals `cdf_x`.
pub fn optimal_t(cdf_x: f64) -> f64 {
    1.0 - cdf_x
}

/// Left inversion from observed-density values: g′(x)/q − q′·g(x)/q².
/// Shared by the direct and binned evaluation paths.
pub(crate) fn invert_minus(g: f64, g1: f64, qx: f64, q1x: f64) -> f64 {
    g1 / qx - q1x * g / (qx * qx)
}

/// Right inversion from values at x + 1: −(g′(x+1)/q − q′·g(x+1)/q²).
pub(crate) fn invert_plus(g_shift: f64, g1_shift: f64, qx: f64, q1x: f64) -> f64 {
    -(g1_shift / qx - q1x * g_shift / (qx * qx))
}

fn checked_q(q: &ObservationDensity, x: f64) -> Result<f64> {
    if !(0.0 < x && x < 1.0) {
        return Err(Error::EvaluationPoint { x });
    }
    let qx = q.q(x);
    if qx <= Q_FLOOR {
        return Err(Error::DegenerateObservationDensity {
            x,
            q: qx,
            floor: Q_FLOOR,
        });
    }
    Ok(qx)
}

/// Clips negative density values to zero and renormalizes to unit mass on
/// the grid (trapezoid rule). Returns the values unchanged when the clipped
/// curve carries no mass.
pub fn clip_and_renormalize(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = ys.iter().map(|&y| y.max(0.0)).collect();
    let mass = quad::trapezoid(xs, &clipped);
    if mass <= 0.0 {
        return clipped;
    }
    clipped.iter().map(|&y| y / mass).collect()
}

/// Asymptotic bias and variance constants for the inversion estimators under
/// analytically known latent and inspection laws.
///
/// Writing g for the observed density, the leading bias of f⁻ and f⁺ is
/// (h²/2)·∫v²w·b∓(x) with
///
/// ```text
/// b⁻(x) = g‴(x)/q(x)     − q′(x) g″(x)/q(x)²,
/// b⁺(x) = −g‴(x + 1)/q(x) + q′(x) g″(x + 1)/q(x)²,
/// ```
///
/// and the leading variances are F(x)·∫w′²/(q(x)nh³) for f⁻ and
/// (1 − F(x))·∫w′²/(q(x)nh³) for f⁺.
#[derive(Clone, Debug)]
pub struct TheoreticalExpansion {
    x_family: Family,
    q_family: Family,
    kernel: Kernel,
}

impl TheoreticalExpansion {
    pub fn new(x_family: Family, q_family: Family, kernel: Kernel) -> Result<Self> {
        x_family.validate()?;
        q_family.validate()?;
        Ok(TheoreticalExpansion {
            x_family,
            q_family,
            kernel,
        })
    }

    pub fn x_family(&self) -> &Family {
        &self.x_family
    }

    pub fn q_family(&self) -> &Family {
        &self.q_family
    }

    fn parts(&self, x: f64) -> (f64, f64, f64, f64, f64, f64, f64, f64) {
        (
            self.x_family.cdf(x),
            self.x_family.pdf(x),
            self.x_family.pdf_d1(x),
            self.x_family.pdf_d2(x),
            self.q_family.pdf(x),
            self.q_family.pdf_d1(x),
            self.q_family.pdf_d2(x),
            self.q_family.pdf_d3(x),
        )
    }

    /// b⁻(x) in explicit form:
    /// (q q‴ F + 3 q q″ f + 2 q q′ f′ + q² f″ − q′ q″ F − 2 q′² f)/q².
    pub fn b_minus(&self, x: f64) -> f64 {
        let (cdf, f, f1, f2, q, q1, q2, q3) = self.parts(x);
        (q * q3 * cdf + 3.0 * q * q2 * f + 2.0 * q * q1 * f1 + q * q * f2
            - q1 * q2 * cdf
            - 2.0 * q1 * q1 * f)
            / (q * q)
    }

    /// b⁺(x) in explicit form:
    /// (−q q‴ (1 − F) + 3 q q″ f + 2 q q′ f′ + q² f″ + q′ q″ (1 − F) − 2 q′² f)/q².
    pub fn b_plus(&self, x: f64) -> f64 {
        let (cdf, f, f1, f2, q, q1, q2, q3) = self.parts(x);
        let sf = 1.0 - cdf;
        (-q * q3 * sf + 3.0 * q * q2 * f + 2.0 * q * q1 * f1 + q * q * f2 + q1 * q2 * sf
            - 2.0 * q1 * q1 * f)
            / (q * q)
    }

    /// The weighted bias combination t·b⁻(x) + (1 − t)·b⁺(x).
    pub fn bias_combination(&self, t: f64, x: f64) -> f64 {
        t * self.b_minus(x) + (1.0 - t) * self.b_plus(x)
    }

    /// The t = 1 − F(x) combination in its reduced form
    /// (3 q q″ f + 2 q q′ f′ + q² f″ − 2 q′² f)/q²,
    /// which collapses to f″(x) for a uniform inspection law.
    pub fn bias_reduced(&self, x: f64) -> f64 {
        let (_, f, f1, f2, q, q1, q2, _) = self.parts(x);
        (3.0 * q * q2 * f + 2.0 * q * q1 * f1 + q * q * f2 - 2.0 * q1 * q1 * f) / (q * q)
    }

    /// Variance constant of f⁻: F(x)·∫w′²/q(x) (divide by nh³).
    pub fn var_const_minus(&self, x: f64) -> f64 {
        self.x_family.cdf(x) * self.kernel.deriv_sq_norm() / self.q_family.pdf(x)
    }

    /// Variance constant of f⁺: (1 − F(x))·∫w′²/q(x) (divide by nh³).
    pub fn var_const_plus(&self, x: f64) -> f64 {
        (1.0 - self.x_family.cdf(x)) * self.kernel.deriv_sq_norm() / self.q_family.pdf(x)
    }

    /// Variance constant of the fixed-weight combination:
    /// (t²F + (1 − t)²(1 − F))·∫w′²/q (divide by nh³).
    pub fn var_const_combined(&self, t: f64, x: f64) -> f64 {
        let cdf = self.x_family.cdf(x);
        (t * t * cdf + (1.0 - t) * (1.0 - t) * (1.0 - cdf)) * self.kernel.deriv_sq_norm()
            / self.q_family.pdf(x)
    }

    /// Variance constant of the optimally weighted estimator:
    /// F(x)(1 − F(x))·∫w′²/q (divide by nh³).
    pub fn var_const_final(&self, x: f64) -> f64 {
        let cdf = self.x_family.cdf(x);
        cdf * (1.0 - cdf) * self.kernel.deriv_sq_norm() / self.q_family.pdf(x)
    }

    /// Leading bias of the optimally weighted estimator at bandwidth `h`:
    /// (h²/2)·∫v²w·((1 − F)b⁻ + F b⁺)(x).
    pub fn bias_final(&self, h: f64, x: f64) -> f64 {
        0.5 * h * h * self.kernel.moment2() * self.bias_reduced(x)
    }

    /// Leading standard deviation of the optimally weighted estimator.
    pub fn sd_final(&self, n: usize, h: f64, x: f64) -> f64 {
        (self.var_const_final(x) / (n as f64 * h * h * h)).sqrt()
    }

    /// Second derivative of the observed density, computed symbolically from
    /// g = q̄·(F − F(· − 1)) on either branch of the support.
    pub fn g_deriv2(&self, v: f64) -> f64 {
        if v <= 1.0 {
            let (cdf, f, f1, ..) = self.parts(v);
            let q = self.q_family.pdf(v);
            let q1 = self.q_family.pdf_d1(v);
            let q2 = self.q_family.pdf_d2(v);
            q2 * cdf + 2.0 * q1 * f + q * f1
        } else {
            let y = v - 1.0;
            let (cdf, f, f1, ..) = self.parts(y);
            let q = self.q_family.pdf(y);
            let q1 = self.q_family.pdf_d1(y);
            let q2 = self.q_family.pdf_d2(y);
            q2 * (1.0 - cdf) - 2.0 * q1 * f - q * f1
        }
    }

    /// Third derivative of the observed density, symbolically.
    pub fn g_deriv3(&self, v: f64) -> f64 {
        if v <= 1.0 {
            let (cdf, f, f1, f2, q, q1, q2, q3) = self.parts(v);
            q3 * cdf + 3.0 * q2 * f + 3.0 * q1 * f1 + q * f2
        } else {
            let y = v - 1.0;
            let (cdf, f, f1, f2, q, q1, q2, q3) = self.parts(y);
            q3 * (1.0 - cdf) - 3.0 * q2 * f - 3.0 * q1 * f1 - q * f2
        }
    }

    /// b⁻(x) assembled from the g-derivative route; agrees with
    /// [`Self::b_minus`] and serves as its independent cross-check.
    pub fn b_minus_from_g(&self, x: f64) -> f64 {
        let q = self.q_family.pdf(x);
        let q1 = self.q_family.pdf_d1(x);
        self.g_deriv3(x) / q - q1 * self.g_deriv2(x) / (q * q)
    }

    /// b⁺(x) assembled from the g-derivative route.
    pub fn b_plus_from_g(&self, x: f64) -> f64 {
        let q = self.q_family.pdf(x);
        let q1 = self.q_family.pdf_d1(x);
        -self.g_deriv3(x + 1.0) / q + q1 * self.g_deriv2(x + 1.0) / (q * q)
    }
}
