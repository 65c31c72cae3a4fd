//! Smoothing kernels on `[-1, 1]`.
//!
//! Every estimator in this crate consumes a [`Kernel`]: a continuously
//! differentiable symmetric probability density supported on `[-1, 1]`,
//! together with its derivative and the three functionals the asymptotic
//! expansions need,
//!
//! | functional       | definition      | biweight value |
//! |------------------|-----------------|----------------|
//! | `moment2`        | ∫ u² w(u) du    | 1/7            |
//! | `sq_norm`        | ∫ w(u)² du      | 5/7            |
//! | `deriv_sq_norm`  | ∫ w′(u)² du     | 15/7           |
//!
//! The default (and only named) kernel is the biweight
//! w(u) = (15/16)(1 − u²)², whose derivative vanishes at the support
//! endpoints, so it is C¹ on the whole line. Its second derivative
//! w″(u) = −(15/4)(1 − 3u²) jumps at ±1; the second derivative is only used
//! to estimate derivatives of the inspection density, where that is
//! acceptable.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quad;

/// Absolute tolerance for |∫w − 1|.
pub const NORMALIZATION_TOL: f64 = 1e-6;
/// Tolerance for the pointwise symmetry check w(u) = w(−u).
const SYMMETRY_TOL: f64 = 1e-10;
/// Tolerance for agreement between the stored derivative and central finite
/// differences of w at interior points.
const DERIVATIVE_FD_TOL: f64 = 1e-6;
const DERIVATIVE_FD_STEP: f64 = 1e-5;
const QUAD_TOL: f64 = 1e-12;

type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Body {
    Biweight,
    Custom {
        w: Fn1,
        w1: Fn1,
        w2: Option<Fn1>,
    },
}

/// A validated smoothing kernel with precomputed functionals.
#[derive(Clone)]
pub struct Kernel {
    name: String,
    body: Body,
    moment2: f64,
    sq_norm: f64,
    deriv_sq_norm: f64,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel")
            .field("name", &self.name)
            .field("moment2", &self.moment2)
            .field("sq_norm", &self.sq_norm)
            .field("deriv_sq_norm", &self.deriv_sq_norm)
            .finish()
    }
}

impl Kernel {
    /// The biweight kernel with closed-form functionals.
    pub fn biweight() -> Self {
        Kernel {
            name: "biweight".to_string(),
            body: Body::Biweight,
            moment2: 1.0 / 7.0,
            sq_norm: 5.0 / 7.0,
            deriv_sq_norm: 15.0 / 7.0,
        }
    }

    /// Looks a kernel up by name. Only `"biweight"` is built in.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "biweight" => Ok(Self::biweight()),
            other => Err(Error::UnknownKernel(other.to_string())),
        }
    }

    /// Builds a kernel from user-supplied functions, validating the kernel
    /// contract and computing the functionals by quadrature.
    pub fn from_fns<W, W1>(name: &str, w: W, w1: W1, w2: Option<Fn1>) -> Result<Self>
    where
        W: Fn(f64) -> f64 + Send + Sync + 'static,
        W1: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let kernel = Self::from_fns_unchecked(name, w, w1, w2)?;
        kernel.validate()?;
        Ok(kernel)
    }

    /// Builds a kernel without checking the contract. Normalization is still
    /// enforced (the functionals are meaningless otherwise); symmetry,
    /// nonnegativity, support, and C¹ continuity are not. Intended for
    /// experiments with deliberately non-conforming kernels.
    pub fn from_fns_unchecked<W, W1>(name: &str, w: W, w1: W1, w2: Option<Fn1>) -> Result<Self>
    where
        W: Fn(f64) -> f64 + Send + Sync + 'static,
        W1: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let w: Fn1 = Arc::new(w);
        let w1: Fn1 = Arc::new(w1);
        let (moment2, sq_norm, deriv_sq_norm) = functionals(&*w, &*w1)?;
        Ok(Kernel {
            name: name.to_string(),
            body: Body::Custom { w, w1, w2 },
            moment2,
            sq_norm,
            deriv_sq_norm,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// w(u); zero outside `[-1, 1]`.
    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        if !(-1.0..=1.0).contains(&u) {
            return 0.0;
        }
        match &self.body {
            Body::Biweight => {
                let s = 1.0 - u * u;
                0.9375 * s * s
            }
            Body::Custom { w, .. } => w(u),
        }
    }

    /// w′(u); zero outside `[-1, 1]`.
    #[inline]
    pub fn eval_deriv(&self, u: f64) -> f64 {
        if !(-1.0..=1.0).contains(&u) {
            return 0.0;
        }
        match &self.body {
            Body::Biweight => -3.75 * u * (1.0 - u * u),
            Body::Custom { w1, .. } => w1(u),
        }
    }

    /// w″(u) where available; zero outside `[-1, 1]`.
    #[inline]
    pub fn eval_second_deriv(&self, u: f64) -> Result<f64> {
        if !(-1.0..=1.0).contains(&u) {
            return Ok(0.0);
        }
        match &self.body {
            Body::Biweight => Ok(-3.75 * (1.0 - 3.0 * u * u)),
            Body::Custom { w2: Some(w2), .. } => Ok(w2(u)),
            Body::Custom { w2: None, .. } => {
                Err(Error::MissingSecondDerivative(self.name.clone()))
            }
        }
    }

    pub fn has_second_deriv(&self) -> bool {
        match &self.body {
            Body::Biweight => true,
            Body::Custom { w2, .. } => w2.is_some(),
        }
    }

    /// ∫ u² w(u) du.
    pub fn moment2(&self) -> f64 {
        self.moment2
    }

    /// ∫ w(u)² du.
    pub fn sq_norm(&self) -> f64 {
        self.sq_norm
    }

    /// ∫ w′(u)² du.
    pub fn deriv_sq_norm(&self) -> f64 {
        self.deriv_sq_norm
    }

    /// Checks the kernel contract: support on `[-1, 1]`, nonnegativity,
    /// symmetry, unit mass, a derivative consistent with finite differences,
    /// and continuity of that derivative on the support.
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| -> Result<()> {
            Err(Error::KernelValidation {
                name: self.name.clone(),
                reason,
            })
        };

        // Nonnegativity and symmetry on a fine grid. Values outside [-1, 1]
        // are zero by construction of eval(), so only the support is probed.
        for i in 0..=1000 {
            let u = i as f64 / 1000.0;
            let wp = self.eval(u);
            let wm = self.eval(-u);
            if wp < -1e-12 || wm < -1e-12 {
                return fail(format!("negative value near u = {u}"));
            }
            if (wp - wm).abs() > SYMMETRY_TOL {
                return fail(format!("asymmetric at u = {u}: {wp} vs {wm}"));
            }
        }

        // Unit mass.
        let mass = quad::integrate(|u| self.eval(u), -1.0, 1.0, QUAD_TOL);
        if (mass - 1.0).abs() > NORMALIZATION_TOL {
            return fail(format!("not normalized: integral = {mass}"));
        }

        // Stored derivative vs central finite differences at 100 interior
        // points (stay clear of the endpoints so the stencil remains inside
        // the support).
        for i in 0..100 {
            let u = -0.99 + i as f64 * 0.02;
            let fd = (self.eval(u + DERIVATIVE_FD_STEP) - self.eval(u - DERIVATIVE_FD_STEP))
                / (2.0 * DERIVATIVE_FD_STEP);
            if (fd - self.eval_deriv(u)).abs() > DERIVATIVE_FD_TOL {
                return fail(format!(
                    "derivative inconsistent with finite differences at u = {u}"
                ));
            }
        }

        // Continuity of w′ on [-1, 1]: a jump does not shrink when the grid
        // is refined, while a continuous derivative's largest increment does.
        let max_jump = |step: f64| -> f64 {
            let n = (2.0 / step).round() as usize;
            let mut jump: f64 = 0.0;
            let mut prev = self.eval_deriv(-1.0);
            for i in 1..=n {
                let u = -1.0 + i as f64 * step;
                let cur = self.eval_deriv(u.min(1.0));
                jump = jump.max((cur - prev).abs());
                prev = cur;
            }
            jump
        };
        let sup_deriv = (0..=2000)
            .map(|i| self.eval_deriv(-1.0 + i as f64 * 0.001).abs())
            .fold(0.0, f64::max);
        let coarse = max_jump(1e-3);
        let fine = max_jump(2.5e-4);
        if coarse > 0.02 * (1.0 + sup_deriv) && fine > 0.5 * coarse {
            return fail("derivative is discontinuous on [-1, 1]".to_string());
        }

        Ok(())
    }
}

/// Recomputes `(moment2, sq_norm, deriv_sq_norm)` by quadrature from the
/// kernel's stored functions. For built-in kernels this cross-checks the
/// closed forms.
pub fn kernel_functionals(kernel: &Kernel) -> Result<(f64, f64, f64)> {
    functionals(&|u| kernel.eval(u), &|u| kernel.eval_deriv(u))
}

fn functionals(w: &dyn Fn(f64) -> f64, w1: &dyn Fn(f64) -> f64) -> Result<(f64, f64, f64)> {
    let mass = quad::integrate(w, -1.0, 1.0, QUAD_TOL);
    if (mass - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::KernelValidation {
            name: "<functionals>".to_string(),
            reason: format!("not normalized: integral = {mass}"),
        });
    }
    let moment2 = quad::integrate(|u| u * u * w(u), -1.0, 1.0, QUAD_TOL);
    let sq_norm = quad::integrate(|u| w(u) * w(u), -1.0, 1.0, QUAD_TOL);
    // Split at 0 so kernels with a kink there (which validation rejects but
    // experiments may still quantify) are integrated accurately.
    let deriv_sq_norm = quad::integrate_split(|u| w1(u) * w1(u), &[-1.0, 0.0, 1.0], QUAD_TOL);
    Ok((moment2, sq_norm, deriv_sq_norm))
}
