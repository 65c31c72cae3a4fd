//! Deterministic adaptive quadrature.
//!
//! All integrals in this crate (kernel functionals, bandwidth-selector
//! functionals, test oracles) go through the routines below. Evaluation order
//! is fixed, so results are bit-reproducible across runs and thread counts.

/// Adaptive Simpson integration of `f` over `[a, b]`.
///
/// `tol` is an absolute tolerance on the final value; the usual Richardson
/// correction term is applied at each accepted panel.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson(a, b, fa, fm, fb);
    step(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

/// Integrates `f` over consecutive panels split at `points`, which must be
/// ascending. Used when the integrand has known kinks (e.g. the observed
/// density at the support midpoint).
pub fn integrate_split<F: Fn(f64) -> f64>(f: F, points: &[f64], tol: f64) -> f64 {
    let mut total = 0.0;
    for pair in points.windows(2) {
        total += integrate(&f, pair[0], pair[1], tol);
    }
    total
}

/// Trapezoid rule over tabulated values; `xs` must be ascending.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let mut total = 0.0;
    for i in 1..xs.len() {
        total += 0.5 * (ys[i] + ys[i - 1]) * (xs[i] - xs[i - 1]);
    }
    total
}

const MAX_DEPTH: u32 = 50;

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        let half_tol = 0.5 * tol;
        step(f, a, m, fa, flm, fm, left, half_tol, depth - 1)
            + step(f, m, b, fm, frm, fb, right, half_tol, depth - 1)
    }
}

/// Tabulated cumulative integral of a nonnegative integrand, with linear
/// interpolation between nodes. Used to evaluate the CDF of an analytically
/// known density (e.g. the observed-sample law in distribution tests).
pub struct CdfTable {
    lo: f64,
    step: f64,
    values: Vec<f64>,
}

impl CdfTable {
    /// Builds the table on `[lo, hi]` from `intervals` composite-Simpson
    /// panels (each panel uses its midpoint).
    pub fn build<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, intervals: usize) -> Self {
        assert!(intervals > 0 && hi > lo);
        let step = (hi - lo) / intervals as f64;
        let mut values = Vec::with_capacity(intervals + 1);
        values.push(0.0);
        let mut acc = 0.0;
        for i in 0..intervals {
            let a = lo + i as f64 * step;
            let b = a + step;
            let m = 0.5 * (a + b);
            acc += step / 6.0 * (f(a) + 4.0 * f(m) + f(b));
            values.push(acc);
        }
        CdfTable { lo, step, values }
    }

    /// Total mass accumulated over the table's range.
    pub fn total(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Cumulative value at `x`, clamped to the table's range.
    pub fn eval(&self, x: f64) -> f64 {
        let pos = (x - self.lo) / self.step;
        if pos <= 0.0 {
            return 0.0;
        }
        let last = self.values.len() - 1;
        if pos >= last as f64 {
            return self.total();
        }
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        self.values[i] + frac * (self.values[i + 1] - self.values[i])
    }
}
