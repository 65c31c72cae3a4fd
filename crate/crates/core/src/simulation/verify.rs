//! Monte Carlo verification of the asymptotic guarantees.
//!
//! Each check pins a scenario (families, bandwidths, replication counts) and
//! compares simulated moments against closed-form predictions, producing one
//! labelled pass/fail line per comparison. Tolerances are fixed constants
//! chosen ahead of time: relative bands around variance predictions, absolute
//! bands for shape statistics, and Monte Carlo standard-error bands for mean
//! bias. The `quick` profile shrinks sample sizes and widens bands for smoke
//! runs; `full` is the reference configuration.
//!
//! Every check derives its seed from the master seed and a per-check salt, so
//! the checks explore independent noise while a report stays bit-for-bit
//! reproducible for a given seed and profile.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::scenario::{run_scenario, EvalPath, ReplicationReport, ScenarioConfig};
use crate::error::{Error, Result};
use crate::families::Family;
use crate::kernels::Kernel;

/// Default master seed for reproducible verification runs.
pub const DEFAULT_MASTER_SEED: u64 = 20260814;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Reduced sample sizes and widened tolerance bands.
    Quick,
    /// Reference sample sizes and tolerance bands.
    Full,
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Quick => "quick",
            Profile::Full => "full",
        })
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Profile::Quick),
            "full" => Ok(Profile::Full),
            other => Err(Error::InvalidConfig(format!(
                "unknown profile '{other}' (expected 'quick' or 'full')"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TheoremCheck {
    /// Pointwise variance, covariance decay, and weighted combinations of
    /// the one-sided density estimators.
    ThmVariance,
    /// Mean bias of the fixed-weight density estimator and its h² scaling.
    ThmBias,
    /// Variance constant and distributional shape of the final estimator
    /// under a non-uniform inspection density.
    ThmNormality,
    /// Variance constant and n-consistency of the distribution estimator.
    ThmCdf,
    /// Agreement between the known-q and estimated-q final estimators.
    ThmUnknownQ,
}

impl TheoremCheck {
    pub fn name(&self) -> &'static str {
        match self {
            TheoremCheck::ThmVariance => "thm-variance",
            TheoremCheck::ThmBias => "thm-bias",
            TheoremCheck::ThmNormality => "thm-normality",
            TheoremCheck::ThmCdf => "thm-cdf",
            TheoremCheck::ThmUnknownQ => "thm-unknown-q",
        }
    }

    fn salt(&self) -> u64 {
        match self {
            TheoremCheck::ThmVariance => 1,
            TheoremCheck::ThmBias => 2,
            TheoremCheck::ThmNormality => 3,
            TheoremCheck::ThmCdf => 4,
            TheoremCheck::ThmUnknownQ => 5,
        }
    }
}

impl fmt::Display for TheoremCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TheoremCheck {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "thm-variance" => Ok(TheoremCheck::ThmVariance),
            "thm-bias" => Ok(TheoremCheck::ThmBias),
            "thm-normality" => Ok(TheoremCheck::ThmNormality),
            "thm-cdf" => Ok(TheoremCheck::ThmCdf),
            "thm-unknown-q" => Ok(TheoremCheck::ThmUnknownQ),
            other => Err(Error::InvalidConfig(format!(
                "unknown check '{other}' (expected one of: thm-variance, thm-bias, \
                 thm-normality, thm-cdf, thm-unknown-q)"
            ))),
        }
    }
}

pub fn all_checks() -> [TheoremCheck; 5] {
    [
        TheoremCheck::ThmVariance,
        TheoremCheck::ThmBias,
        TheoremCheck::ThmNormality,
        TheoremCheck::ThmCdf,
        TheoremCheck::ThmUnknownQ,
    ]
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub profile: Profile,
    pub master_seed: u64,
    /// Overrides the primary scenario's sample size of each check.
    pub n: Option<usize>,
    /// Overrides the primary scenario's replication count of each check.
    pub reps: Option<usize>,
}

impl VerifyConfig {
    pub fn new(profile: Profile, master_seed: u64) -> Self {
        VerifyConfig {
            profile,
            master_seed,
            n: None,
            reps: None,
        }
    }
}

/// One labelled comparison: pass iff `observed` is finite and inside
/// `[lo, hi]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckLine {
    pub label: String,
    pub observed: f64,
    pub lo: f64,
    pub hi: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub lines: Vec<CheckLine>,
}

impl CheckReport {
    fn new(name: &str, lines: Vec<CheckLine>) -> Self {
        let passed = lines.iter().all(|l| l.passed);
        CheckReport {
            name: name.to_string(),
            passed,
            lines,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerificationReport {
    pub profile: Profile,
    pub master_seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckReport>,
}

fn line(label: String, observed: f64, lo: f64, hi: f64) -> CheckLine {
    let passed = observed.is_finite() && observed >= lo && observed <= hi;
    CheckLine {
        label,
        observed,
        lo,
        hi,
        passed,
    }
}

fn salted(master_seed: u64, salt: u64) -> u64 {
    master_seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn verify_theorem(check: TheoremCheck, cfg: &VerifyConfig) -> Result<CheckReport> {
    match check {
        TheoremCheck::ThmVariance => check_variance(cfg),
        TheoremCheck::ThmBias => check_bias(cfg),
        TheoremCheck::ThmNormality => check_normality(cfg),
        TheoremCheck::ThmCdf => check_cdf(cfg),
        TheoremCheck::ThmUnknownQ => check_unknown_q(cfg),
    }
}

pub fn verify_all(cfg: &VerifyConfig) -> Result<VerificationReport> {
    let mut checks = Vec::with_capacity(5);
    for check in all_checks() {
        checks.push(verify_theorem(check, cfg)?);
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(VerificationReport {
        profile: cfg.profile,
        master_seed: cfg.master_seed,
        passed,
        checks,
    })
}

/// Exact empirical variance of t·f⁻ + (1−t)·f⁺ assembled from the sample
/// variances and covariance of the two one-sided estimators.
fn combined_variance(t: f64, var_minus: f64, var_plus: f64, cov: f64) -> f64 {
    t * t * var_minus + (1.0 - t) * (1.0 - t) * var_plus + 2.0 * t * (1.0 - t) * cov
}

fn check_variance(cfg: &VerifyConfig) -> Result<CheckReport> {
    let (n, reps, var_tol, ratio_tol, cov_frac) = match cfg.profile {
        Profile::Full => (10_000, 1_000, 0.15, 0.20, 0.10),
        Profile::Quick => (2_000, 200, 0.30, 0.40, 0.30),
    };
    let n = cfg.n.unwrap_or(n);
    let reps = cfg.reps.unwrap_or(reps);
    let x_family = Family::Beta {
        alpha: 2.0,
        beta: 2.0,
    };
    let q_family = Family::Uniform;
    let h = 0.2;
    let mut sc = ScenarioConfig::new(
        n,
        reps,
        x_family,
        q_family,
        h,
        0.16,
        salted(cfg.master_seed, TheoremCheck::ThmVariance.salt()),
    );
    sc.grid = vec![0.25, 0.5, 0.75];
    let report = run_scenario(&sc)?;

    let dsq = Kernel::biweight().deriv_sq_norm();
    let nh3 = n as f64 * h.powi(3);
    let mut lines = Vec::new();
    for (g, &x) in sc.grid.iter().enumerate() {
        let big_f = x_family.cdf(x);
        let q = q_family.pdf(x);
        let target_minus = big_f * dsq / q;
        let target_plus = (1.0 - big_f) * dsq / q;
        let vm = nh3 * report.f_minus.variance[g];
        let vp = nh3 * report.f_plus.variance[g];
        let cv = nh3 * report.cov_minus_plus[g];

        lines.push(line(
            format!("n h^3 var(f_minus) at x={x}"),
            vm,
            target_minus * (1.0 - var_tol),
            target_minus * (1.0 + var_tol),
        ));
        lines.push(line(
            format!("n h^3 var(f_plus) at x={x}"),
            vp,
            target_plus * (1.0 - var_tol),
            target_plus * (1.0 + var_tol),
        ));
        for t in [0.3, 1.0 - big_f] {
            let assembled = combined_variance(t, vm, vp, cv);
            let target = t * t * target_minus + (1.0 - t) * (1.0 - t) * target_plus;
            lines.push(line(
                format!("n h^3 var(f_t) at x={x}, t={t:.5}"),
                assembled,
                target * (1.0 - var_tol),
                target * (1.0 + var_tol),
            ));
        }
        let ratio_target = big_f / (1.0 - big_f);
        lines.push(line(
            format!("var(f_minus)/var(f_plus) at x={x}"),
            vm / vp,
            ratio_target * (1.0 - ratio_tol),
            ratio_target * (1.0 + ratio_tol),
        ));
        let bound = cov_frac * vm.min(vp);
        lines.push(line(
            format!("n h^3 cov(f_minus, f_plus) at x={x}"),
            cv,
            -bound,
            bound,
        ));
    }
    Ok(CheckReport::new(TheoremCheck::ThmVariance.name(), lines))
}

/// Mean bias of the t = 1/2 estimator, read off exactly from the one-sided
/// means by linearity.
fn fixed_t_bias(report: &ReplicationReport, t: f64, g: usize) -> f64 {
    t * report.f_minus.bias[g] + (1.0 - t) * report.f_plus.bias[g]
}

fn fixed_t_se(report: &ReplicationReport, t: f64, g: usize) -> f64 {
    let var = combined_variance(
        t,
        report.f_minus.variance[g],
        report.f_plus.variance[g],
        report.cov_minus_plus[g],
    );
    (var / report.successes as f64).sqrt()
}

fn check_bias(cfg: &VerifyConfig) -> Result<CheckReport> {
    let (n, reps, h_coarse, ratio_lo, ratio_hi) = match cfg.profile {
        Profile::Full => (100_000, 500, 0.3, 3.0, 5.0),
        Profile::Quick => (50_000, 100, 0.4, 2.5, 6.0),
    };
    let n = cfg.n.unwrap_or(n);
    let reps = cfg.reps.unwrap_or(reps);
    let h_fine = h_coarse / 2.0;
    let t = 0.5;
    let seed = salted(cfg.master_seed, TheoremCheck::ThmBias.salt());
    let x_family = Family::Beta {
        alpha: 2.0,
        beta: 2.0,
    };

    // Identical seeds give common random numbers across the two bandwidths,
    // so the bias ratio is measured on the same samples.
    let run_at = |h: f64| -> Result<ReplicationReport> {
        let mut sc = ScenarioConfig::new(n, reps, x_family, Family::Uniform, h, h, seed);
        sc.grid = vec![0.5];
        run_scenario(&sc)
    };
    let coarse = run_at(h_coarse)?;
    let fine = run_at(h_fine)?;

    let theory =
        |rep: &ReplicationReport| t * rep.theory.bias_minus[0] + (1.0 - t) * rep.theory.bias_plus[0];
    let mut lines = Vec::new();
    for (rep, h) in [(&coarse, h_coarse), (&fine, h_fine)] {
        let observed = fixed_t_bias(rep, t, 0);
        let se = fixed_t_se(rep, t, 0);
        let predicted = theory(rep);
        lines.push(line(
            format!("mean bias of f_t (t=1/2) at x=0.5, h={h}"),
            observed,
            predicted - 3.0 * se,
            predicted + 3.0 * se,
        ));
    }
    let ratio = fixed_t_bias(&coarse, t, 0) / fixed_t_bias(&fine, t, 0);
    lines.push(line(
        format!("bias ratio between h={h_coarse} and h={h_fine} (h^2 scaling predicts 4)"),
        ratio,
        ratio_lo,
        ratio_hi,
    ));
    Ok(CheckReport::new(TheoremCheck::ThmBias.name(), lines))
}

fn check_normality(cfg: &VerifyConfig) -> Result<CheckReport> {
    let (n, reps, var_tol, skew_bound, kurt_bound) = match cfg.profile {
        Profile::Full => (10_000, 1_000, 0.15, 0.25, 0.5),
        Profile::Quick => (2_000, 200, 0.30, 0.6, 1.2),
    };
    let n = cfg.n.unwrap_or(n);
    let reps = cfg.reps.unwrap_or(reps);
    let h = (n as f64).powf(-0.2);
    let x_family = Family::Beta {
        alpha: 2.0,
        beta: 2.0,
    };
    let q_family = Family::TruncNorm {
        mu: 0.5,
        sigma: 0.3,
    };
    let mut sc = ScenarioConfig::new(
        n,
        reps,
        x_family,
        q_family,
        h,
        h,
        salted(cfg.master_seed, TheoremCheck::ThmNormality.salt()),
    );
    sc.grid = vec![0.5];
    let report = run_scenario(&sc)?;

    let x = 0.5;
    let big_f = x_family.cdf(x);
    let target = big_f * (1.0 - big_f) * Kernel::biweight().deriv_sq_norm() / q_family.pdf(x);
    let observed = n as f64 * h.powi(3) * report.f_final.variance[0];
    let lines = vec![
        line(
            format!("n h^3 var(f_final) at x=0.5, h={h:.6}"),
            observed,
            target * (1.0 - var_tol),
            target * (1.0 + var_tol),
        ),
        line(
            "skewness of f_final at x=0.5".to_string(),
            report.f_final.skewness[0],
            -skew_bound,
            skew_bound,
        ),
        line(
            "excess kurtosis of f_final at x=0.5".to_string(),
            report.f_final.excess_kurtosis[0],
            -kurt_bound,
            kurt_bound,
        ),
    ];
    Ok(CheckReport::new(TheoremCheck::ThmNormality.name(), lines))
}

fn check_cdf(cfg: &VerifyConfig) -> Result<CheckReport> {
    let (n_primary, reps_primary, var_tol, n_ladder, reps_ladder) = match cfg.profile {
        Profile::Full => (10_000, 1_000, 0.15, [1_000usize, 10_000, 100_000], 500),
        Profile::Quick => (2_000, 200, 0.30, [500usize, 2_000, 8_000], 200),
    };
    let n = cfg.n.unwrap_or(n_primary);
    let reps = cfg.reps.unwrap_or(reps_primary);
    let x_family = Family::Beta {
        alpha: 2.0,
        beta: 2.0,
    };
    let seed = salted(cfg.master_seed, TheoremCheck::ThmCdf.salt());
    let run_at = |n: usize, reps: usize| -> Result<ReplicationReport> {
        let h = (n as f64).powf(-0.2);
        let mut sc = ScenarioConfig::new(n, reps, x_family, Family::Uniform, h, h, seed);
        sc.grid = vec![0.5];
        run_scenario(&sc)
    };

    let primary = run_at(n, reps)?;
    let h = (n as f64).powf(-0.2);
    let x = 0.5;
    let big_f = x_family.cdf(x);
    // t = 1/2 halves the sum of the two one-sided variances.
    let target = big_f * (1.0 - big_f) * Kernel::biweight().sq_norm() / Family::Uniform.pdf(x);
    let observed = n as f64 * h * primary.cdf_half.variance[0];
    let mut lines = vec![line(
        format!("n h var(F_half) at x=0.5, h={h:.6}"),
        observed,
        target * (1.0 - var_tol),
        target * (1.0 + var_tol),
    )];

    let mse_at = |rep: &ReplicationReport| -> f64 {
        rep.cdf_half.variance[0] + rep.cdf_half.bias[0] * rep.cdf_half.bias[0]
    };
    let ladder: Vec<(usize, f64)> = {
        let mut out = Vec::new();
        for m in n_ladder {
            out.push((m, mse_at(&run_at(m, reps_ladder)?)));
        }
        out
    };
    for pair in ladder.windows(2) {
        let (n_lo, mse_lo) = pair[0];
        let (n_hi, mse_hi) = pair[1];
        lines.push(line(
            format!("mse(F_half) ratio n={n_hi} over n={n_lo}"),
            mse_hi / mse_lo,
            0.0,
            1.0,
        ));
    }
    Ok(CheckReport::new(TheoremCheck::ThmCdf.name(), lines))
}

fn check_unknown_q(cfg: &VerifyConfig) -> Result<CheckReport> {
    let (n, reps, threshold, frac_lo) = match cfg.profile {
        Profile::Full => (100_000, 100, 0.1, 0.9),
        Profile::Quick => (10_000, 20, 0.25, 0.7),
    };
    let n = cfg.n.unwrap_or(n);
    let reps = cfg.reps.unwrap_or(reps);
    let nf = n as f64;
    let mut sc = ScenarioConfig::new(
        n,
        reps,
        Family::Beta {
            alpha: 2.0,
            beta: 2.0,
        },
        Family::TruncNorm {
            mu: 0.5,
            sigma: 0.3,
        },
        nf.powf(-1.0 / 7.0),
        nf.powf(-0.2),
        salted(cfg.master_seed, TheoremCheck::ThmUnknownQ.salt()),
    );
    sc.estimate_q = true;
    sc.eval = EvalPath::Warp;
    sc.grid = (0..=40).map(|i| 0.1 + 0.8 * i as f64 / 40.0).collect();
    // Wider than the grid so floating-point dust at the ends never drops a
    // grid point from the sup.
    sc.sup_range = (0.05, 0.95);
    let report = run_scenario(&sc)?;

    let sup = report
        .sup_diff_estimated_q
        .as_ref()
        .expect("scenario ran with estimated q");
    let below = sup.iter().filter(|s| **s < threshold).count();
    let fraction = below as f64 / sup.len() as f64;
    let mut sorted = sup.clone();
    sorted.sort_by(f64::total_cmp);
    let median = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
    };
    let lines = vec![
        line(
            format!("fraction of reps with sup |f_est_q - f_known_q| < {threshold} on [0.1, 0.9]"),
            fraction,
            frac_lo,
            1.0,
        ),
        line(
            "median sup |f_est_q - f_known_q| on [0.1, 0.9]".to_string(),
            median,
            0.0,
            threshold,
        ),
    ];
    Ok(CheckReport::new(TheoremCheck::ThmUnknownQ.name(), lines))
}
