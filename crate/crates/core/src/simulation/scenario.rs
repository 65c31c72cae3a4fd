//! Replicated estimation scenarios with analytic oracles.
//!
//! A scenario draws current status samples from known latent and inspection
//! laws, runs the full estimation pipeline on each replication, and
//! aggregates per-point moments, covariances, and integrated squared errors
//! next to the asymptotic predictions. Replications are independent and may
//! run on any number of workers; every random draw is pinned to
//! (master seed, replication, stream) and aggregation runs in replication
//! order, so reports are identical across thread counts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampling;
use super::warp::{WarpEvaluator, WarpGrid, DEFAULT_BINS_PER_H};
use crate::cdf::CdfEstimate;
use crate::density::{self, GEstimate, TheoreticalExpansion, Q_FLOOR};
use crate::error::{Error, Result};
use crate::families::Family;
use crate::kernels::Kernel;
use crate::q_estimation::{self, ObservationDensity};
use crate::quad;
use crate::stats;
use crate::transform::transform;

/// How per-replication curves are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalPath {
    /// Exact kernel sums over all observations.
    Direct,
    /// Binned sums over a shared bin grid (bin width = min bandwidth / 20).
    Warp,
}

/// Full description of a Monte Carlo scenario.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub n: usize,
    pub reps: usize,
    pub x_family: Family,
    pub q_family: Family,
    /// Density bandwidth.
    pub h1: f64,
    /// Bandwidth of the plug-in distribution estimate.
    pub h2: f64,
    /// Also compute the final estimator with kernel-estimated q.
    pub estimate_q: bool,
    /// Derivative bandwidth for estimated q (normal-reference default).
    pub htilde: Option<f64>,
    pub grid: Vec<f64>,
    pub master_seed: u64,
    pub eval: EvalPath,
    /// Integration range of the per-replication ISE.
    pub ise_range: (f64, f64),
    /// Range of the sup-difference between estimated-q and known-q finals.
    pub sup_range: (f64, f64),
}

impl ScenarioConfig {
    pub fn new(
        n: usize,
        reps: usize,
        x_family: Family,
        q_family: Family,
        h1: f64,
        h2: f64,
        master_seed: u64,
    ) -> Self {
        ScenarioConfig {
            n,
            reps,
            x_family,
            q_family,
            h1,
            h2,
            estimate_q: false,
            htilde: None,
            grid: density::default_grid(),
            master_seed,
            eval: EvalPath::Direct,
            ise_range: (0.05, 0.95),
            sup_range: (0.1, 0.9),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidConfig(format!(
                "scenario needs n >= 2, got {}",
                self.n
            )));
        }
        if self.reps == 0 {
            return Err(Error::InvalidConfig("scenario needs reps >= 1".to_string()));
        }
        self.x_family.validate()?;
        self.q_family.validate()?;
        for (name, h) in [("h1", self.h1), ("h2", self.h2)] {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidBandwidth(format!(
                    "{name} must be positive and finite, got {h}"
                )));
            }
        }
        if let Some(ht) = self.htilde {
            if !(ht > 0.0 && ht.is_finite()) {
                return Err(Error::InvalidBandwidth(format!(
                    "htilde must be positive and finite, got {ht}"
                )));
            }
        }
        if self.grid.is_empty() {
            return Err(Error::InvalidConfig("empty evaluation grid".to_string()));
        }
        for w in self.grid.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidConfig(
                    "evaluation grid must be strictly increasing".to_string(),
                ));
            }
        }
        if !(0.0 < self.grid[0] && *self.grid.last().unwrap() < 1.0) {
            return Err(Error::InvalidConfig(
                "evaluation grid must lie strictly inside (0, 1)".to_string(),
            ));
        }
        for (name, (lo, hi)) in [("ise_range", self.ise_range), ("sup_range", self.sup_range)] {
            if !(lo < hi) || !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be an ordered subinterval of [0, 1], got ({lo}, {hi})"
                )));
            }
        }
        Ok(())
    }
}

/// Per-point sample moments of one estimator across replications.
///
/// With fewer than two successful replications the dispersion fields are
/// reported as zero rather than undefined.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurveStats {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    /// mean − truth.
    pub bias: Vec<f64>,
    pub skewness: Vec<f64>,
    pub excess_kurtosis: Vec<f64>,
}

/// Asymptotic predictions evaluated on the scenario grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TheoryCurves {
    pub f_true: Vec<f64>,
    pub cdf_true: Vec<f64>,
    /// Leading bias (h²/2)·∫v²w·b∓ of the one-sided estimators at h1.
    pub bias_minus: Vec<f64>,
    pub bias_plus: Vec<f64>,
    /// Leading bias of the optimally weighted estimator at h1.
    pub bias_final: Vec<f64>,
    pub sd_minus: Vec<f64>,
    pub sd_plus: Vec<f64>,
    pub sd_final: Vec<f64>,
}

/// Integrated squared errors per successful replication.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IseStats {
    pub f_minus: Vec<f64>,
    pub f_plus: Vec<f64>,
    pub f_final: Vec<f64>,
    /// Fraction of replications where the final estimator beats both
    /// one-sided estimators.
    pub dominance_fraction: f64,
    pub median_final: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RepFailure {
    pub rep: usize,
    pub message: String,
}

/// Aggregated scenario output.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReplicationReport {
    pub config: ScenarioConfig,
    pub theory: TheoryCurves,
    pub f_minus: CurveStats,
    pub f_plus: CurveStats,
    pub f_final: CurveStats,
    /// The t = 1/2 distribution estimate at h2.
    pub cdf_half: CurveStats,
    /// Per-point sample covariance of (f⁻, f⁺) across replications.
    pub cov_minus_plus: Vec<f64>,
    pub f_final_estimated_q: Option<CurveStats>,
    /// Per-replication sup over `sup_range` of
    /// |final(estimated q) − final(known q)|.
    pub sup_diff_estimated_q: Option<Vec<f64>>,
    pub ise: Option<IseStats>,
    pub successes: usize,
    pub failures: Vec<RepFailure>,
    pub warnings: Vec<String>,
}

struct RepCurves {
    f_minus: Vec<f64>,
    f_plus: Vec<f64>,
    f_final: Vec<f64>,
    cdf_half: Vec<f64>,
    f_final_est: Option<Vec<f64>>,
}

/// Runs all replications of a scenario and aggregates the results.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ReplicationReport> {
    cfg.validate()?;
    let kernel = Kernel::biweight();
    let outcomes: Vec<std::result::Result<RepCurves, String>> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| run_rep(cfg, &kernel, rep).map_err(|e| e.to_string()))
        .collect();
    aggregate(cfg, &kernel, outcomes)
}

fn run_rep(cfg: &ScenarioConfig, kernel: &Kernel, rep: usize) -> Result<RepCurves> {
    let generated = sampling::generate_css(
        &cfg.x_family,
        &cfg.q_family,
        cfg.n,
        cfg.master_seed,
        rep as u64,
    )?;
    let data = transform(&generated.sample);
    match cfg.eval {
        EvalPath::Direct => rep_direct(cfg, kernel, &data, generated.sample.times()),
        EvalPath::Warp => rep_warp(cfg, kernel, &data, generated.sample.times()),
    }
}

fn rep_direct(
    cfg: &ScenarioConfig,
    kernel: &Kernel,
    data: &crate::transform::TransformedSample,
    times: &[f64],
) -> Result<RepCurves> {
    let q_known = ObservationDensity::analytic(cfg.q_family)?;
    let ge1 = GEstimate::new(data, cfg.h1, kernel)?;
    let cdf_known = CdfEstimate::new(data, cfg.h2, kernel, &q_known)?;
    let g = cfg.grid.len();
    let mut curves = RepCurves {
        f_minus: Vec::with_capacity(g),
        f_plus: Vec::with_capacity(g),
        f_final: Vec::with_capacity(g),
        cdf_half: Vec::with_capacity(g),
        f_final_est: None,
    };
    for &x in &cfg.grid {
        curves.f_minus.push(ge1.f_minus(&q_known, x)?);
        curves.f_plus.push(ge1.f_plus(&q_known, x)?);
        let fh = cdf_known.cdf_combined(x)?;
        curves.cdf_half.push(fh);
        curves
            .f_final
            .push(ge1.f_final(&q_known, |_| Ok(fh), x, false)?);
    }
    if cfg.estimate_q {
        let q_est =
            ObservationDensity::estimated(times.to_vec(), cfg.htilde, kernel.clone())?;
        let cdf_est = CdfEstimate::new(data, cfg.h2, kernel, &q_est)?;
        let mut est = Vec::with_capacity(g);
        for &x in &cfg.grid {
            let fh = cdf_est.cdf_combined(x)?;
            est.push(ge1.f_final(&q_est, |_| Ok(fh), x, false)?);
        }
        curves.f_final_est = Some(est);
    }
    Ok(curves)
}

fn rep_warp(
    cfg: &ScenarioConfig,
    kernel: &Kernel,
    data: &crate::transform::TransformedSample,
    times: &[f64],
) -> Result<RepCurves> {
    let bin_width = cfg.h1.min(cfg.h2) / DEFAULT_BINS_PER_H;
    let vgrid = WarpGrid::new(data.values(), 0.0, 2.0, bin_width)?;
    let ev1 = WarpEvaluator::new(&vgrid, kernel, cfg.h1)?;
    let ev2 = WarpEvaluator::new(&vgrid, kernel, cfg.h2)?;
    let q_known = ObservationDensity::analytic(cfg.q_family)?;

    let est_q = if cfg.estimate_q {
        let htilde = cfg
            .htilde
            .unwrap_or_else(|| q_estimation::default_htilde(times));
        let tgrid = WarpGrid::new(times, 0.0, 1.0, htilde / DEFAULT_BINS_PER_H)?;
        Some((tgrid, htilde))
    } else {
        None
    };
    let est_eval = match &est_q {
        Some((tgrid, htilde)) => Some(WarpEvaluator::new(tgrid, kernel, *htilde)?),
        None => None,
    };

    let g = cfg.grid.len();
    let mut curves = RepCurves {
        f_minus: Vec::with_capacity(g),
        f_plus: Vec::with_capacity(g),
        f_final: Vec::with_capacity(g),
        cdf_half: Vec::with_capacity(g),
        f_final_est: est_eval.as_ref().map(|_| Vec::with_capacity(g)),
    };
    for &x in &cfg.grid {
        let qx = q_known.q(x);
        if qx <= Q_FLOOR {
            return Err(Error::DegenerateObservationDensity {
                x,
                q: qx,
                floor: Q_FLOOR,
            });
        }
        let q1x = q_known.q_deriv(x);
        let (g1a, g1b) = (ev1.g_hat(x), ev1.g_hat(x + 1.0));
        let (d1a, d1b) = (ev1.g_hat_deriv(x), ev1.g_hat_deriv(x + 1.0));
        let (g2a, g2b) = (ev2.g_hat(x), ev2.g_hat(x + 1.0));

        let fm = density::invert_minus(g1a, d1a, qx, q1x);
        let fp = density::invert_plus(g1b, d1b, qx, q1x);
        let fh = 0.5 * (g2a / qx + 1.0 - g2b / qx);
        curves.f_minus.push(fm);
        curves.f_plus.push(fp);
        curves.cdf_half.push(fh);
        curves.f_final.push((1.0 - fh) * fm + fh * fp);

        if let Some(evq) = &est_eval {
            let qhx = evq.g_hat(x);
            if qhx <= Q_FLOOR {
                return Err(Error::DegenerateObservationDensity {
                    x,
                    q: qhx,
                    floor: Q_FLOOR,
                });
            }
            let q1hx = evq.g_hat_deriv(x);
            let fme = density::invert_minus(g1a, d1a, qhx, q1hx);
            let fpe = density::invert_plus(g1b, d1b, qhx, q1hx);
            let fhe = 0.5 * (g2a / qhx + 1.0 - g2b / qhx);
            curves
                .f_final_est
                .as_mut()
                .unwrap()
                .push((1.0 - fhe) * fme + fhe * fpe);
        }
    }
    Ok(curves)
}

fn aggregate(
    cfg: &ScenarioConfig,
    kernel: &Kernel,
    outcomes: Vec<std::result::Result<RepCurves, String>>,
) -> Result<ReplicationReport> {
    let mut successes = Vec::new();
    let mut failures = Vec::new();
    for (rep, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(c) => successes.push(c),
            Err(message) => failures.push(RepFailure { rep, message }),
        }
    }
    if successes.is_empty() {
        let first = failures
            .first()
            .map(|f| f.message.clone())
            .unwrap_or_default();
        return Err(Error::InvalidSample(format!(
            "all {} replications failed; first failure: {first}",
            cfg.reps
        )));
    }

    let expansion = TheoreticalExpansion::new(cfg.x_family, cfg.q_family, kernel.clone())?;
    let nh3 = cfg.n as f64 * cfg.h1.powi(3);
    let theory = TheoryCurves {
        f_true: cfg.grid.iter().map(|&x| cfg.x_family.pdf(x)).collect(),
        cdf_true: cfg.grid.iter().map(|&x| cfg.x_family.cdf(x)).collect(),
        bias_minus: cfg
            .grid
            .iter()
            .map(|&x| 0.5 * cfg.h1 * cfg.h1 * kernel.moment2() * expansion.b_minus(x))
            .collect(),
        bias_plus: cfg
            .grid
            .iter()
            .map(|&x| 0.5 * cfg.h1 * cfg.h1 * kernel.moment2() * expansion.b_plus(x))
            .collect(),
        bias_final: cfg
            .grid
            .iter()
            .map(|&x| expansion.bias_final(cfg.h1, x))
            .collect(),
        sd_minus: cfg
            .grid
            .iter()
            .map(|&x| (expansion.var_const_minus(x) / nh3).sqrt())
            .collect(),
        sd_plus: cfg
            .grid
            .iter()
            .map(|&x| (expansion.var_const_plus(x) / nh3).sqrt())
            .collect(),
        sd_final: cfg
            .grid
            .iter()
            .map(|&x| expansion.sd_final(cfg.n, cfg.h1, x))
            .collect(),
    };

    let col = |pick: &dyn Fn(&RepCurves) -> &Vec<f64>, g: usize| -> Vec<f64> {
        successes.iter().map(|c| pick(c)[g]).collect()
    };
    let curve_stats = |pick: &dyn Fn(&RepCurves) -> &Vec<f64>, truth: &[f64]| -> CurveStats {
        let mut out = CurveStats {
            mean: Vec::with_capacity(cfg.grid.len()),
            variance: Vec::with_capacity(cfg.grid.len()),
            bias: Vec::with_capacity(cfg.grid.len()),
            skewness: Vec::with_capacity(cfg.grid.len()),
            excess_kurtosis: Vec::with_capacity(cfg.grid.len()),
        };
        for g in 0..cfg.grid.len() {
            let column = col(pick, g);
            let mean = stats::mean(&column);
            out.mean.push(mean);
            out.bias.push(mean - truth[g]);
            if column.len() >= 2 {
                out.variance.push(stats::sample_variance(&column));
            } else {
                out.variance.push(0.0);
            }
            if column.len() >= 3 && stats::sample_variance(&column) > 0.0 {
                out.skewness.push(stats::skewness(&column));
                out.excess_kurtosis.push(stats::excess_kurtosis(&column));
            } else {
                out.skewness.push(0.0);
                out.excess_kurtosis.push(0.0);
            }
        }
        out
    };

    let f_minus = curve_stats(&|c| &c.f_minus, &theory.f_true);
    let f_plus = curve_stats(&|c| &c.f_plus, &theory.f_true);
    let f_final = curve_stats(&|c| &c.f_final, &theory.f_true);
    let cdf_half = curve_stats(&|c| &c.cdf_half, &theory.cdf_true);
    let f_final_estimated_q = if successes.iter().all(|c| c.f_final_est.is_some()) && cfg.estimate_q
    {
        Some(curve_stats(
            &|c| c.f_final_est.as_ref().expect("checked above"),
            &theory.f_true,
        ))
    } else {
        None
    };

    let cov_minus_plus: Vec<f64> = (0..cfg.grid.len())
        .map(|g| {
            let a = col(&|c| &c.f_minus, g);
            let b = col(&|c| &c.f_plus, g);
            if a.len() >= 2 {
                stats::sample_covariance(&a, &b)
            } else {
                0.0
            }
        })
        .collect();

    let sup_diff_estimated_q = if cfg.estimate_q {
        let (lo, hi) = cfg.sup_range;
        let idx: Vec<usize> = (0..cfg.grid.len())
            .filter(|&g| cfg.grid[g] >= lo && cfg.grid[g] <= hi)
            .collect();
        if idx.is_empty() {
            None
        } else {
            Some(
                successes
                    .iter()
                    .map(|c| {
                        let est = c.f_final_est.as_ref().expect("estimated curves present");
                        idx.iter()
                            .map(|&g| (est[g] - c.f_final[g]).abs())
                            .fold(0.0, f64::max)
                    })
                    .collect(),
            )
        }
    } else {
        None
    };

    let ise = ise_stats(cfg, &theory, &successes);

    let mut warnings = Vec::new();
    if cfg.h1 >= 0.5 || cfg.h2 >= 0.5 {
        warnings.push(format!(
            "bandwidth at or above 1/2 (h1 = {}, h2 = {}): the kernel windows at x and x+1 \
             can overlap",
            cfg.h1, cfg.h2
        ));
    }
    if let Some(ht) = cfg.htilde {
        if q_estimation::htilde_scale_warning(ht, cfg.n) {
            warnings.push(format!(
                "derivative bandwidth {ht} is far from the n^(-1/7) scale"
            ));
        }
    }

    Ok(ReplicationReport {
        config: cfg.clone(),
        theory,
        f_minus,
        f_plus,
        f_final,
        cdf_half,
        cov_minus_plus,
        f_final_estimated_q,
        sup_diff_estimated_q,
        ise,
        successes: successes.len(),
        failures,
        warnings,
    })
}

fn ise_stats(
    cfg: &ScenarioConfig,
    theory: &TheoryCurves,
    successes: &[RepCurves],
) -> Option<IseStats> {
    let (lo, hi) = cfg.ise_range;
    let idx: Vec<usize> = (0..cfg.grid.len())
        .filter(|&g| cfg.grid[g] >= lo && cfg.grid[g] <= hi)
        .collect();
    if idx.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = idx.iter().map(|&g| cfg.grid[g]).collect();
    let ise_of = |curve: &[f64]| -> f64 {
        let ys: Vec<f64> = idx
            .iter()
            .map(|&g| {
                let d = curve[g] - theory.f_true[g];
                d * d
            })
            .collect();
        quad::trapezoid(&xs, &ys)
    };
    let f_minus: Vec<f64> = successes.iter().map(|c| ise_of(&c.f_minus)).collect();
    let f_plus: Vec<f64> = successes.iter().map(|c| ise_of(&c.f_plus)).collect();
    let f_final: Vec<f64> = successes.iter().map(|c| ise_of(&c.f_final)).collect();
    let dominated = f_final
        .iter()
        .zip(&f_minus)
        .zip(&f_plus)
        .filter(|((f, m), p)| f < m && f < p)
        .count();
    let dominance_fraction = dominated as f64 / f_final.len() as f64;
    let median_final = median(&f_final);
    Some(IseStats {
        f_minus,
        f_plus,
        f_final,
        dominance_fraction,
        median_final,
    })
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    if m == 0 {
        return f64::NAN;
    }
    if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    }
}
