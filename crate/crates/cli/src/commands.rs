//! The four subcommands: data synthesis, curve estimation, bandwidth
//! selection, and the verification suites.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::Args;
use serde::Deserialize;
use serde_json::json;

use cskde::bandwidth::{reference_bandwidth, rule_of_thumb, BandwidthSelection};
use cskde::q_estimation::htilde_scale_warning;
use cskde::{
    generate_css, grid, transform, validate_bandwidth_coupling, verify_all, verify_theorem,
    CdfEstimate, CurrentStatusSample, GEstimate, Kernel, ObservationDensity, Profile,
    TheoremCheck, VerificationReport, VerifyConfig, DEFAULT_GRID_POINTS, DEFAULT_MASTER_SEED,
    DEFAULT_T_RULE,
};

use crate::data;
use crate::parse::{BandwidthArg, FamilyArg, QArg, SupportArg};
use crate::CliError;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

// ---------------------------------------------------------------- simulate

#[derive(Args)]
pub struct SimulateArgs {
    /// Number of observations.
    #[arg(long)]
    pub n: usize,
    /// Latent event distribution (uniform | beta:A,B | truncnorm:MU,SIGMA).
    #[arg(long, value_name = "FAMILY")]
    pub x: FamilyArg,
    /// Inspection time distribution.
    #[arg(long, value_name = "FAMILY")]
    pub t: FamilyArg,
    /// Master seed; the same seed reproduces the same file bytes.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the latent event times as a third column.
    #[arg(long)]
    pub with_truth: bool,
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let generated = generate_css(&args.x.0, &args.t.0, args.n, args.seed, 0)?;
    let latent = args.with_truth.then_some(generated.latent.as_slice());
    data::write_sample(
        &args.out,
        generated.sample.times(),
        generated.sample.statuses(),
        latent,
    )
}

// ---------------------------------------------------------------- estimate

/// Which curves to emit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Density,
    Cdf,
    Both,
}

impl FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "density" => Ok(Target::Density),
            "cdf" => Ok(Target::Cdf),
            "both" => Ok(Target::Both),
            _ => Err(format!("unknown target `{s}`; expected density, cdf, or both")),
        }
    }
}

impl Target {
    fn as_str(self) -> &'static str {
        match self {
            Target::Density => "density",
            Target::Cdf => "cdf",
            Target::Both => "both",
        }
    }
}

#[derive(Args)]
pub struct EstimateArgs {
    /// Input CSV with header `t,delta`.
    #[arg(long)]
    pub input: PathBuf,
    /// Inspection density: a family on the rescaled unit support
    /// (uniform | beta:A,B | truncnorm:MU,SIGMA) or estimate[:HTILDE].
    #[arg(long)]
    pub q: Option<QArg>,
    /// Observation support `A,B` (default 0,1).
    #[arg(long, value_name = "A,B")]
    pub support: Option<SupportArg>,
    /// Density bandwidth on the unit scale; shorthand for
    /// `--bandwidth fixed:H1`.
    #[arg(long, conflicts_with = "bandwidth")]
    pub h1: Option<f64>,
    /// Bandwidth rule: fixed:H | beta-reference | rule-of-thumb
    /// (default beta-reference).
    #[arg(long)]
    pub bandwidth: Option<BandwidthArg>,
    /// Weight bandwidth on the unit scale (default n^(-1/5)).
    #[arg(long)]
    pub h2: Option<f64>,
    /// Number of evaluation grid points.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Curves to emit: density | cdf | both (default both).
    #[arg(long)]
    pub target: Option<Target>,
    /// Clip negative density values to zero and renormalize on the grid.
    #[arg(long)]
    pub clip_negative: bool,
    /// Kernel name (default biweight).
    #[arg(long)]
    pub kernel: Option<String>,
    /// JSON config file; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output CSV path; a `.json` sidecar with the resolved configuration
    /// and warnings is written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

/// Optional keys of the estimate config file; unknown keys are rejected.
#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct FileConfig {
    q: Option<String>,
    support: Option<String>,
    h1: Option<f64>,
    bandwidth: Option<String>,
    h2: Option<f64>,
    grid: Option<usize>,
    target: Option<String>,
    clip_negative: Option<bool>,
    kernel: Option<String>,
}

struct ResolvedEstimate {
    q: QArg,
    support: (f64, f64),
    h1_rule: BandwidthArg,
    h2: Option<f64>,
    grid: usize,
    target: Target,
    clip_negative: bool,
    kernel: String,
}

fn parse_key<T: FromStr<Err = String>>(
    path: &Path,
    key: &str,
    raw: Option<&String>,
) -> Result<Option<T>, CliError> {
    raw.map(|s| {
        s.parse::<T>()
            .map_err(|e| usage(format!("config {}: key `{key}`: {e}", path.display())))
    })
    .transpose()
}

/// Merges flags over the config file over the defaults.
fn resolve_estimate(args: &EstimateArgs) -> Result<ResolvedEstimate, CliError> {
    let file = match &args.config {
        Some(path) => {
            let raw = fs::read_to_string(path)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<FileConfig>(&raw)
                .map_err(|e| usage(format!("config {}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };
    let cfg_path = args.config.as_deref().unwrap_or_else(|| Path::new(""));

    let q = match (&args.q, parse_key::<QArg>(cfg_path, "q", file.q.as_ref())?) {
        (Some(q), _) => q.clone(),
        (None, Some(q)) => q,
        (None, None) => return Err(usage("--q is required (flag or config file)")),
    };
    let support = args
        .support
        .or(parse_key::<SupportArg>(cfg_path, "support", file.support.as_ref())?)
        .map_or((0.0, 1.0), |s| s.0);

    if file.h1.is_some() && file.bandwidth.is_some() {
        return Err(usage(format!(
            "config {}: give either `h1` or `bandwidth`, not both",
            cfg_path.display()
        )));
    }
    let flag_rule = args
        .h1
        .map(BandwidthArg::Fixed)
        .or_else(|| args.bandwidth.clone());
    let file_rule = match parse_key::<BandwidthArg>(cfg_path, "bandwidth", file.bandwidth.as_ref())? {
        Some(rule) => Some(rule),
        None => file.h1.map(BandwidthArg::Fixed),
    };
    let h1_rule = flag_rule.or(file_rule).unwrap_or(BandwidthArg::BetaReference);

    Ok(ResolvedEstimate {
        q,
        support,
        h1_rule,
        h2: args.h2.or(file.h2),
        grid: args.grid.or(file.grid).unwrap_or(DEFAULT_GRID_POINTS),
        target: match (args.target, parse_key::<Target>(cfg_path, "target", file.target.as_ref())?)
        {
            (Some(t), _) => t,
            (None, Some(t)) => t,
            (None, None) => Target::Both,
        },
        clip_negative: args.clip_negative || file.clip_negative.unwrap_or(false),
        kernel: args
            .kernel
            .clone()
            .or(file.kernel)
            .unwrap_or_else(|| "biweight".to_string()),
    })
}

/// Clips negatives to zero and rescales so the curve integrates to one over
/// the grid (trapezoid rule). Presentation only; the estimate itself is
/// unchanged.
fn clip_and_renormalize(xs: &[f64], ys: &mut [f64], warnings: &mut Vec<String>) {
    let clipped = ys.iter().filter(|y| **y < 0.0).count();
    if clipped == 0 {
        return;
    }
    for y in ys.iter_mut() {
        if *y < 0.0 {
            *y = 0.0;
        }
    }
    let mut mass = 0.0;
    for i in 1..xs.len() {
        mass += 0.5 * (ys[i] + ys[i - 1]) * (xs[i] - xs[i - 1]);
    }
    if mass > 0.0 {
        for y in ys.iter_mut() {
            *y /= mass;
        }
        warnings.push(format!(
            "clipped {clipped} negative density values and renormalized (grid mass was {mass:.6})"
        ));
    } else {
        warnings.push(format!(
            "clipped {clipped} negative density values; grid mass was zero, skipping renormalization"
        ));
    }
}

fn bandwidth_selection_json(sel: &BandwidthSelection) -> serde_json::Value {
    json!({
        "h": sel.h,
        "beta_fit": sel.beta_fit.map(|p| json!({"alpha": p.alpha, "beta": p.beta})),
        "moments": sel.moments.map(|m| json!({
            "mean": m.mean,
            "second_moment": m.second_moment,
            "variance": m.variance,
        })),
        "mise_numerator": sel.numerator,
        "mise_denominator": sel.denominator,
        "fallback": sel.fallback,
    })
}

pub fn estimate(args: &EstimateArgs) -> Result<(), CliError> {
    let resolved = resolve_estimate(args)?;
    let dataset = data::read_dataset(&args.input, resolved.support)?;
    let n = dataset.times.len();
    let sample = CurrentStatusSample::new(dataset.times, dataset.statuses, resolved.support)?;
    let (unit_sample, map) = sample.to_unit();
    let values = transform(&unit_sample);
    let kernel = Kernel::by_name(&resolved.kernel).map_err(|e| usage(e.to_string()))?;
    let mut warnings = Vec::new();

    let q = match &resolved.q {
        QArg::Analytic(family) => ObservationDensity::analytic(family.clone())?,
        QArg::Estimate { htilde } => {
            let q = ObservationDensity::estimated(
                unit_sample.times().to_vec(),
                *htilde,
                kernel.clone(),
            )?;
            let ht = q.htilde().expect("estimation mode carries a bandwidth");
            if htilde_scale_warning(ht, n) {
                warnings.push(format!(
                    "derivative bandwidth {ht:.4} is far from the n^(-1/7) scale"
                ));
            }
            q
        }
    };

    let (h1, selection) = match &resolved.h1_rule {
        BandwidthArg::Fixed(h) => (*h, None),
        BandwidthArg::BetaReference => {
            let sel = reference_bandwidth(&values, &q, &kernel)?;
            warnings.extend(sel.warnings.iter().cloned());
            (sel.h, Some(sel))
        }
        BandwidthArg::RuleOfThumb => (rule_of_thumb(values.values())?, None),
    };
    let h2 = resolved.h2.unwrap_or_else(|| (n as f64).powf(-0.2));
    let coupling = validate_bandwidth_coupling(h1, h2, n)?;
    warnings.extend(coupling.warnings.iter().cloned());

    let ge1 = GEstimate::new(&values, h1, &kernel)?;
    let cdf = CdfEstimate::new(&values, h2, &kernel, &q)?;
    if ge1.wide_bandwidth() {
        warnings.push(format!(
            "density bandwidth {h1} is at least 1/2; the kernel windows at x and x+1 overlap"
        ));
    }

    let want_density = resolved.target != Target::Cdf;
    let want_cdf = resolved.target != Target::Density;
    let grid_unit = grid(resolved.grid)?;
    let mut xs = Vec::new();
    let mut f_minus = Vec::new();
    let mut f_plus = Vec::new();
    let mut f_final = Vec::new();
    let mut cdf_minus = Vec::new();
    let mut cdf_plus = Vec::new();
    let mut cdf_mid = Vec::new();
    let mut skipped = 0usize;
    let mut first_failure: Option<(f64, String)> = None;
    for &u in &grid_unit {
        let point = (|| -> cskde::Result<()> {
            if want_density {
                let fm = ge1.f_minus(&q, u)?;
                let fp = ge1.f_plus(&q, u)?;
                let ff = ge1.f_final(&q, |p| cdf.cdf_combined(p), u, false)?;
                f_minus.push(fm);
                f_plus.push(fp);
                f_final.push(ff);
            }
            if want_cdf {
                let cm = cdf.cdf_minus(u)?;
                let cp = cdf.cdf_plus(u)?;
                let cc = cdf.cdf_combined(u)?;
                cdf_minus.push(cm);
                cdf_plus.push(cp);
                cdf_mid.push(cc);
            }
            Ok(())
        })();
        match point {
            Ok(()) => xs.push(u),
            Err(e) => {
                // A failed column may already have pushed; truncate back to
                // the surviving rows.
                let keep = xs.len();
                for col in [
                    &mut f_minus,
                    &mut f_plus,
                    &mut f_final,
                    &mut cdf_minus,
                    &mut cdf_plus,
                    &mut cdf_mid,
                ] {
                    col.truncate(keep);
                }
                skipped += 1;
                if first_failure.is_none() {
                    first_failure = Some((map.from_unit(u), e.to_string()));
                }
            }
        }
    }
    if let Some((x, why)) = &first_failure {
        warnings.push(format!(
            "skipped {skipped} of {} grid points; first at x = {x:.6}: {why}",
            grid_unit.len()
        ));
    }
    if xs.is_empty() {
        return Err(CliError::Data(
            "no grid point could be evaluated".to_string(),
        ));
    }

    if resolved.clip_negative && want_density {
        clip_and_renormalize(&xs, &mut f_final, &mut warnings);
    }

    // Back to the original scale: positions through the affine map,
    // densities divided by the width, probabilities unchanged.
    let width = map.width();
    let xs_out: Vec<f64> = xs.iter().map(|&u| map.from_unit(u)).collect();
    for col in [&mut f_minus, &mut f_plus, &mut f_final] {
        for y in col.iter_mut() {
            *y /= width;
        }
    }

    let mut columns: Vec<(&str, &[f64])> = vec![("x", &xs_out)];
    if want_density {
        columns.push(("f_minus", &f_minus));
        columns.push(("f_plus", &f_plus));
        columns.push(("f_final", &f_final));
    }
    if want_cdf {
        columns.push(("cdf_minus", &cdf_minus));
        columns.push(("cdf_plus", &cdf_plus));
        columns.push(("cdf", &cdf_mid));
    }
    data::write_curves(&args.out, &columns)?;

    let sidecar = json!({
        "command": "estimate",
        "input": args.input.display().to_string(),
        "output": args.out.display().to_string(),
        "n": n,
        "support": [resolved.support.0, resolved.support.1],
        "kernel": kernel.name(),
        "q": resolved.q.to_string(),
        "htilde": q.htilde(),
        "bandwidth_rule": resolved.h1_rule.to_string(),
        "selection": selection.as_ref().map(bandwidth_selection_json),
        "h1": h1,
        "h2": h2,
        "t_weight": DEFAULT_T_RULE,
        "grid_points": resolved.grid,
        "target": resolved.target.as_str(),
        "clip_negative": resolved.clip_negative,
        "coupling": {
            "h1_floor": coupling.h1_floor,
            "h2_reference": coupling.h2_reference,
            "satisfied": coupling.satisfied,
        },
        "skipped_points": skipped,
        "warnings": warnings,
    });
    let sidecar_path = sidecar_path(&args.out);
    fs::write(&sidecar_path, format!("{:#}\n", sidecar))
        .map_err(|e| CliError::Data(format!("{}: {e}", sidecar_path.display())))?;
    Ok(())
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_os_string();
    name.push(".json");
    PathBuf::from(name)
}

// --------------------------------------------------------------- bandwidth

#[derive(Args)]
pub struct BandwidthArgs {
    /// Input CSV with header `t,delta`.
    #[arg(long)]
    pub input: PathBuf,
    /// Inspection density (required by the beta-reference rule).
    #[arg(long)]
    pub q: Option<QArg>,
    /// Observation support `A,B` (default 0,1).
    #[arg(long, value_name = "A,B")]
    pub support: Option<SupportArg>,
    /// Bandwidth rule: fixed:H | beta-reference | rule-of-thumb
    /// (default beta-reference).
    #[arg(long)]
    pub bandwidth: Option<BandwidthArg>,
    /// Kernel name (default biweight).
    #[arg(long, default_value = "biweight")]
    pub kernel: String,
}

pub fn bandwidth(args: &BandwidthArgs) -> Result<(), CliError> {
    let support = args.support.map_or((0.0, 1.0), |s| s.0);
    let dataset = data::read_dataset(&args.input, support)?;
    let n = dataset.times.len();
    let sample = CurrentStatusSample::new(dataset.times, dataset.statuses, support)?;
    let (unit_sample, _) = sample.to_unit();
    let values = transform(&unit_sample);
    let kernel = Kernel::by_name(&args.kernel).map_err(|e| usage(e.to_string()))?;
    let rule = args.bandwidth.clone().unwrap_or(BandwidthArg::BetaReference);

    let report = match rule {
        BandwidthArg::Fixed(h) => json!({
            "n": n,
            "rule": rule.to_string(),
            "h": h,
            "warnings": [],
        }),
        BandwidthArg::RuleOfThumb => json!({
            "n": n,
            "rule": rule.to_string(),
            "h": rule_of_thumb(values.values())?,
            "warnings": [],
        }),
        BandwidthArg::BetaReference => {
            let q = match &args.q {
                Some(QArg::Analytic(family)) => ObservationDensity::analytic(family.clone())?,
                Some(QArg::Estimate { htilde }) => ObservationDensity::estimated(
                    unit_sample.times().to_vec(),
                    *htilde,
                    kernel.clone(),
                )?,
                None => return Err(usage("the beta-reference rule needs --q")),
            };
            let sel = reference_bandwidth(&values, &q, &kernel)?;
            let mut report = bandwidth_selection_json(&sel);
            let obj = report.as_object_mut().expect("selection serializes to an object");
            obj.insert("n".to_string(), json!(n));
            obj.insert("rule".to_string(), json!(rule.to_string()));
            obj.insert("warnings".to_string(), json!(sel.warnings));
            report
        }
    };
    println!("{:#}", report);
    Ok(())
}

// ------------------------------------------------------------------ verify

/// A single named check or the whole suite.
#[derive(Clone, Copy, Debug)]
pub enum CheckArg {
    All,
    One(TheoremCheck),
}

impl FromStr for CheckArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "all" {
            return Ok(CheckArg::All);
        }
        TheoremCheck::from_str(s)
            .map(CheckArg::One)
            .map_err(|e| e.to_string())
    }
}

#[derive(Args)]
pub struct VerifyArgs {
    /// Check name (thm-variance | thm-bias | thm-normality | thm-cdf |
    /// thm-unknown-q) or `all`.
    pub check: CheckArg,
    /// Tolerance/size profile.
    #[arg(long, default_value_t = Profile::Full)]
    pub profile: Profile,
    /// Overrides each check's primary sample size.
    #[arg(long)]
    pub n: Option<usize>,
    /// Overrides each check's primary replication count.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Master seed for the whole suite.
    #[arg(long, default_value_t = DEFAULT_MASTER_SEED)]
    pub seed: u64,
    /// Also write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn verify(args: &VerifyArgs) -> Result<ExitCode, CliError> {
    let cfg = VerifyConfig {
        profile: args.profile,
        master_seed: args.seed,
        n: args.n,
        reps: args.reps,
    };
    let report = match args.check {
        CheckArg::All => verify_all(&cfg)?,
        CheckArg::One(check) => {
            let report = verify_theorem(check, &cfg)?;
            VerificationReport {
                profile: cfg.profile,
                master_seed: cfg.master_seed,
                passed: report.passed,
                checks: vec![report],
            }
        }
    };

    for check in &report.checks {
        for line in &check.lines {
            let flag = if line.passed { "PASS" } else { "FAIL" };
            println!(
                "[{flag}] {}/{}: observed = {:.6e}, window = [{:.6e}, {:.6e}]",
                check.name, line.label, line.observed, line.lo, line.hi
            );
        }
    }
    println!(
        "verification: {}",
        if report.passed { "PASS" } else { "FAIL" }
    );

    if let Some(path) = &args.out {
        let body = serde_json::to_string_pretty(&report)
            .map_err(|e| CliError::Data(e.to_string()))?;
        fs::write(path, body + "\n")
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    }
    Ok(if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    })
}
