//! Parsers for the compact argument notations: distribution families as
//! `uniform`, `beta:A,B`, or `truncnorm:MU,SIGMA`; the inspection density as
//! a family or `estimate[:HTILDE]`; bandwidth selection as `fixed:H`,
//! `beta-reference`, or `rule-of-thumb`.

use std::fmt;
use std::str::FromStr;

use cskde::Family;

fn two_numbers(raw: &str, what: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = raw.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("{what} takes two comma-separated numbers, got `{raw}`"));
    }
    let a = parts[0]
        .trim()
        .parse::<f64>()
        .map_err(|_| format!("cannot parse `{}` as a number", parts[0]))?;
    let b = parts[1]
        .trim()
        .parse::<f64>()
        .map_err(|_| format!("cannot parse `{}` as a number", parts[1]))?;
    Ok((a, b))
}

/// A latent or inspection distribution on the unit interval.
#[derive(Clone, Debug)]
pub struct FamilyArg(pub Family);

impl FromStr for FamilyArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, params) = match s.split_once(':') {
            Some((name, params)) => (name, Some(params)),
            None => (s, None),
        };
        let family = match (name, params) {
            ("uniform", None) => Family::Uniform,
            ("uniform", Some(_)) => return Err("uniform takes no parameters".to_string()),
            ("beta", Some(p)) => {
                let (alpha, beta) = two_numbers(p, "beta")?;
                Family::Beta { alpha, beta }
            }
            ("truncnorm", Some(p)) => {
                let (mu, sigma) = two_numbers(p, "truncnorm")?;
                Family::TruncNorm { mu, sigma }
            }
            ("beta" | "truncnorm", None) => {
                return Err(format!("{name} needs parameters, e.g. `{name}:2,2`"))
            }
            _ => {
                return Err(format!(
                    "unknown family `{s}`; expected uniform, beta:A,B, or truncnorm:MU,SIGMA"
                ))
            }
        };
        family.validate().map_err(|e| e.to_string())?;
        Ok(FamilyArg(family))
    }
}

impl fmt::Display for FamilyArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Family::Uniform => write!(f, "uniform"),
            Family::Beta { alpha, beta } => write!(f, "beta:{alpha},{beta}"),
            Family::TruncNorm { mu, sigma } => write!(f, "truncnorm:{mu},{sigma}"),
        }
    }
}

/// How the inspection density enters the estimator: a known family on the
/// rescaled unit support, or estimated from the inspection times with an
/// optional derivative bandwidth.
#[derive(Clone, Debug)]
pub enum QArg {
    Analytic(Family),
    Estimate { htilde: Option<f64> },
}

impl FromStr for QArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "estimate" {
            return Ok(QArg::Estimate { htilde: None });
        }
        if let Some(rest) = s.strip_prefix("estimate:") {
            let htilde = rest
                .trim()
                .parse::<f64>()
                .map_err(|_| format!("cannot parse `{rest}` as a bandwidth"))?;
            return Ok(QArg::Estimate {
                htilde: Some(htilde),
            });
        }
        Ok(QArg::Analytic(FamilyArg::from_str(s)?.0))
    }
}

impl fmt::Display for QArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QArg::Analytic(family) => FamilyArg(family.clone()).fmt(f),
            QArg::Estimate { htilde: None } => write!(f, "estimate"),
            QArg::Estimate { htilde: Some(h) } => write!(f, "estimate:{h}"),
        }
    }
}

/// Bandwidth selection: a fixed value, the Beta-reference plug-in rule, or
/// the scale rule of thumb.
#[derive(Clone, Debug, PartialEq)]
pub enum BandwidthArg {
    Fixed(f64),
    BetaReference,
    RuleOfThumb,
}

impl FromStr for BandwidthArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "beta-reference" => Ok(BandwidthArg::BetaReference),
            "rule-of-thumb" => Ok(BandwidthArg::RuleOfThumb),
            _ => {
                if let Some(rest) = s.strip_prefix("fixed:") {
                    let h = rest
                        .trim()
                        .parse::<f64>()
                        .map_err(|_| format!("cannot parse `{rest}` as a bandwidth"))?;
                    Ok(BandwidthArg::Fixed(h))
                } else {
                    Err(format!(
                        "unknown bandwidth rule `{s}`; expected fixed:H, beta-reference, or rule-of-thumb"
                    ))
                }
            }
        }
    }
}

impl fmt::Display for BandwidthArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BandwidthArg::Fixed(h) => write!(f, "fixed:{h}"),
            BandwidthArg::BetaReference => write!(f, "beta-reference"),
            BandwidthArg::RuleOfThumb => write!(f, "rule-of-thumb"),
        }
    }
}

/// An observation support interval `A,B`.
#[derive(Clone, Copy, Debug)]
pub struct SupportArg(pub (f64, f64));

impl FromStr for SupportArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = two_numbers(s, "support")?;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(format!("support must be a finite interval, got `{s}`"));
        }
        Ok(SupportArg((a, b)))
    }
}

impl fmt::Display for SupportArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.0 .0, self.0 .1)
    }
}
