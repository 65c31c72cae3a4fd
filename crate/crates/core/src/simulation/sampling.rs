//! Seeded samplers for the Monte Carlo harness.
//!
//! Every random quantity derives from (master seed, replication index,
//! stream label): each replication gets its own counter-mode substreams, so
//! replications can run in any order on any number of workers and still
//! produce identical draws.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::families::Family;
use crate::transform::CurrentStatusSample;

/// Independent random streams within one replication.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamLabel {
    /// Latent event times Xᵢ.
    LatentX = 0,
    /// Inspection times Tᵢ.
    Inspection = 1,
}

/// Streams reserved per replication (labels may grow without reseeding).
const STREAMS_PER_REP: u64 = 8;

/// The RNG for one (seed, replication, label) coordinate.
pub fn rng_for(master_seed: u64, rep: u64, label: StreamLabel) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(rep.wrapping_mul(STREAMS_PER_REP) + label as u64);
    rng
}

/// Hard cap on rejection attempts per accepted draw.
const MAX_REJECTION_ATTEMPTS: u64 = 10_000_000;
/// Acceptance probabilities below this are treated as pathological.
const MIN_ACCEPTANCE: f64 = 1e-6;

/// i.i.d. draws from `family` using the supplied stream.
pub fn sample_family(family: &Family, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    family.validate()?;
    match *family {
        Family::Uniform => Ok((0..n).map(|_| rng.random::<f64>()).collect()),
        Family::Beta { alpha, beta } => {
            let dist = rand_distr::Beta::new(alpha, beta)
                .map_err(|e| Error::Sampling(format!("beta sampler: {e}")))?;
            Ok((0..n).map(|_| rng.sample(dist)).collect())
        }
        Family::TruncNorm { mu, sigma } => {
            let acceptance = crate::families::truncnorm_mass(mu, sigma);
            if acceptance < MIN_ACCEPTANCE {
                return Err(Error::Sampling(format!(
                    "truncated normal ({mu}, {sigma}) has acceptance probability \
                     {acceptance:e} below {MIN_ACCEPTANCE:e}"
                )));
            }
            let dist = rand_distr::Normal::new(mu, sigma)
                .map_err(|e| Error::Sampling(format!("normal sampler: {e}")))?;
            let mut out = Vec::with_capacity(n);
            while out.len() < n {
                let mut attempts = 0u64;
                loop {
                    let z: f64 = rng.sample(dist);
                    if (0.0..=1.0).contains(&z) {
                        out.push(z);
                        break;
                    }
                    attempts += 1;
                    if attempts >= MAX_REJECTION_ATTEMPTS {
                        return Err(Error::Sampling(format!(
                            "rejection sampler exceeded {MAX_REJECTION_ATTEMPTS} attempts \
                             for truncated normal ({mu}, {sigma})"
                        )));
                    }
                }
            }
            Ok(out)
        }
    }
}

/// i.i.d. Beta(α, β) draws, deterministic in `seed`.
pub fn sample_beta(alpha: f64, beta: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_family(&Family::Beta { alpha, beta }, n, &mut rng)
}

/// i.i.d. draws from Normal(μ, σ²) conditioned on [0, 1], deterministic in
/// `seed`.
pub fn sample_truncnorm(mu: f64, sigma: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_family(&Family::TruncNorm { mu, sigma }, n, &mut rng)
}

/// One simulated current status data set plus the latent times that produced
/// it. The latent values never enter estimation; they exist for oracle
/// comparisons.
#[derive(Clone, Debug)]
pub struct GeneratedSample {
    pub sample: CurrentStatusSample,
    pub latent: Vec<f64>,
}

/// Draws Xᵢ and Tᵢ independently and records δᵢ = 1{xᵢ ≤ tᵢ}.
pub fn generate_css(
    x_family: &Family,
    q_family: &Family,
    n: usize,
    master_seed: u64,
    rep: u64,
) -> Result<GeneratedSample> {
    let mut x_rng = rng_for(master_seed, rep, StreamLabel::LatentX);
    let mut t_rng = rng_for(master_seed, rep, StreamLabel::Inspection);
    let latent = sample_family(x_family, n, &mut x_rng)?;
    let times = sample_family(q_family, n, &mut t_rng)?;
    let statuses: Vec<bool> = latent.iter().zip(&times).map(|(&x, &t)| x <= t).collect();
    let sample = CurrentStatusSample::new(times, statuses, (0.0, 1.0))?;
    Ok(GeneratedSample { sample, latent })
}
