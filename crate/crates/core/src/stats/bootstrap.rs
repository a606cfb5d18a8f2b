//! Bias-corrected and accelerated (BCa) bootstrap intervals.
//!
//! Replicate `b` draws its resample from a ChaCha stream selected by `b`
//! under the configured seed, so the replicate set does not depend on how
//! many threads compute it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::special::{norm_cdf, norm_quantile};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            replicates: 10_000,
            alpha: 0.05,
            seed: 0x5EED_B007,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 100 {
            return Err(Error::invalid(format!("bootstrap replicates must be >= 100, got {}", self.replicates)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!("bootstrap alpha must be in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcaInterval {
    pub low: f64,
    pub high: f64,
    pub observed: f64,
    pub z0: f64,
    pub acceleration: f64,
    /// Adjusted lower/upper percentile levels actually used.
    pub level_low: f64,
    pub level_high: f64,
    /// Replicate statistics in replicate-index order.
    #[serde(skip)]
    pub replicates: Vec<f64>,
}

/// Nearest-rank index into a sorted list of `len` values for level `p`.
pub fn percentile_index(len: usize, p: f64) -> usize {
    let rank = (p * len as f64).ceil() as usize;
    rank.clamp(1, len) - 1
}

fn replicate_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn acceleration(jackknife: &[f64]) -> f64 {
    let m = jackknife.iter().sum::<f64>() / jackknife.len() as f64;
    let (mut s2, mut s3) = (0.0, 0.0);
    for &v in jackknife {
        let d = m - v;
        s2 += d * d;
        s3 += d * d * d;
    }
    if s2 == 0.0 {
        return 0.0;
    }
    s3 / (6.0 * s2.powf(1.5))
}

fn adjusted_level(z0: f64, a: f64, z: f64) -> f64 {
    let w = z0 + z;
    let denom = 1.0 - a * w;
    if denom > 0.0 {
        norm_cdf(z0 + w / denom)
    } else if w > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// BCa confidence interval for `statistic` over `samples`.
pub fn bca_bootstrap<F>(samples: &[f64], statistic: F, cfg: &BootstrapConfig) -> Result<BcaInterval>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    let n = samples.len();
    if n < 2 {
        return Err(Error::invalid(format!("bootstrap needs at least 2 samples, got {n}")));
    }
    if n < 10 {
        log::warn!("bootstrap on only {n} samples; interval is unreliable");
    }
    let observed = statistic(samples);

    let replicates: Vec<f64> = (0..cfg.replicates)
        .into_par_iter()
        .map_init(
            || vec![0.0f64; n],
            |buf, b| {
                let mut rng = replicate_rng(cfg.seed, b);
                for slot in buf.iter_mut() {
                    *slot = samples[rng.random_range(0..n)];
                }
                statistic(buf)
            },
        )
        .collect();

    let mut sorted = replicates.clone();
    sorted.sort_by(f64::total_cmp);
    let (first, last) = (sorted[0], sorted[sorted.len() - 1]);
    if first == last {
        return Ok(BcaInterval {
            low: first,
            high: first,
            observed,
            z0: 0.0,
            acceleration: 0.0,
            level_low: cfg.alpha / 2.0,
            level_high: 1.0 - cfg.alpha / 2.0,
            replicates,
        });
    }

    let b = cfg.replicates as f64;
    let below = sorted.partition_point(|&v| v < observed) as f64;
    // keep z0 finite when the observed value sits outside the replicate range
    let frac = (below / b).clamp(0.5 / b, 1.0 - 0.5 / b);
    let z0 = norm_quantile(frac);

    let jackknife: Vec<f64> = (0..n)
        .map(|i| {
            let loo: Vec<f64> = samples.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &v)| v).collect();
            statistic(&loo)
        })
        .collect();
    let a = acceleration(&jackknife);

    let level_low = adjusted_level(z0, a, norm_quantile(cfg.alpha / 2.0));
    let level_high = adjusted_level(z0, a, norm_quantile(1.0 - cfg.alpha / 2.0));
    let lo = sorted[percentile_index(sorted.len(), level_low)];
    let hi = sorted[percentile_index(sorted.len(), level_high)];

    Ok(BcaInterval {
        low: lo.min(hi),
        high: lo.max(hi),
        observed,
        z0,
        acceleration: a,
        level_low,
        level_high,
        replicates,
    })
}
