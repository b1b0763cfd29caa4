//! Poissonian coincidence counting and first-order error propagation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mixes a run seed with a point index (splitmix64 finalizer), so every grid
/// point owns an independent stream regardless of evaluation order.
pub fn point_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One Poisson draw with mean `rate * integration_time`, from a generator
/// seeded directly with `seed`.
pub fn monte_carlo_counts(rate: f64, integration_time: f64, seed: u64) -> Result<u64> {
    if !(rate.is_finite() && rate >= 0.0) {
        return Err(Error::validation("rate", "must be finite and >= 0"));
    }
    if !(integration_time.is_finite() && integration_time > 0.0) {
        return Err(Error::validation("integration_time", "must be > 0"));
    }
    let mean = rate * integration_time;
    if mean == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean)
        .map_err(|e| Error::InconsistentInputs(format!("poisson mean {mean}: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(dist.sample(&mut rng) as u64)
}

/// Counts for point `index` of a run seeded with `seed`.
pub fn sample_counts(rate: f64, integration_time: f64, seed: u64, index: u64) -> Result<u64> {
    monte_carlo_counts(rate, integration_time, point_seed(seed, index))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityEstimate {
    pub visibility: f64,
    pub sigma: f64,
    pub max: f64,
    pub min: f64,
    /// The minimum sits at zero counts: `V = 1` is a boundary value and
    /// `sigma` only bounds it from one side.
    pub one_sided: bool,
}

/// Min/max visibility of `values` with `sigmas` propagated to first order.
///
/// With `S = max + min`: `dV/dmax = 2 min / S^2`, `dV/dmin = -2 max / S^2`.
pub fn visibility_with_errors(values: &[f64], sigmas: &[f64]) -> Result<VisibilityEstimate> {
    if values.len() != sigmas.len() {
        return Err(Error::validation("sigma", "one sigma per value required"));
    }
    if values.len() < 2 {
        return Err(Error::validation("series", "at least 2 samples required"));
    }
    let mut imax = 0;
    let mut imin = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[imax] {
            imax = i;
        }
        if v < values[imin] {
            imin = i;
        }
    }
    let (max, min) = (values[imax], values[imin]);
    let total = max + min;
    if total <= 0.0 {
        return Err(Error::UndefinedVisibility);
    }
    let visibility = (max - min) / total;
    let d_max = 2.0 * min / (total * total);
    let d_min = -2.0 * max / (total * total);
    let sigma = ((d_max * sigmas[imax]).powi(2) + (d_min * sigmas[imin]).powi(2)).sqrt();
    Ok(VisibilityEstimate {
        visibility,
        sigma,
        max,
        min,
        one_sided: min == 0.0,
    })
}

/// As [`visibility_with_errors`] with Poisson errors `sqrt(counts)`.
pub fn visibility_with_poisson_errors(counts: &[u64]) -> Result<VisibilityEstimate> {
    let values: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let sigmas: Vec<f64> = values.iter().map(|v| v.sqrt()).collect();
    visibility_with_errors(&values, &sigmas)
}
