//! Load truncation and normalization, plus the load generators.
//!
//! Loads are normalized by clamping to `[l_min, l_max]` and rescaling onto
//! `[0, 1]`. The thresholds are nearest-rank quantiles of a fitting sample:
//! `l_min` is the `ceil(ρ·n)`-th order statistic and `l_max` the
//! `ceil((1-ρ)·n)`-th.

use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_RHO: f64 = 0.05;
pub const DEFAULT_INTERVAL_SECONDS: u64 = 900;

/// Truncation thresholds and the affine map onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadNormalizer {
    l_min: f64,
    l_max: f64,
    rho: f64,
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho < 0.5 {
        Ok(())
    } else {
        Err(Error::param(format!("rho {rho} outside (0, 0.5)")))
    }
}

/// 1-based nearest rank of quantile `p` in a sample of `n`.
pub fn nearest_rank(p: f64, n: usize) -> usize {
    // The slack absorbs representation error in products like 0.95 * 100.
    let rank = (p * n as f64 - 1e-9).ceil();
    (rank.max(1.0) as usize).min(n)
}

impl LoadNormalizer {
    pub fn new(l_min: f64, l_max: f64, rho: f64) -> Result<Self> {
        check_rho(rho)?;
        if !(l_min >= 0.0 && l_max.is_finite()) {
            return Err(Error::param(format!("invalid thresholds [{l_min}, {l_max}]")));
        }
        if l_min == l_max {
            return Err(Error::DegenerateLoad { value: l_min });
        }
        if l_min > l_max {
            return Err(Error::param(format!("l_min {l_min} above l_max {l_max}")));
        }
        Ok(Self { l_min, l_max, rho })
    }

    /// Fits nearest-rank `ρ` and `1-ρ` quantile thresholds to `loads`.
    pub fn fit(loads: &[f64], rho: f64) -> Result<Self> {
        check_rho(rho)?;
        let needed = (1.0 / rho).ceil() as usize;
        if loads.len() < needed {
            return Err(Error::TooFewSamples {
                needed,
                got: loads.len(),
            });
        }
        if let Some(bad) = loads.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
            return Err(Error::param(format!("load {bad} is not a non-negative real")));
        }
        let mut sorted = loads.to_vec();
        sorted.sort_unstable_by(f64::total_cmp);
        let n = sorted.len();
        let l_min = sorted[nearest_rank(rho, n) - 1];
        let l_max = sorted[nearest_rank(1.0 - rho, n) - 1];
        Self::new(l_min, l_max, rho)
    }

    pub fn l_min(&self) -> f64 {
        self.l_min
    }

    pub fn l_max(&self) -> f64 {
        self.l_max
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn normalize(&self, load: f64) -> f64 {
        let clamped = load.clamp(self.l_min, self.l_max);
        (clamped - self.l_min) / (self.l_max - self.l_min)
    }

    /// Inverse of [`normalize`](Self::normalize) on the clamped range.
    pub fn denormalize(&self, normalized: f64) -> f64 {
        self.l_min + normalized * (self.l_max - self.l_min)
    }
}

/// Fits thresholds on `loads` and normalizes every element.
pub fn normalize_all(loads: &[f64], rho: f64) -> Result<(LoadNormalizer, Vec<f64>)> {
    let norm = LoadNormalizer::fit(loads, rho)?;
    Ok((norm, loads.iter().map(|&l| norm.normalize(l)).collect()))
}

/// Replaces each missing load with the mean of the observed ones.
pub fn impute_missing(loads: &[Option<f64>]) -> Result<Vec<f64>> {
    let (sum, count) = loads
        .iter()
        .flatten()
        .fold((0.0, 0usize), |(s, c), &l| (s + l, c + 1));
    if count == 0 {
        return Err(Error::AllMissing);
    }
    let mean = sum / count as f64;
    Ok(loads.iter().map(|l| l.unwrap_or(mean)).collect())
}

/// Customer purchasing power: lognormal spend with a point mass of
/// customers who have no purchase history (the "missing" marker).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PurchaseLoad {
    pub mu: f64,
    pub sigma: f64,
    pub p_missing: f64,
}

impl Default for PurchaseLoad {
    fn default() -> Self {
        Self {
            mu: 5.0,
            sigma: 1.0,
            p_missing: 0.1,
        }
    }
}

impl PurchaseLoad {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::param(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !self.mu.is_finite() {
            return Err(Error::param("mu must be finite"));
        }
        if !(0.0..=1.0).contains(&self.p_missing) {
            return Err(Error::param(format!("p_missing {} outside [0, 1]", self.p_missing)));
        }
        Ok(())
    }

    pub fn sampler(&self) -> Result<PurchaseSampler> {
        self.validate()?;
        Ok(PurchaseSampler {
            p_missing: self.p_missing,
            spend: LogNormal::new(self.mu, self.sigma).map_err(|e| Error::param(e.to_string()))?,
        })
    }

    /// Mean of the non-missing draws, `exp(μ + σ²/2)`.
    pub fn spend_mean(&self) -> f64 {
        (self.mu + self.sigma * self.sigma / 2.0).exp()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PurchaseSampler {
    p_missing: f64,
    spend: LogNormal<f64>,
}

impl PurchaseSampler {
    /// One draw; `None` marks a customer without purchase history.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<f64> {
        if self.p_missing > 0.0 && rng.random::<f64>() < self.p_missing {
            None
        } else {
            Some(self.spend.sample(rng))
        }
    }
}

/// I.i.d. two-point loads: `low` with probability `p_low`, else `high`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BimodalLoad {
    pub p_low: f64,
    pub low: f64,
    pub high: f64,
}

impl Default for BimodalLoad {
    fn default() -> Self {
        Self {
            p_low: 0.5,
            low: 1.0,
            high: 10.0,
        }
    }
}

impl BimodalLoad {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_low > 0.0 && self.p_low <= 1.0) {
            return Err(Error::param(format!("p_low {} outside (0, 1]", self.p_low)));
        }
        if !(self.low >= 0.0 && self.low < self.high && self.high.is_finite()) {
            return Err(Error::param(format!(
                "need 0 <= low < high, got low={} high={}",
                self.low, self.high
            )));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if rng.random::<f64>() < self.p_low {
            self.low
        } else {
            self.high
        }
    }

    pub fn mean(&self) -> f64 {
        self.p_low * self.low + (1.0 - self.p_low) * self.high
    }
}

/// Per-event traffic intensity: the number of events sharing the event's
/// fixed, epoch-aligned interval of `interval_seconds`.
///
/// `timestamps` must be sorted non-decreasing.
pub fn traffic_loads(timestamps: &[i64], interval_seconds: u64) -> Result<Vec<f64>> {
    if interval_seconds == 0 {
        return Err(Error::param("interval_seconds must be positive"));
    }
    if timestamps.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param("timestamps must be sorted non-decreasing"));
    }
    let width = interval_seconds as i64;
    let mut loads = Vec::with_capacity(timestamps.len());
    let mut start = 0;
    while start < timestamps.len() {
        let bucket = timestamps[start].div_euclid(width);
        let end = start
            + timestamps[start..]
                .iter()
                .take_while(|ts| ts.div_euclid(width) == bucket)
                .count();
        loads.extend(std::iter::repeat_n((end - start) as f64, end - start));
        start = end;
    }
    Ok(loads)
}
