//! Arm-selection policies.
//!
//! Every policy shares the same decision loop: observe the normalized load,
//! pick an arm with [`Policy::select`], then feed the observed reward back
//! through [`Policy::update`]. Argmax ties always go to the lowest arm index
//! and arms that were never pulled are tried first by every index-based
//! policy, so the first `K` decisions of UCB1, AdaUCB and greedy are the arms
//! in order.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::arm::{ArmId, ArmStats};
use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 1.0;
pub const DEFAULT_EPSILON0: f64 = 0.1;
pub const DEFAULT_TAU: f64 = 10_000.0;

/// Upper confidence bound of one arm.
///
/// `Unexplored` orders above every finite value.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum UcbIndex {
    Finite(f64),
    Unexplored,
}

impl UcbIndex {
    pub fn value(self) -> Option<f64> {
        match self {
            UcbIndex::Finite(v) => Some(v),
            UcbIndex::Unexplored => None,
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("alpha must be positive, got {alpha}")))
    }
}

fn check_load(normalized_load: f64) -> Result<()> {
    if (0.0..=1.0).contains(&normalized_load) {
        Ok(())
    } else {
        Err(Error::param(format!(
            "normalized load {normalized_load} outside [0, 1]"
        )))
    }
}

fn check_trial(t: u64) -> Result<()> {
    if t >= 1 {
        Ok(())
    } else {
        Err(Error::param("trial counter starts at 1"))
    }
}

#[inline]
fn load_scaled_index(stats: &ArmStats, normalized_load: f64, ln_t: f64, alpha: f64) -> UcbIndex {
    match stats.mean() {
        None => UcbIndex::Unexplored,
        Some(mean) => {
            let width = alpha * (1.0 - normalized_load) * ln_t / stats.pulls() as f64;
            UcbIndex::Finite(mean + width.sqrt())
        }
    }
}

/// AdaUCB index: the empirical mean plus a UCB1 bonus shrunk by `1 - L̃`.
///
/// At `normalized_load == 1` the bonus vanishes and the index is exactly the
/// empirical mean.
pub fn adaucb_index(stats: &ArmStats, normalized_load: f64, t: u64, alpha: f64) -> Result<UcbIndex> {
    check_load(normalized_load)?;
    check_alpha(alpha)?;
    check_trial(t)?;
    Ok(load_scaled_index(stats, normalized_load, (t as f64).ln(), alpha))
}

/// UCB1 index, `mean + sqrt(alpha * ln t / n)`.
pub fn ucb1_index(stats: &ArmStats, t: u64, alpha: f64) -> Result<UcbIndex> {
    check_alpha(alpha)?;
    check_trial(t)?;
    Ok(match stats.mean() {
        None => UcbIndex::Unexplored,
        Some(mean) => {
            let width = alpha * (t as f64).ln() / stats.pulls() as f64;
            UcbIndex::Finite(mean + width.sqrt())
        }
    })
}

/// Annealed exploration rate of decaying epsilon-greedy: `ε₀ / (1 + t/τ)`.
pub fn deg_epsilon(t: u64, epsilon0: f64, tau: f64) -> f64 {
    epsilon0 / (1.0 + t as f64 / tau)
}

/// Algorithm and parameters of a policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyKind {
    /// Uniform random allocation, i.e. an A/B(/n) test.
    Uniform,
    /// Decaying epsilon-greedy.
    Deg { epsilon0: f64, tau: f64 },
    /// Thompson sampling with a Beta prior on every arm.
    Thompson { prior_successes: f64, prior_failures: f64 },
    Ucb1 { alpha: f64 },
    AdaUcb { alpha: f64 },
    /// Always plays the best arm of the ground truth.
    Optimal { best_arm: ArmId },
    /// Argmax of empirical means, no exploration beyond the cold start.
    Greedy,
    /// Always plays one arm.
    Fixed { arm: ArmId },
}

impl PolicyKind {
    pub fn deg() -> Self {
        PolicyKind::Deg {
            epsilon0: DEFAULT_EPSILON0,
            tau: DEFAULT_TAU,
        }
    }

    pub fn thompson() -> Self {
        PolicyKind::Thompson {
            prior_successes: 1.0,
            prior_failures: 1.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Uniform => "uniform",
            PolicyKind::Deg { .. } => "deg",
            PolicyKind::Thompson { .. } => "ts",
            PolicyKind::Ucb1 { .. } => "ucb1",
            PolicyKind::AdaUcb { .. } => "adaucb",
            PolicyKind::Optimal { .. } => "optimal",
            PolicyKind::Greedy => "greedy",
            PolicyKind::Fixed { .. } => "fixed",
        }
    }

    /// The exploration width `alpha`, for the UCB family.
    pub fn alpha(&self) -> Option<f64> {
        match self {
            PolicyKind::Ucb1 { alpha } | PolicyKind::AdaUcb { alpha } => Some(*alpha),
            _ => None,
        }
    }

    /// Same policy with a different `alpha`; non-UCB policies are returned unchanged.
    pub fn with_alpha(&self, alpha: f64) -> Self {
        match self {
            PolicyKind::Ucb1 { .. } => PolicyKind::Ucb1 { alpha },
            PolicyKind::AdaUcb { .. } => PolicyKind::AdaUcb { alpha },
            other => other.clone(),
        }
    }

    pub fn validate(&self, arms: usize) -> Result<()> {
        match *self {
            PolicyKind::Deg { epsilon0, tau } => {
                if !(epsilon0 > 0.0 && epsilon0 <= 1.0) {
                    return Err(Error::param(format!("epsilon0 {epsilon0} outside (0, 1]")));
                }
                if !(tau > 0.0 && tau.is_finite()) {
                    return Err(Error::param(format!("tau must be positive, got {tau}")));
                }
            }
            PolicyKind::Thompson {
                prior_successes,
                prior_failures,
            } => {
                if !(prior_successes > 0.0 && prior_failures > 0.0) {
                    return Err(Error::param("Beta prior parameters must be positive"));
                }
            }
            PolicyKind::Ucb1 { alpha } | PolicyKind::AdaUcb { alpha } => check_alpha(alpha)?,
            PolicyKind::Optimal { best_arm: arm } | PolicyKind::Fixed { arm } => {
                ArmId::checked(arm.0, arms)?;
            }
            PolicyKind::Uniform | PolicyKind::Greedy => {}
        }
        Ok(())
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Beta posterior counts of one arm under Thompson sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaCounts {
    pub successes: f64,
    pub failures: f64,
}

/// A running policy: parameters, per-arm statistics and its own RNG.
#[derive(Debug, Clone)]
pub struct Policy {
    kind: PolicyKind,
    stats: Vec<ArmStats>,
    beta: Vec<BetaCounts>,
    rng: ChaCha8Rng,
}

impl Policy {
    pub fn new(kind: PolicyKind, arms: usize, seed: u64) -> Result<Self> {
        if arms == 0 {
            return Err(Error::param("a policy needs at least one arm"));
        }
        kind.validate(arms)?;
        let beta = match kind {
            PolicyKind::Thompson {
                prior_successes,
                prior_failures,
            } => vec![
                BetaCounts {
                    successes: prior_successes,
                    failures: prior_failures,
                };
                arms
            ],
            _ => Vec::new(),
        };
        Ok(Self {
            kind,
            stats: vec![ArmStats::default(); arms],
            beta,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn kind(&self) -> &PolicyKind {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn arms(&self) -> usize {
        self.stats.len()
    }

    pub fn stats(&self) -> &[ArmStats] {
        &self.stats
    }

    /// Thompson posterior counts; `None` for other policies.
    pub fn beta_counts(&self, arm: ArmId) -> Option<BetaCounts> {
        self.beta.get(arm.0).copied()
    }

    /// Final empirical CTR estimate per arm (`None` for arms never pulled).
    pub fn ctr_estimates(&self) -> Vec<Option<f64>> {
        self.stats.iter().map(ArmStats::mean).collect()
    }

    /// Chooses the arm for trial `t` given the normalized load of the trial.
    pub fn select(&mut self, normalized_load: f64, t: u64) -> Result<ArmId> {
        check_load(normalized_load)?;
        check_trial(t)?;
        let arms = self.stats.len();
        let arm = match self.kind {
            PolicyKind::Uniform => self.rng.random_range(0..arms),
            PolicyKind::Deg { epsilon0, tau } => {
                if self.rng.random::<f64>() < deg_epsilon(t, epsilon0, tau) {
                    self.rng.random_range(0..arms)
                } else {
                    self.greedy_arm()
                }
            }
            PolicyKind::Thompson { .. } => {
                let mut best = 0;
                let mut best_draw = f64::NEG_INFINITY;
                for (k, counts) in self.beta.iter().enumerate() {
                    let draw = Beta::new(counts.successes, counts.failures)
                        .expect("Beta parameters stay positive")
                        .sample(&mut self.rng);
                    if draw > best_draw {
                        best = k;
                        best_draw = draw;
                    }
                }
                best
            }
            PolicyKind::Ucb1 { alpha } => self.argmax_index(0.0, t, alpha),
            PolicyKind::AdaUcb { alpha } => self.argmax_index(normalized_load, t, alpha),
            PolicyKind::Optimal { best_arm: arm } | PolicyKind::Fixed { arm } => arm.0,
            PolicyKind::Greedy => self.greedy_arm(),
        };
        Ok(ArmId(arm))
    }

    /// Records the reward (0 or 1) observed for `arm`.
    pub fn update(&mut self, arm: ArmId, reward: u8) -> Result<()> {
        let clicked = match reward {
            0 => false,
            1 => true,
            other => return Err(Error::InvalidReward(other)),
        };
        ArmId::checked(arm.0, self.arms())?;
        self.record(arm, clicked);
        Ok(())
    }

    pub(crate) fn record(&mut self, arm: ArmId, clicked: bool) {
        self.stats[arm.0].record(clicked);
        if let Some(counts) = self.beta.get_mut(arm.0) {
            if clicked {
                counts.successes += 1.0;
            } else {
                counts.failures += 1.0;
            }
        }
    }

    fn argmax_index(&self, normalized_load: f64, t: u64, alpha: f64) -> usize {
        // Unexplored arms come first, lowest index wins.
        if let Some(k) = self.stats.iter().position(|s| !s.is_explored()) {
            return k;
        }
        let ln_t = (t as f64).ln();
        let mut best = 0;
        let mut best_index = f64::NEG_INFINITY;
        for (k, s) in self.stats.iter().enumerate() {
            if let UcbIndex::Finite(v) = load_scaled_index(s, normalized_load, ln_t, alpha) {
                if v > best_index {
                    best = k;
                    best_index = v;
                }
            }
        }
        best
    }

    fn greedy_arm(&self) -> usize {
        if let Some(k) = self.stats.iter().position(|s| !s.is_explored()) {
            return k;
        }
        let mut best = 0;
        let mut best_mean = f64::NEG_INFINITY;
        for (k, s) in self.stats.iter().enumerate() {
            let mean = s.mean().unwrap_or(f64::NEG_INFINITY);
            if mean > best_mean {
                best = k;
                best_mean = mean;
            }
        }
        best
    }
}
