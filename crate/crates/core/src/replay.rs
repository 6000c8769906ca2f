//! Offline evaluation of a policy on a uniformly-logged event stream.
//!
//! The evaluator walks the log one event at a time and asks the policy for
//! an arm given the event's normalized load. When the choice matches the
//! logged arm the event is retained: the policy sees the reward and the
//! trial clock advances. Otherwise the event is discarded and the policy
//! learns nothing from it. Under uniform logging each event is retained with
//! probability exactly `1/K` whatever the policy does, which is what makes
//! the estimate unbiased. The log is cycled when exhausted.
//!
//! The caller is responsible for the log having been produced by a uniform
//! random logging policy; this is not checked.

use serde::{Deserialize, Serialize};

use crate::arm::{ArmId, ArmStats, GroundTruth};
use crate::error::{Error, Result};
use crate::event::LoggedEvent;
use crate::policy::Policy;
use crate::report::{regret_step, RunResult};

pub const DEFAULT_MAX_CYCLES: usize = 100;

/// The decision interface the evaluator drives.
pub trait Bandit {
    fn arms(&self) -> usize;
    fn select(&mut self, normalized_load: f64, t: u64) -> Result<ArmId>;
    fn observe(&mut self, arm: ArmId, clicked: bool);
    fn stats(&self) -> Vec<ArmStats>;
}

impl Bandit for Policy {
    fn arms(&self) -> usize {
        Policy::arms(self)
    }

    fn select(&mut self, normalized_load: f64, t: u64) -> Result<ArmId> {
        Policy::select(self, normalized_load, t)
    }

    fn observe(&mut self, arm: ArmId, clicked: bool) {
        self.record(arm, clicked);
    }

    fn stats(&self) -> Vec<ArmStats> {
        Policy::stats(self).to_vec()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplayOptions {
    /// Number of retained events to collect.
    pub steps: usize,
    /// Full passes over the log allowed before giving up.
    pub max_cycles: usize,
    /// Position of the first event read.
    pub start_offset: usize,
}

impl ReplayOptions {
    pub fn new(steps: usize) -> Self {
        Self {
            steps,
            max_cycles: DEFAULT_MAX_CYCLES,
            start_offset: 0,
        }
    }
}

/// Outcome of one replay run. All trajectories are indexed by retained step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayResult {
    pub policy: String,
    /// Log positions of the retained events, in retention order.
    pub retained_indices: Vec<usize>,
    /// Clicks collected so far, `R_t`.
    pub cumulative_reward: Vec<u64>,
    /// Expected load-weighted regret `Σ L·(c* − c_a)`.
    pub cumulative_regret: Vec<f64>,
    /// Realized load-weighted regret `Σ L·(c* − r)`.
    pub cumulative_realized_regret: Vec<f64>,
    /// Log reads including rejected events.
    pub events_consumed: u64,
    pub final_stats: Vec<ArmStats>,
}

impl ReplayResult {
    fn with_capacity(policy: String, steps: usize) -> Self {
        Self {
            policy,
            retained_indices: Vec::with_capacity(steps),
            cumulative_reward: Vec::with_capacity(steps),
            cumulative_regret: Vec::with_capacity(steps),
            cumulative_realized_regret: Vec::with_capacity(steps),
            events_consumed: 0,
            final_stats: Vec::new(),
        }
    }

    pub fn valid_steps(&self) -> usize {
        self.retained_indices.len()
    }

    /// Fraction of consumed events that were retained.
    pub fn retention_rate(&self) -> f64 {
        self.valid_steps() as f64 / self.events_consumed as f64
    }

    /// Average reward per retained event, the replay value estimate.
    pub fn value(&self) -> f64 {
        self.cumulative_reward.last().copied().unwrap_or(0) as f64 / self.valid_steps() as f64
    }

    pub fn into_run(self, seed: u64) -> RunResult {
        RunResult {
            policy: self.policy,
            seed,
            cumulative_regret: self.cumulative_regret,
            cumulative_clicks: self.cumulative_reward.into_iter().map(|c| c as f64).collect(),
            ctr_estimates: self.final_stats.iter().map(ArmStats::mean).collect(),
            events_consumed: self.events_consumed,
        }
    }
}

/// Replays `log` against `policy` until `opts.steps` events are retained.
pub fn replay<B: Bandit>(
    policy: &mut B,
    name: &str,
    log: &[LoggedEvent],
    truth: &GroundTruth,
    opts: ReplayOptions,
) -> Result<ReplayResult> {
    if log.is_empty() {
        return Err(Error::Empty("event log"));
    }
    if opts.steps == 0 {
        return Err(Error::param("replay needs at least one valid step"));
    }
    let arms = policy.arms();
    if truth.arms() != arms {
        return Err(Error::param(format!(
            "policy has {arms} arms but ground truth has {}",
            truth.arms()
        )));
    }
    if let Some(e) = log.iter().find(|e| e.arm.0 >= arms) {
        return Err(Error::ArmOutOfRange { arm: e.arm.0, arms });
    }

    let mut out = ReplayResult::with_capacity(name.to_owned(), opts.steps);
    let budget = (log.len() as u64).saturating_mul(opts.max_cycles as u64);
    let mut position = opts.start_offset % log.len();
    let mut clicks = 0u64;
    let mut regret = 0.0;
    let mut realized = 0.0;

    while out.valid_steps() < opts.steps {
        if out.events_consumed >= budget {
            out.final_stats = policy.stats();
            return Err(Error::NonConvergence {
                target: opts.steps,
                cycles: opts.max_cycles,
                partial: Box::new(out),
            });
        }
        let event = &log[position];
        let t = out.valid_steps() as u64 + 1;
        let chosen = policy.select(event.normalized_load, t)?;
        out.events_consumed += 1;
        if chosen == event.arm {
            policy.observe(chosen, event.reward);
            clicks += u64::from(event.reward);
            regret += regret_step(event.load, chosen, truth);
            realized += event.load * (truth.best_ctr() - f64::from(u8::from(event.reward)));
            out.retained_indices.push(position);
            out.cumulative_reward.push(clicks);
            out.cumulative_regret.push(regret);
            out.cumulative_realized_regret.push(realized);
        }
        position += 1;
        if position == log.len() {
            position = 0;
        }
    }
    out.final_stats = policy.stats();
    Ok(out)
}

/// Convenience wrapper for a [`Policy`], named after its kind.
pub fn replay_policy(
    policy: &mut Policy,
    log: &[LoggedEvent],
    truth: &GroundTruth,
    opts: ReplayOptions,
) -> Result<ReplayResult> {
    let name = policy.name();
    replay(policy, name, log, truth, opts)
}
