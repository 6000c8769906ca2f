//! Synthetic uniformly-logged data and a direct online simulator.
//!
//! Every random quantity comes from its own ChaCha stream derived from the
//! spec seed, so the arm/reward sequence of a log does not change when only
//! the load scenario does.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::arm::{ArmId, GroundTruth};
use crate::error::{Error, Result};
use crate::event::{round_sig, LoggedEvent};
use crate::load::{
    impute_missing, traffic_loads, BimodalLoad, LoadNormalizer, PurchaseLoad, DEFAULT_INTERVAL_SECONDS,
    DEFAULT_RHO,
};
use crate::policy::Policy;
use crate::report::{regret_step, RunResult};

/// 2018-08-01T00:00:00Z
pub const DEFAULT_START_TIMESTAMP: i64 = 1_533_081_600;

const STREAM_CHOICES: u64 = 0;
const STREAM_LOADS: u64 = 1;
const STREAM_ONLINE_LOADS: u64 = 2;
const STREAM_ONLINE_REWARDS: u64 = 3;

/// Arrival process and interval width of the traffic scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrafficLoad {
    pub interval_seconds: u64,
    /// Mean extra gap between consecutive events, in seconds.
    pub mean_gap_seconds: f64,
    /// Relative daily swing of the arrival rate, in `[0, 1)`.
    pub diurnal_amplitude: f64,
}

impl Default for TrafficLoad {
    fn default() -> Self {
        Self {
            interval_seconds: DEFAULT_INTERVAL_SECONDS,
            mean_gap_seconds: 1.0,
            diurnal_amplitude: 0.8,
        }
    }
}

impl TrafficLoad {
    fn validate(&self) -> Result<()> {
        if self.interval_seconds == 0 {
            return Err(Error::param("interval_seconds must be positive"));
        }
        if !(self.mean_gap_seconds > 0.0 && self.mean_gap_seconds.is_finite()) {
            return Err(Error::param("mean_gap_seconds must be positive"));
        }
        if !(0.0..1.0).contains(&self.diurnal_amplitude) {
            return Err(Error::param("diurnal_amplitude outside [0, 1)"));
        }
        Ok(())
    }
}

/// Where per-event loads come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LoadScenario {
    /// Customer purchasing power (lognormal, with missing history imputed).
    Purchase(PurchaseLoad),
    /// Number of events in the same fixed time interval.
    Traffic(TrafficLoad),
    /// Two-point loads.
    Bimodal(BimodalLoad),
}

impl Default for LoadScenario {
    fn default() -> Self {
        LoadScenario::Purchase(PurchaseLoad::default())
    }
}

impl LoadScenario {
    pub fn name(&self) -> &'static str {
        match self {
            LoadScenario::Purchase(_) => "purchase",
            LoadScenario::Traffic(_) => "traffic",
            LoadScenario::Bimodal(_) => "bimodal",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LoadScenario::Purchase(p) => p.validate(),
            LoadScenario::Traffic(t) => t.validate(),
            LoadScenario::Bimodal(b) => b.validate(),
        }
    }

    /// Strictly increasing integer timestamps and the matching real loads.
    pub fn draw<R: Rng + ?Sized>(&self, n: usize, start: i64, rng: &mut R) -> Result<(Vec<i64>, Vec<f64>)> {
        self.validate()?;
        let (gap, amplitude) = match self {
            LoadScenario::Traffic(t) => (t.mean_gap_seconds, t.diurnal_amplitude),
            _ => (1.0, 0.0),
        };
        let timestamps = arrival_times(n, start, gap, amplitude, rng);
        let loads = match self {
            LoadScenario::Purchase(p) => {
                let sampler = p.sampler()?;
                let raw: Vec<Option<f64>> = (0..n).map(|_| sampler.sample(rng)).collect();
                impute_missing(&raw)?
            }
            LoadScenario::Traffic(t) => traffic_loads(&timestamps, t.interval_seconds)?,
            LoadScenario::Bimodal(b) => (0..n).map(|_| b.sample(rng)).collect(),
        };
        Ok((timestamps, loads))
    }
}

fn arrival_times<R: Rng + ?Sized>(n: usize, start: i64, mean_gap: f64, amplitude: f64, rng: &mut R) -> Vec<i64> {
    let unit = Exp::new(1.0).expect("unit rate");
    let mut now = start;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(now);
        let phase = (now.rem_euclid(86_400) as f64) / 86_400.0 * std::f64::consts::TAU;
        let rate = 1.0 + amplitude * phase.sin();
        let extra: f64 = unit.sample(rng) * mean_gap / rate;
        now += 1 + extra.floor() as i64;
    }
    out
}

/// Parameters of a synthetic uniformly-logged experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub ctr: Vec<f64>,
    pub n_events: usize,
    pub scenario: LoadScenario,
    pub rho: f64,
    pub seed: u64,
    pub start_timestamp: i64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            ctr: vec![0.02, 0.035, 0.05],
            n_events: 3_000_000,
            scenario: LoadScenario::default(),
            rho: DEFAULT_RHO,
            seed: 0,
            start_timestamp: DEFAULT_START_TIMESTAMP,
        }
    }
}

impl SyntheticSpec {
    pub fn arms(&self) -> usize {
        self.ctr.len()
    }

    pub fn truth(&self) -> Result<GroundTruth> {
        GroundTruth::new(self.ctr.clone())
    }

    pub fn validate(&self) -> Result<()> {
        self.truth()?;
        if self.n_events < self.arms() {
            return Err(Error::param(format!(
                "n_events {} smaller than the arm count {}",
                self.n_events,
                self.arms()
            )));
        }
        self.scenario.validate()
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// A generated log and the normalizer fitted on its loads.
#[derive(Debug, Clone)]
pub struct SyntheticLog {
    pub events: Vec<LoggedEvent>,
    pub normalizer: LoadNormalizer,
    pub truth: GroundTruth,
}

/// Draws a uniformly-logged event stream: arms uniform i.i.d., rewards
/// Bernoulli in the arm's CTR independent of load, loads from the scenario
/// and normalized loads from thresholds fitted on the whole stream.
pub fn generate_log(spec: &SyntheticSpec) -> Result<SyntheticLog> {
    spec.validate()?;
    let truth = spec.truth()?;
    let n = spec.n_events;

    let mut load_rng = spec.rng(STREAM_LOADS);
    let (timestamps, loads) = spec.scenario.draw(n, spec.start_timestamp, &mut load_rng)?;
    let loads: Vec<f64> = loads.into_iter().map(round_sig).collect();
    let normalizer = LoadNormalizer::fit(&loads, spec.rho)?;

    let mut rng = spec.rng(STREAM_CHOICES);
    let arms = spec.arms();
    let events = timestamps
        .into_iter()
        .zip(loads)
        .map(|(timestamp, load)| {
            let arm = rng.random_range(0..arms);
            let reward = rng.random::<f64>() < spec.ctr[arm];
            LoggedEvent {
                timestamp,
                customer_id: None,
                load,
                normalized_load: round_sig(normalizer.normalize(load)),
                arm: ArmId(arm),
                reward,
            }
        })
        .collect();
    Ok(SyntheticLog {
        events,
        normalizer,
        truth,
    })
}

/// Runs `policy` directly against the generator for `steps` trials.
///
/// Loads are drawn fresh (their own stream) and normalized with thresholds
/// fitted on that fresh sequence; only the chosen arm's reward is drawn.
pub fn simulate_online(policy: &mut Policy, spec: &SyntheticSpec, steps: usize) -> Result<RunResult> {
    spec.validate()?;
    if steps == 0 {
        return Err(Error::param("simulation needs at least one step"));
    }
    if policy.arms() != spec.arms() {
        return Err(Error::param(format!(
            "policy has {} arms, spec has {}",
            policy.arms(),
            spec.arms()
        )));
    }
    let truth = spec.truth()?;
    let calibration = steps.max((1.0 / spec.rho).ceil() as usize);
    let mut load_rng = spec.rng(STREAM_ONLINE_LOADS);
    let (_, loads) = spec.scenario.draw(calibration, spec.start_timestamp, &mut load_rng)?;
    let normalizer = LoadNormalizer::fit(&loads, spec.rho)?;

    let mut rng = spec.rng(STREAM_ONLINE_REWARDS);
    let mut regret = Vec::with_capacity(steps);
    let mut clicks = Vec::with_capacity(steps);
    let (mut total_regret, mut total_clicks) = (0.0, 0.0);
    for (t, &load) in (1..).zip(&loads[..steps]) {
        let arm = policy.select(normalizer.normalize(load), t)?;
        let clicked = rng.random::<f64>() < truth.ctr_of(arm);
        policy.record(arm, clicked);
        total_regret += regret_step(load, arm, &truth);
        total_clicks += f64::from(u8::from(clicked));
        regret.push(total_regret);
        clicks.push(total_clicks);
    }
    Ok(RunResult {
        policy: policy.name().to_owned(),
        seed: spec.seed,
        cumulative_regret: regret,
        cumulative_clicks: clicks,
        ctr_estimates: policy.ctr_estimates(),
        events_consumed: steps as u64,
    })
}
