//! Experiment drivers: generate, ingest, replay and sweep.
//!
//! A replay experiment is a grid of (policy, seed) cells. For synthetic data
//! every seed index gets its own log, shared by all policies of that seed;
//! for a real log every seed index starts reading at its own offset. Each
//! policy draws from a seed derived from its name and the seed index, so
//! adding a policy or an `alpha` value never changes the other cells.
//!
//! Cells run on the rayon pool; results are folded into the aggregate in
//! seed order, so outputs do not depend on the number of threads.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::arm::{ArmStats, GroundTruth};
use crate::config::{derive_seed, ExperimentConfig, PolicySpec};
use crate::error::{Error, Result};
use crate::event::{arm_count, fmt_real, read_events_file, write_events_file, LoggedEvent};
use crate::ingest::{ingest_files, IngestOptions, IngestStats, LoadSource};
use crate::policy::{Policy, PolicyKind};
use crate::replay::{replay_policy, ReplayOptions};
use crate::report::{export, AggregateResult, Aggregator, ExportedFiles, RunResult};
use crate::simulate::generate_log;

pub const EVENT_LOG_FILE: &str = "events.csv";
pub const RESOLVED_CONFIG_FILE: &str = "resolved_config.toml";

/// Seed label of synthetic logs.
pub const LOG_SEED_LABEL: &str = "log";
/// Seed label of start offsets into a real log.
pub const OFFSET_SEED_LABEL: &str = "offset";

/// Error raised inside one grid cell.
#[derive(Debug, thiserror::Error)]
#[error("policy {policy}, seed #{seed_index}: {source}")]
pub struct CellError {
    pub policy: String,
    pub seed_index: usize,
    #[source]
    pub source: Error,
}

/// Errors of the experiment drivers.
#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Cell(#[from] Box<CellError>),
    #[error(transparent)]
    Other(#[from] Error),
}

impl ExperimentError {
    pub fn root(&self) -> &Error {
        match self {
            ExperimentError::Cell(c) => &c.source,
            ExperimentError::Other(e) => e,
        }
    }
}

/// One policy column of the grid: an output label and its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPolicy {
    pub label: String,
    pub spec: PolicySpec,
}

impl GridPolicy {
    pub fn new(spec: PolicySpec) -> Self {
        let label = spec.name().to_owned();
        Self { label, spec }
    }
}

/// The data every policy of one seed index is replayed on.
struct SeedData<'a> {
    events: std::borrow::Cow<'a, [LoggedEvent]>,
    truth: GroundTruth,
    start_offset: usize,
}

/// Data source of a grid: a fixed log or per-seed synthetic logs.
pub enum DataSource {
    Log { events: Vec<LoggedEvent>, truth: GroundTruth },
    Synthetic,
}

impl DataSource {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        match &cfg.data.log {
            Some(path) => {
                let events = read_events_file(path)?;
                if events.is_empty() {
                    return Err(Error::Format {
                        path: path.clone(),
                        message: "event log is empty".into(),
                    });
                }
                let arms = arm_count(&events);
                let truth = GroundTruth::empirical(arms, events.iter().map(|e| (e.arm, e.reward)))?;
                Ok(DataSource::Log { events, truth })
            }
            None => Ok(DataSource::Synthetic),
        }
    }

    fn for_seed<'a>(&'a self, cfg: &ExperimentConfig, seed_index: usize) -> Result<SeedData<'a>> {
        match self {
            DataSource::Log { events, truth } => Ok(SeedData {
                events: std::borrow::Cow::Borrowed(events),
                truth: truth.clone(),
                start_offset: (derive_seed(cfg.seeds.base, OFFSET_SEED_LABEL, seed_index as u64)
                    % events.len() as u64) as usize,
            }),
            DataSource::Synthetic => {
                let seed = derive_seed(cfg.seeds.base, LOG_SEED_LABEL, seed_index as u64);
                let log = generate_log(&cfg.synthetic_spec(seed))?;
                Ok(SeedData {
                    events: std::borrow::Cow::Owned(log.events),
                    truth: log.truth,
                    start_offset: 0,
                })
            }
        }
    }

    /// Ground truth used to score regret (the same for every seed).
    pub fn truth(&self, cfg: &ExperimentConfig) -> Result<GroundTruth> {
        match self {
            DataSource::Log { truth, .. } => Ok(truth.clone()),
            DataSource::Synthetic => GroundTruth::new(cfg.data.ctr.clone()),
        }
    }
}

fn run_seed(
    cfg: &ExperimentConfig,
    data: &DataSource,
    policies: &[GridPolicy],
    seed_index: usize,
) -> std::result::Result<Vec<RunResult>, Box<CellError>> {
    let cell_err = |policy: &str, source| {
        Box::new(CellError {
            policy: policy.to_owned(),
            seed_index,
            source,
        })
    };
    let seed_data = data
        .for_seed(cfg, seed_index)
        .map_err(|e| cell_err("*", e))?;
    let arms = seed_data.truth.arms();
    let opts = ReplayOptions {
        steps: cfg.steps,
        max_cycles: cfg.max_cycles,
        start_offset: seed_data.start_offset,
    };
    policies
        .iter()
        .map(|gp| {
            let kind = gp.spec.resolve(&seed_data.truth);
            let seed = derive_seed(cfg.seeds.base, kind.name(), seed_index as u64);
            let mut policy = Policy::new(kind, arms, seed).map_err(|e| cell_err(&gp.label, e))?;
            let result = replay_policy(&mut policy, &seed_data.events, &seed_data.truth, opts)
                .map_err(|e| cell_err(&gp.label, e))?;
            let mut run = result.into_run(seed);
            run.policy = gp.label.clone();
            Ok(run)
        })
        .collect()
}

/// Replays every policy on every seed and folds the runs into an aggregate.
pub fn run_grid(
    cfg: &ExperimentConfig,
    data: &DataSource,
    policies: &[GridPolicy],
) -> std::result::Result<AggregateResult, ExperimentError> {
    let truth = data.truth(cfg)?;
    let mut agg = Aggregator::new();
    let chunk = rayon::current_num_threads().max(1);
    let indices: Vec<usize> = (0..cfg.seeds.count).collect();
    for block in indices.chunks(chunk) {
        let runs: Vec<_> = block
            .par_iter()
            .map(|&i| run_seed(cfg, data, policies, i))
            .collect();
        for seed_runs in runs {
            for run in seed_runs? {
                agg.push(&run)?;
            }
        }
    }
    Ok(agg.finish(&truth)?)
}

fn prepare_out_dir(cfg: &ExperimentConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    let path = cfg.out_dir.join(RESOLVED_CONFIG_FILE);
    fs::write(&path, cfg.to_toml()).map_err(|e| Error::io(path, e))
}

/// Per-arm summary of a generated or ingested log.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmSummary {
    pub displays: u64,
    pub clicks: u64,
    pub frequency: f64,
    pub ctr: Option<f64>,
}

pub fn summarize_log(events: &[LoggedEvent]) -> Vec<ArmSummary> {
    let arms = arm_count(events);
    let mut stats = vec![ArmStats::default(); arms];
    for e in events {
        stats[e.arm.0].record(e.reward);
    }
    stats
        .iter()
        .map(|s| ArmSummary {
            displays: s.pulls(),
            clicks: s.reward_sum(),
            frequency: s.pulls() as f64 / events.len() as f64,
            ctr: s.mean(),
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct GenerateOutcome {
    pub path: PathBuf,
    pub events: usize,
    pub arms: Vec<ArmSummary>,
}

/// Writes the synthetic log of seed index 0 to `<out_dir>/events.csv`.
pub fn cmd_generate(cfg: &ExperimentConfig) -> Result<GenerateOutcome> {
    prepare_out_dir(cfg)?;
    let seed = derive_seed(cfg.seeds.base, LOG_SEED_LABEL, 0);
    let log = generate_log(&cfg.synthetic_spec(seed))?;
    let path = cfg.out_dir.join(EVENT_LOG_FILE);
    write_events_file(&path, &log.events)?;
    Ok(GenerateOutcome {
        arms: summarize_log(&log.events),
        events: log.events.len(),
        path,
    })
}

#[derive(Debug, Clone)]
pub struct IngestOutcome {
    pub path: PathBuf,
    pub stats: IngestStats,
    pub arms: Vec<ArmSummary>,
}

/// Preprocesses raw logs into `<out_dir>/events.csv`.
pub fn cmd_ingest(cfg: &ExperimentConfig, inputs: &[PathBuf], delimiter: u8) -> Result<IngestOutcome> {
    prepare_out_dir(cfg)?;
    let opts = IngestOptions {
        delimiter,
        load: match cfg.scenario.kind {
            crate::config::ScenarioKind::Traffic => LoadSource::Traffic {
                interval_seconds: cfg.scenario.traffic.interval_seconds,
            },
            _ => LoadSource::PurchasingPower,
        },
        rho: cfg.rho,
    };
    let paths: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
    let (events, stats) = ingest_files(&paths, &opts)?;
    let path = cfg.out_dir.join(EVENT_LOG_FILE);
    write_events_file(&path, &events)?;
    Ok(IngestOutcome {
        path,
        stats,
        arms: summarize_log(&events),
    })
}

#[derive(Debug, Clone)]
pub struct ReplayOutcome {
    pub aggregate: AggregateResult,
    pub files: ExportedFiles,
}

/// Replays every configured policy on every seed and exports the aggregate.
pub fn cmd_replay(cfg: &ExperimentConfig) -> std::result::Result<ReplayOutcome, ExperimentError> {
    cfg.validate()?;
    prepare_out_dir(cfg)?;
    let data = DataSource::from_config(cfg)?;
    let policies: Vec<GridPolicy> = cfg.policies.iter().cloned().map(GridPolicy::new).collect();
    let aggregate = run_grid(cfg, &data, &policies)?;
    let files = export(&aggregate, &cfg.scenario_label(), &cfg.out_dir)?;
    Ok(ReplayOutcome { aggregate, files })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub policy: String,
    pub alpha: f64,
    pub final_regret_mean: f64,
    pub final_regret_std: f64,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    /// One row per (policy, alpha), policies in config order, alphas ascending.
    pub rows: Vec<SweepRow>,
    /// Lowest mean final regret per policy (smallest alpha on ties).
    pub best: Vec<SweepRow>,
    pub aggregate: AggregateResult,
    pub table: PathBuf,
    pub best_table: PathBuf,
}

pub const SWEEP_HEADER: [&str; 4] = ["policy", "alpha", "final_regret_mean", "final_regret_std"];

fn sweep_label(name: &str, alpha: f64) -> String {
    format!("{name}@{}", fmt_real(alpha))
}

/// Final regret of every UCB-family policy for every `alpha` in `grid`.
///
/// All cells of a seed index share one log, and a policy's seed does not
/// depend on `alpha`, so a singleton grid reproduces `cmd_replay`.
pub fn cmd_sweep(cfg: &ExperimentConfig, grid: &[f64]) -> std::result::Result<SweepOutcome, ExperimentError> {
    cfg.validate()?;
    if grid.is_empty() {
        return Err(Error::Config("alpha grid is empty".into()).into());
    }
    let mut alphas = grid.to_vec();
    if let Some(bad) = alphas.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
        return Err(Error::Config(format!("alpha {bad} must be positive")).into());
    }
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();
    let swept: Vec<&PolicySpec> = cfg.policies.iter().filter(|p| p.has_alpha()).collect();
    if swept.is_empty() {
        return Err(Error::Config("no ucb1/adaucb policy to sweep".into()).into());
    }
    prepare_out_dir(cfg)?;

    let mut policies = Vec::new();
    for spec in &swept {
        for &alpha in &alphas {
            let mut spec = (*spec).clone();
            spec.set_alpha(alpha);
            policies.push(GridPolicy {
                label: sweep_label(spec.name(), alpha),
                spec,
            });
        }
    }
    let data = DataSource::from_config(cfg)?;
    let aggregate = run_grid(cfg, &data, &policies)?;

    let mut rows = Vec::new();
    for gp in &policies {
        let p = aggregate.policy(&gp.label).expect("every label aggregated");
        rows.push(SweepRow {
            policy: gp.spec.name().to_owned(),
            alpha: match gp.spec {
                PolicySpec::Ucb1 { alpha } | PolicySpec::Adaucb { alpha } => alpha,
                _ => unreachable!("only UCB-family policies are swept"),
            },
            final_regret_mean: p.regret.final_mean(),
            final_regret_std: p.regret.final_std(),
        });
    }
    let mut best: Vec<SweepRow> = Vec::new();
    for row in &rows {
        match best.iter_mut().find(|b| b.policy == row.policy) {
            Some(b) if row.final_regret_mean < b.final_regret_mean => *b = row.clone(),
            Some(_) => {}
            None => best.push(row.clone()),
        }
    }

    let label = cfg.scenario_label();
    let seeds = cfg.seeds.count;
    let table = cfg.out_dir.join(format!("{label}_s{seeds}_sweep.csv"));
    let best_table = cfg.out_dir.join(format!("{label}_s{seeds}_sweep_best.csv"));
    write_sweep(&table, &rows)?;
    write_sweep(&best_table, &best)?;
    Ok(SweepOutcome {
        rows,
        best,
        aggregate,
        table,
        best_table,
    })
}

fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let write = || -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(SWEEP_HEADER)?;
        for r in rows {
            w.write_record([
                r.policy.clone(),
                fmt_real(r.alpha),
                fmt_real(r.final_regret_mean),
                fmt_real(r.final_regret_std),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    };
    write().map_err(|e| crate::event::with_path(path, e))
}

/// Convenience for library users: the policy kinds of a config, resolved
/// against `truth`.
pub fn resolve_policies(cfg: &ExperimentConfig, truth: &GroundTruth) -> Vec<PolicyKind> {
    cfg.policies.iter().map(|p| p.resolve(truth)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(dir: &Path) -> ExperimentConfig {
        let mut cfg = ExperimentConfig {
            out_dir: dir.to_owned(),
            steps: 500,
            ..ExperimentConfig::default()
        };
        cfg.data.n_events = 3000;
        cfg.seeds.count = 3;
        cfg
    }

    #[test]
    fn optimal_only_has_zero_regret_table() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_config(dir.path());
        cfg.policies = vec![PolicySpec::Optimal];
        let out = cmd_replay(&cfg).unwrap();
        let p = out.aggregate.policy("optimal").unwrap();
        assert!(p.regret.mean.iter().all(|&r| r == 0.0));
        assert!(dir.path().join(RESOLVED_CONFIG_FILE).is_file());
    }

    #[test]
    fn sweep_singleton_matches_replay() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_config(dir.path());
        cfg.policies = vec![PolicySpec::Ucb1 { alpha: 0.5 }, PolicySpec::Adaucb { alpha: 0.5 }];
        let replayed = cmd_replay(&cfg).unwrap().aggregate;
        let swept = cmd_sweep(&cfg, &[0.5]).unwrap();
        for row in &swept.rows {
            let p = replayed.policy(&row.policy).unwrap();
            assert_eq!(row.final_regret_mean, p.regret.final_mean());
        }
    }

    #[test]
    fn sweep_grid_order_is_irrelevant() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_config(dir.path());
        cfg.policies = vec![PolicySpec::Adaucb { alpha: 1.0 }];
        let a = cmd_sweep(&cfg, &[2.0, 0.25, 1.0]).unwrap();
        let b = cmd_sweep(&cfg, &[1.0, 2.0, 0.25]).unwrap();
        assert_eq!(a.rows, b.rows);
        let min = a
            .rows
            .iter()
            .map(|r| r.final_regret_mean)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(a.best[0].final_regret_mean, min);
        assert!(cmd_sweep(&cfg, &[]).is_err());
    }

    #[test]
    fn non_convergence_carries_cell_context() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_config(dir.path());
        cfg.max_cycles = 1;
        cfg.steps = 2000; // only ~1000 of 3000 events match a fixed arm
        cfg.policies = vec![PolicySpec::Fixed { arm: 0 }];
        let err = cmd_replay(&cfg).unwrap_err();
        assert!(matches!(err.root(), Error::NonConvergence { .. }));
        assert!(err.to_string().contains("policy fixed, seed #0"), "{err}");
    }
}
