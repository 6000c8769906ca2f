//! Per-run results, multi-seed aggregation and plot-ready exports.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::arm::{ArmId, GroundTruth};
use crate::error::{Error, Result};
use crate::event::{fmt_real, round_sig, with_path};

/// Expected regret of one trial: `L · (c* − c_chosen)`.
pub fn regret_step(load: f64, chosen: ArmId, truth: &GroundTruth) -> f64 {
    load * (truth.best_ctr() - truth.ctr_of(chosen))
}

/// Trajectories of one (policy, seed) run, indexed by trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub policy: String,
    pub seed: u64,
    pub cumulative_regret: Vec<f64>,
    pub cumulative_clicks: Vec<f64>,
    /// Final empirical CTR per arm, `None` for arms never pulled.
    pub ctr_estimates: Vec<Option<f64>>,
    /// Log reads, including rejected events (equals the step count online).
    pub events_consumed: u64,
}

impl RunResult {
    pub fn steps(&self) -> usize {
        self.cumulative_regret.len()
    }

    pub fn final_regret(&self) -> f64 {
        self.cumulative_regret.last().copied().unwrap_or(0.0)
    }

    pub fn final_clicks(&self) -> f64 {
        self.cumulative_clicks.last().copied().unwrap_or(0.0)
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// First and second moments of one series point, shifted by the first
/// observation so that identical runs give exactly zero spread.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    shift: f64,
    sum: CompensatedSum,
    sum_sq: CompensatedSum,
}

impl Moments {
    fn add(&mut self, x: f64, first: bool) {
        if first {
            self.shift = x;
        }
        let d = x - self.shift;
        self.sum.add(d);
        self.sum_sq.add(d * d);
    }

    fn mean(&self, n: usize) -> f64 {
        self.shift + self.sum.value() / n as f64
    }

    /// Sample standard deviation; 0 for a single observation.
    fn std(&self, n: usize) -> f64 {
        if n < 2 {
            return 0.0;
        }
        let s = self.sum.value();
        let var = (self.sum_sq.value() - s * s / n as f64) / (n - 1) as f64;
        var.max(0.0).sqrt()
    }
}

/// Pointwise mean and standard deviation of a trajectory across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl TrajectoryStats {
    pub fn final_mean(&self) -> f64 {
        self.mean.last().copied().unwrap_or(0.0)
    }

    pub fn final_std(&self) -> f64 {
        self.std.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyAggregate {
    pub policy: String,
    pub seeds: usize,
    pub regret: TrajectoryStats,
    pub clicks: TrajectoryStats,
    /// Final regret of every run, in the order the runs were added.
    pub final_regrets: Vec<f64>,
    /// Final CTR estimates of every run, in the order the runs were added.
    pub ctr_estimates_per_seed: Vec<Vec<Option<f64>>>,
    /// Seed-mean CTR estimate per arm (over runs where the arm was pulled).
    pub mean_ctr_estimates: Vec<Option<f64>>,
    /// Retained events over consumed events, pooled across seeds.
    pub retention_rate: f64,
}

/// Pearson correlations between CTR vectors; `None` where undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub labels: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.labels.iter().position(|l| l == a)?;
        let j = self.labels.iter().position(|l| l == b)?;
        self.values[i][j]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub steps: usize,
    pub truth: Vec<f64>,
    pub policies: Vec<PolicyAggregate>,
    pub correlation: CorrelationMatrix,
}

impl AggregateResult {
    pub fn policy(&self, name: &str) -> Option<&PolicyAggregate> {
        self.policies.iter().find(|p| p.policy == name)
    }

    pub fn seeds(&self) -> usize {
        self.policies.first().map_or(0, |p| p.seeds)
    }
}

struct PolicyAccumulator {
    policy: String,
    seeds: usize,
    regret: Vec<Moments>,
    clicks: Vec<Moments>,
    final_regrets: Vec<f64>,
    ctr_estimates: Vec<Vec<Option<f64>>>,
    retained: u64,
    consumed: u64,
}

/// Streaming reduction of [`RunResult`]s into an [`AggregateResult`].
///
/// Runs are folded one at a time so trajectories need not be kept in
/// memory; with a fixed insertion order the result is bit-reproducible.
pub struct Aggregator {
    steps: Option<usize>,
    policies: Vec<PolicyAccumulator>,
}

impl Default for Aggregator {
    fn default() -> Self {
        Self::new()
    }
}

impl Aggregator {
    pub fn new() -> Self {
        Self {
            steps: None,
            policies: Vec::new(),
        }
    }

    pub fn push(&mut self, run: &RunResult) -> Result<()> {
        let steps = run.steps();
        if run.cumulative_clicks.len() != steps {
            return Err(Error::LengthMismatch {
                expected: steps,
                got: run.cumulative_clicks.len(),
            });
        }
        match self.steps {
            Some(expected) if expected != steps => {
                return Err(Error::LengthMismatch { expected, got: steps })
            }
            _ => self.steps = Some(steps),
        }
        let idx = match self.policies.iter().position(|p| p.policy == run.policy) {
            Some(i) => i,
            None => {
                self.policies.push(PolicyAccumulator {
                    policy: run.policy.clone(),
                    seeds: 0,
                    regret: vec![Moments::default(); steps],
                    clicks: vec![Moments::default(); steps],
                    final_regrets: Vec::new(),
                    ctr_estimates: Vec::new(),
                    retained: 0,
                    consumed: 0,
                });
                self.policies.len() - 1
            }
        };
        let acc = &mut self.policies[idx];
        let first = acc.seeds == 0;
        for (m, &x) in acc.regret.iter_mut().zip(&run.cumulative_regret) {
            m.add(x, first);
        }
        for (m, &x) in acc.clicks.iter_mut().zip(&run.cumulative_clicks) {
            m.add(x, first);
        }
        acc.seeds += 1;
        acc.final_regrets.push(run.final_regret());
        acc.ctr_estimates.push(run.ctr_estimates.clone());
        acc.retained += steps as u64;
        acc.consumed += run.events_consumed;
        Ok(())
    }

    pub fn finish(self, truth: &GroundTruth) -> Result<AggregateResult> {
        let steps = self.steps.ok_or(Error::Empty("no runs to aggregate"))?;
        let arms = truth.arms();
        let mut policies = Vec::with_capacity(self.policies.len());
        for acc in self.policies {
            let n = acc.seeds;
            let stats = |series: &[Moments]| TrajectoryStats {
                mean: series.iter().map(|m| m.mean(n)).collect(),
                std: series.iter().map(|m| m.std(n)).collect(),
            };
            let mean_ctr_estimates = (0..arms)
                .map(|k| {
                    let mut sum = CompensatedSum::default();
                    let mut count = 0usize;
                    for est in acc.ctr_estimates.iter().filter_map(|v| v.get(k).copied().flatten()) {
                        sum.add(est);
                        count += 1;
                    }
                    (count > 0).then(|| sum.value() / count as f64)
                })
                .collect();
            policies.push(PolicyAggregate {
                regret: stats(&acc.regret),
                clicks: stats(&acc.clicks),
                policy: acc.policy,
                seeds: n,
                final_regrets: acc.final_regrets,
                ctr_estimates_per_seed: acc.ctr_estimates,
                mean_ctr_estimates,
                retention_rate: acc.retained as f64 / acc.consumed as f64,
            });
        }
        let estimates: Vec<(String, Vec<Option<f64>>)> = policies
            .iter()
            .map(|p| (p.policy.clone(), p.mean_ctr_estimates.clone()))
            .collect();
        let correlation = ctr_correlation(&estimates, truth)?;
        Ok(AggregateResult {
            steps,
            truth: truth.ctr().to_vec(),
            policies,
            correlation,
        })
    }
}

/// Pointwise mean/std across seeds, grouped by policy in first-seen order.
pub fn aggregate<'a>(
    results: impl IntoIterator<Item = &'a RunResult>,
    truth: &GroundTruth,
) -> Result<AggregateResult> {
    let mut agg = Aggregator::new();
    for run in results {
        agg.push(run)?;
    }
    agg.finish(truth)
}

/// Pearson correlation; `None` if either vector has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let constant = |v: &[f64]| v.iter().all(|x| *x == v[0]);
    if constant(a) || constant(b) {
        return None;
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Ranks starting at 1, ties receiving their average rank.
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    pearson(&ranks(a), &ranks(b))
}

/// Pairwise Pearson correlation, across arms, between every estimate
/// vector and the ground truth (labelled `gt`, last row/column).
///
/// Vectors with a missing entry or zero variance get undefined rows.
pub fn ctr_correlation(
    estimates: &[(String, Vec<Option<f64>>)],
    truth: &GroundTruth,
) -> Result<CorrelationMatrix> {
    let arms = truth.arms();
    if arms < 2 {
        return Err(Error::param("correlation across arms needs at least two arms"));
    }
    let mut labels = Vec::with_capacity(estimates.len() + 1);
    let mut vectors: Vec<Option<Vec<f64>>> = Vec::with_capacity(estimates.len() + 1);
    for (name, est) in estimates {
        if est.len() != arms {
            return Err(Error::LengthMismatch {
                expected: arms,
                got: est.len(),
            });
        }
        labels.push(name.clone());
        vectors.push(est.iter().copied().collect());
    }
    labels.push("gt".to_owned());
    vectors.push(Some(truth.ctr().to_vec()));

    let values = vectors
        .iter()
        .map(|a| {
            vectors
                .iter()
                .map(|b| match (a, b) {
                    (Some(a), Some(b)) => pearson(a, b),
                    _ => None,
                })
                .collect()
        })
        .collect();
    Ok(CorrelationMatrix { labels, values })
}

/// Least-squares line through `(xs, ys)`; returns (slope, intercept, R²).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some((slope, my - slope * mx, r2))
}

/// 1-based steps kept on export: every `ceil(T/1000)`-th plus the last.
pub fn export_steps(steps: usize) -> Vec<usize> {
    if steps == 0 {
        return Vec::new();
    }
    let stride = steps.div_ceil(1000);
    let mut kept: Vec<usize> = (stride..=steps).step_by(stride).collect();
    if kept.last() != Some(&steps) {
        kept.push(steps);
    }
    kept
}

pub const TRAJECTORY_HEADER: [&str; 5] = ["step", "regret_mean", "regret_std", "clicks_mean", "clicks_std"];
pub const FINAL_HEADER: [&str; 8] = [
    "policy",
    "seeds",
    "final_regret_mean",
    "final_regret_std",
    "final_clicks_mean",
    "final_clicks_std",
    "retention_rate",
    "ctr_estimates",
];
pub const AGGREGATE_SCHEMA: &str = "oppbandit.aggregate.v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub step: usize,
    pub regret_mean: f64,
    pub regret_std: f64,
    pub clicks_mean: f64,
    pub clicks_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub policy: String,
    pub seeds: usize,
    pub final_regret_mean: f64,
    pub final_regret_std: f64,
    pub final_clicks_mean: f64,
    pub final_clicks_std: f64,
    pub retention_rate: f64,
    pub ctr_estimates: Vec<Option<f64>>,
    pub trajectory: Vec<TrajectoryPoint>,
}

/// Self-describing export of an aggregate, values at 10 significant digits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateDocument {
    pub schema: String,
    pub scenario: String,
    pub seeds: usize,
    pub steps: usize,
    pub truth: Vec<f64>,
    pub policies: Vec<PolicySummary>,
    pub correlation: CorrelationMatrix,
}

impl AggregateDocument {
    pub fn from_aggregate(agg: &AggregateResult, scenario: &str) -> Self {
        let kept = export_steps(agg.steps);
        let policies = agg
            .policies
            .iter()
            .map(|p| PolicySummary {
                policy: p.policy.clone(),
                seeds: p.seeds,
                final_regret_mean: round_sig(p.regret.final_mean()),
                final_regret_std: round_sig(p.regret.final_std()),
                final_clicks_mean: round_sig(p.clicks.final_mean()),
                final_clicks_std: round_sig(p.clicks.final_std()),
                retention_rate: round_sig(p.retention_rate),
                ctr_estimates: p.mean_ctr_estimates.iter().map(|c| c.map(round_sig)).collect(),
                trajectory: kept
                    .iter()
                    .map(|&step| TrajectoryPoint {
                        step,
                        regret_mean: round_sig(p.regret.mean[step - 1]),
                        regret_std: round_sig(p.regret.std[step - 1]),
                        clicks_mean: round_sig(p.clicks.mean[step - 1]),
                        clicks_std: round_sig(p.clicks.std[step - 1]),
                    })
                    .collect(),
            })
            .collect();
        let correlation = CorrelationMatrix {
            labels: agg.correlation.labels.clone(),
            values: agg
                .correlation
                .values
                .iter()
                .map(|row| row.iter().map(|v| v.map(round_sig)).collect())
                .collect(),
        };
        Self {
            schema: AGGREGATE_SCHEMA.to_owned(),
            scenario: scenario.to_owned(),
            seeds: agg.seeds(),
            steps: agg.steps,
            truth: agg.truth.iter().copied().map(round_sig).collect(),
            policies,
            correlation,
        }
    }
}

/// Paths written by [`export`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExportedFiles {
    pub trajectories: Vec<PathBuf>,
    pub final_table: PathBuf,
    pub correlation: PathBuf,
    pub document: PathBuf,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn opt_real(v: Option<f64>) -> String {
    v.map(fmt_real).unwrap_or_default()
}

/// Writes per-policy trajectory tables, the final-regret table, the
/// correlation matrix and a JSON document holding all of it into `dir`.
///
/// File names embed the scenario label and seed count:
/// `{scenario}_{policy}_s{seeds}_trajectory.csv`,
/// `{scenario}_s{seeds}_final.csv`, `{scenario}_s{seeds}_correlation.csv`
/// and `{scenario}_s{seeds}_aggregate.json`.
pub fn export(agg: &AggregateResult, scenario: &str, dir: &Path) -> Result<ExportedFiles> {
    if agg.policies.is_empty() {
        return Err(Error::Empty("aggregate has no policies"));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let doc = AggregateDocument::from_aggregate(agg, scenario);
    let seeds = doc.seeds;

    let mut trajectories = Vec::new();
    for p in &doc.policies {
        let path = dir.join(format!("{scenario}_{}_s{seeds}_trajectory.csv", p.policy));
        let mut w = csv::Writer::from_writer(create(&path)?);
        let write = |w: &mut csv::Writer<_>| -> Result<()> {
            w.write_record(TRAJECTORY_HEADER)?;
            for pt in &p.trajectory {
                w.write_record([
                    pt.step.to_string(),
                    fmt_real(pt.regret_mean),
                    fmt_real(pt.regret_std),
                    fmt_real(pt.clicks_mean),
                    fmt_real(pt.clicks_std),
                ])?;
            }
            w.flush().map_err(|e| Error::io(&path, e))
        };
        write(&mut w).map_err(|e| with_path(&path, e))?;
        trajectories.push(path);
    }

    let final_table = dir.join(format!("{scenario}_s{seeds}_final.csv"));
    {
        let mut w = csv::Writer::from_writer(create(&final_table)?);
        let write = |w: &mut csv::Writer<_>| -> Result<()> {
            w.write_record(FINAL_HEADER)?;
            for p in &doc.policies {
                let ctr: Vec<String> = p.ctr_estimates.iter().map(|c| opt_real(*c)).collect();
                w.write_record([
                    p.policy.clone(),
                    p.seeds.to_string(),
                    fmt_real(p.final_regret_mean),
                    fmt_real(p.final_regret_std),
                    fmt_real(p.final_clicks_mean),
                    fmt_real(p.final_clicks_std),
                    fmt_real(p.retention_rate),
                    ctr.join(";"),
                ])?;
            }
            w.flush().map_err(|e| Error::io(&final_table, e))
        };
        write(&mut w).map_err(|e| with_path(&final_table, e))?;
    }

    let correlation = dir.join(format!("{scenario}_s{seeds}_correlation.csv"));
    {
        let mut w = csv::Writer::from_writer(create(&correlation)?);
        let write = |w: &mut csv::Writer<_>| -> Result<()> {
            let mut header = vec!["source".to_owned()];
            header.extend(doc.correlation.labels.iter().cloned());
            w.write_record(&header)?;
            for (label, row) in doc.correlation.labels.iter().zip(&doc.correlation.values) {
                let mut record = vec![label.clone()];
                record.extend(row.iter().map(|v| opt_real(*v)));
                w.write_record(&record)?;
            }
            w.flush().map_err(|e| Error::io(&correlation, e))
        };
        write(&mut w).map_err(|e| with_path(&correlation, e))?;
    }

    let document = dir.join(format!("{scenario}_s{seeds}_aggregate.json"));
    {
        let mut w = create(&document)?;
        serde_json::to_writer_pretty(&mut w, &doc).map_err(|e| with_path(&document, e.into()))?;
        w.write_all(b"\n")
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&document, e))?;
    }

    Ok(ExportedFiles {
        trajectories,
        final_table,
        correlation,
        document,
    })
}

pub fn read_document(path: &Path) -> Result<AggregateDocument> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc: AggregateDocument =
        serde_json::from_str(&text).map_err(|e| with_path(path, e.into()))?;
    if doc.schema != AGGREGATE_SCHEMA {
        return Err(Error::Format {
            path: path.to_owned(),
            message: format!("unknown schema {:?}", doc.schema),
        });
    }
    Ok(doc)
}

pub fn read_trajectory(path: &Path) -> Result<Vec<TrajectoryPoint>> {
    let parse = || -> Result<Vec<TrajectoryPoint>> {
        let mut r = csv::Reader::from_path(path)?;
        if r.headers()?.iter().ne(TRAJECTORY_HEADER) {
            return Err(Error::param("unexpected trajectory header"));
        }
        r.deserialize().map(|row| row.map_err(Error::from)).collect()
    };
    parse().map_err(|e| with_path(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(policy: &str, regret: &[f64], clicks: &[f64]) -> RunResult {
        RunResult {
            policy: policy.to_owned(),
            seed: 0,
            cumulative_regret: regret.to_vec(),
            cumulative_clicks: clicks.to_vec(),
            ctr_estimates: vec![Some(0.1), Some(0.2), Some(0.3)],
            events_consumed: regret.len() as u64 * 3,
        }
    }

    fn truth() -> GroundTruth {
        GroundTruth::new(vec![0.1, 0.2, 0.3]).unwrap()
    }

    #[test]
    fn regret_step_values() {
        let gt = GroundTruth::new(vec![0.5, 0.3]).unwrap();
        assert_eq!(regret_step(3.0, ArmId(0), &gt), 0.0);
        assert!((regret_step(2.0, ArmId(1), &gt) - 0.4).abs() < 1e-15);
        assert_eq!(regret_step(0.0, ArmId(1), &gt), 0.0);
    }

    #[test]
    fn single_seed_aggregate_is_the_run() {
        let r = run("ucb1", &[0.1, 0.7, 1.3], &[0.0, 1.0, 1.0]);
        let agg = aggregate([&r], &truth()).unwrap();
        let p = agg.policy("ucb1").unwrap();
        assert_eq!(p.regret.mean, r.cumulative_regret);
        assert_eq!(p.regret.std, vec![0.0; 3]);
        assert_eq!(p.retention_rate, 1.0 / 3.0);
    }

    #[test]
    fn identical_runs_have_zero_spread() {
        let r = run("ts", &[0.3, 0.71, 1.9], &[1.0, 1.0, 2.0]);
        let runs = vec![r.clone(), r.clone(), r.clone(), r];
        let agg = aggregate(&runs, &truth()).unwrap();
        let p = agg.policy("ts").unwrap();
        assert!(p.regret.std.iter().all(|&s| s == 0.0));
        assert_eq!(p.regret.mean, vec![0.3, 0.71, 1.9]);
    }

    #[test]
    fn mean_final_equals_final_of_mean() {
        let runs = [
            run("a", &[1.0, 2.0, 4.0], &[0.0, 0.0, 1.0]),
            run("a", &[0.5, 1.5, 3.0], &[1.0, 1.0, 1.0]),
            run("a", &[0.0, 2.5, 2.0], &[0.0, 1.0, 2.0]),
        ];
        let agg = aggregate(&runs, &truth()).unwrap();
        let p = agg.policy("a").unwrap();
        let mean_final = p.final_regrets.iter().sum::<f64>() / 3.0;
        assert!((p.regret.final_mean() - mean_final).abs() < 1e-12);
        // sample std of {4, 3, 2}
        assert!((p.regret.final_std() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let runs = [run("a", &[1.0, 2.0], &[0.0, 0.0]), run("b", &[1.0], &[0.0])];
        assert!(matches!(
            aggregate(&runs, &truth()),
            Err(Error::LengthMismatch { expected: 2, got: 1 })
        ));
        assert!(aggregate(std::iter::empty::<&RunResult>(), &truth()).is_err());
    }

    #[test]
    fn correlation_edge_cases() {
        let gt = truth();
        let est = |v: &[f64]| v.iter().map(|&x| Some(x)).collect::<Vec<_>>();
        let m = ctr_correlation(
            &[
                ("same".into(), est(&[0.1, 0.2, 0.3])),
                ("affine".into(), est(&[1.0, 3.0, 5.0])),
                ("flat".into(), est(&[0.2, 0.2, 0.2])),
                ("partial".into(), vec![Some(0.1), None, Some(0.3)]),
            ],
            &gt,
        )
        .unwrap();
        assert!((m.get("same", "gt").unwrap() - 1.0).abs() < 1e-12);
        assert!((m.get("affine", "gt").unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(m.get("flat", "gt"), None);
        assert_eq!(m.get("flat", "flat"), None);
        assert_eq!(m.get("partial", "gt"), None);
        for i in 0..m.labels.len() {
            for j in 0..m.labels.len() {
                assert_eq!(m.values[i][j], m.values[j][i]);
            }
        }

        let two = GroundTruth::new(vec![0.1, 0.4]).unwrap();
        let m = ctr_correlation(&[("rev".into(), est(&[0.4, 0.1]))], &two).unwrap();
        assert_eq!(m.get("rev", "gt"), Some(-1.0));
        let one = GroundTruth::new(vec![0.1]).unwrap();
        assert!(ctr_correlation(&[], &one).is_err());
    }

    #[test]
    fn rank_helpers() {
        assert_eq!(ranks(&[0.3, 0.1, 0.2]), vec![3.0, 1.0, 2.0]);
        assert_eq!(ranks(&[1.0, 1.0, 0.0]), vec![2.5, 2.5, 1.0]);
        assert_eq!(spearman(&[0.01, 0.5, 0.6], &[0.1, 0.2, 0.9]), Some(1.0));
    }

    #[test]
    fn linear_fit_exact_line() {
        let xs: Vec<f64> = (0..10).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        let (slope, intercept, r2) = linear_fit(&xs, &ys).unwrap();
        assert!((slope - 3.0).abs() < 1e-12 && (intercept + 1.0).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn export_step_selection() {
        assert_eq!(export_steps(5), vec![1, 2, 3, 4, 5]);
        let kept = export_steps(100_000);
        assert_eq!(kept.len(), 1000);
        assert_eq!((kept[0], *kept.last().unwrap()), (100, 100_000));
        let odd = export_steps(2501);
        assert_eq!(odd[0], 3);
        assert_eq!(*odd.last().unwrap(), 2501);
    }
}
