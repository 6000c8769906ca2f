//! Command-line driver: `generate`, `ingest`, `replay` and `sweep`.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 replay non-convergence.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use oppbandit::config::{ExperimentConfig, Overrides, ScenarioKind};
use oppbandit::event::fmt_real;
use oppbandit::experiment::{self, ArmSummary, ExperimentError};
use oppbandit::Error;

#[derive(Parser)]
#[command(name = "oppband", version, about = "Opportunistic bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic uniformly-logged event log.
    Generate(Common),
    /// Preprocess raw display/click logs into the canonical event log.
    Ingest {
        #[command(flatten)]
        common: Common,
        /// Field delimiter of the raw files.
        #[arg(long, default_value_t = ',')]
        delimiter: char,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Replay every configured policy on every seed and export the aggregate.
    Replay(Common),
    /// Final regret of ucb1/adaucb over a grid of --alpha values.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory [env: OPPBAND_OUT]
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long = "base-seed")]
    base_seed: Option<u64>,
    /// Valid (retained) trials per run.
    #[arg(long = "T", alias = "steps")]
    steps: Option<usize>,
    /// Exploration width; repeat to give the sweep grid.
    #[arg(long)]
    alpha: Vec<f64>,
    #[arg(long, value_parser = ["purchase", "traffic", "bimodal"])]
    scenario: Option<String>,
    #[arg(long = "interval-seconds")]
    interval_seconds: Option<u64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long = "max-cycles")]
    max_cycles: Option<usize>,
}

enum Failure {
    /// Bad arguments or configuration.
    Usage(String),
    Run(ExperimentError),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e.into())
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        Failure::Run(e)
    }
}

impl Common {
    fn resolve(&self, single_alpha: bool) -> Result<ExperimentConfig, Failure> {
        if single_alpha && self.alpha.len() > 1 {
            return Err(Failure::Usage("--alpha may be given once here; use `sweep` for a grid".into()));
        }
        let overrides = Overrides {
            out_dir: self.out.clone(),
            seeds: self.seeds,
            base_seed: self.base_seed,
            steps: self.steps,
            alpha: if single_alpha { self.alpha.first().copied() } else { None },
            scenario: self
                .scenario
                .as_deref()
                .map(str::parse::<ScenarioKind>)
                .transpose()
                .map_err(|e| Failure::Usage(e.to_string()))?,
            interval_seconds: self.interval_seconds,
            rho: self.rho,
            max_cycles: self.max_cycles,
        };
        ExperimentConfig::resolve(self.config.as_deref(), &overrides).map_err(|e| Failure::Usage(e.to_string()))
    }
}

fn print_arms(arms: &[ArmSummary]) {
    println!("arm\tdisplays\tclicks\tfrequency\tctr");
    for (k, a) in arms.iter().enumerate() {
        let ctr = a.ctr.map(fmt_real).unwrap_or_else(|| "-".into());
        println!("{k}\t{}\t{}\t{}\t{ctr}", a.displays, a.clicks, fmt_real(a.frequency));
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Generate(common) => {
            let cfg = common.resolve(true)?;
            let out = experiment::cmd_generate(&cfg)?;
            println!("wrote {} events to {}", out.events, out.path.display());
            print_arms(&out.arms);
        }
        Command::Ingest {
            common,
            delimiter,
            inputs,
        } => {
            let cfg = common.resolve(true)?;
            let delimiter = u8::try_from(delimiter)
                .map_err(|_| Failure::Usage("delimiter must be a single ASCII character".into()))?;
            let out = experiment::cmd_ingest(&cfg, &inputs, delimiter)?;
            let s = out.stats;
            println!("wrote {} events to {}", s.displays, out.path.display());
            println!(
                "rows read {}, skipped {}, duplicates removed {}, clicks {} (matched {}, dropped {}), loads imputed {}",
                s.rows_read,
                s.rows_skipped,
                s.duplicates_removed,
                s.clicks,
                s.clicks_matched,
                s.clicks_dropped,
                s.loads_imputed
            );
            if !out.arms.is_empty() {
                print_arms(&out.arms);
            }
        }
        Command::Replay(common) => {
            let cfg = common.resolve(true)?;
            let out = experiment::cmd_replay(&cfg)?;
            println!("policy\tseeds\tfinal_regret_mean\tfinal_regret_std\tfinal_clicks_mean\tretention");
            for p in &out.aggregate.policies {
                println!(
                    "{}\t{}\t{}\t{}\t{}\t{}",
                    p.policy,
                    p.seeds,
                    fmt_real(p.regret.final_mean()),
                    fmt_real(p.regret.final_std()),
                    fmt_real(p.clicks.final_mean()),
                    fmt_real(p.retention_rate)
                );
            }
            println!("results in {}", cfg.out_dir.display());
        }
        Command::Sweep(common) => {
            let cfg = common.resolve(false)?;
            let grid = if common.alpha.is_empty() {
                vec![0.25, 0.5, 1.0, 2.0]
            } else {
                common.alpha.clone()
            };
            let out = experiment::cmd_sweep(&cfg, &grid)?;
            println!("policy\talpha\tfinal_regret_mean\tfinal_regret_std");
            for r in &out.rows {
                println!(
                    "{}\t{}\t{}\t{}",
                    r.policy,
                    fmt_real(r.alpha),
                    fmt_real(r.final_regret_mean),
                    fmt_real(r.final_regret_std)
                );
            }
            for b in &out.best {
                println!("best\t{}\talpha={}", b.policy, fmt_real(b.alpha));
            }
            println!("results in {}", cfg.out_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.root() {
                Error::NonConvergence { .. } => 3,
                Error::Config(_) => 1,
                _ => 2,
            })
        }
    }
}
