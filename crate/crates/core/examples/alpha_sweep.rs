//! Config-driven replay and an exploration-width sweep, as the CLI runs them.

use oppbandit::config::{ExperimentConfig, PolicySpec};
use oppbandit::experiment::{cmd_replay, cmd_sweep};

const CONFIG: &str = r#"
steps = 5000

[seeds]
count = 4
base = 9

[data]
n_events = 40000

[scenario]
kind = "bimodal"

[[policies]]
kind = "ucb1"

[[policies]]
kind = "adaucb"
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = ExperimentConfig::from_toml(CONFIG)?;
    cfg.out_dir = std::env::temp_dir().join("oppbandit-sweep-example");
    cfg.policies.push(PolicySpec::Uniform);

    let replayed = cmd_replay(&cfg)?;
    println!("replay wrote {}", replayed.files.final_table.display());

    let sweep = cmd_sweep(&cfg, &[0.25, 0.5, 1.0, 2.0])?;
    for row in &sweep.rows {
        println!("{:<7} alpha={:<5} regret {:.1}", row.policy, row.alpha, row.final_regret_mean);
    }
    for best in &sweep.best {
        println!("best {} at alpha={}", best.policy, best.alpha);
    }
    Ok(())
}
