//! Multi-seed aggregation and the exported result files.

use oppbandit::replay::ReplayOptions;
use oppbandit::report::{export, Aggregator};
use oppbandit::{generate_log, replay_policy, Policy, PolicyKind, SyntheticSpec};

fn main() -> oppbandit::Result<()> {
    let spec = SyntheticSpec {
        n_events: 60_000,
        ..Default::default()
    };
    let truth = spec.truth()?;
    let mut agg = Aggregator::new();
    for seed in 0..5u64 {
        let log = generate_log(&SyntheticSpec { seed, ..spec.clone() })?;
        for kind in [PolicyKind::Uniform, PolicyKind::AdaUcb { alpha: 1.0 }] {
            let mut policy = Policy::new(kind, truth.arms(), 1_000 + seed)?;
            let r = replay_policy(&mut policy, &log.events, &log.truth, ReplayOptions::new(10_000))?;
            agg.push(&r.into_run(seed))?;
        }
    }
    let result = agg.finish(&truth)?;
    for p in &result.policies {
        println!(
            "{:<7} regret {:>9.1} +- {:<7.1} clicks {:.1}",
            p.policy,
            p.regret.final_mean(),
            p.regret.final_std(),
            p.clicks.final_mean()
        );
    }
    println!("corr(adaucb, gt) = {:?}", result.correlation.get("adaucb", "gt"));

    let dir = std::env::temp_dir().join("oppbandit-aggregate-example");
    let files = export(&result, "purchase", &dir)?;
    println!("wrote {}", files.document.display());
    for t in &files.trajectories {
        println!("wrote {}", t.display());
    }
    Ok(())
}
