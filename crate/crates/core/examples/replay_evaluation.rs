//! Offline evaluation of policies on a uniformly-logged event log.

use oppbandit::replay::ReplayOptions;
use oppbandit::{generate_log, replay_policy, Policy, PolicyKind, SyntheticSpec};

fn main() -> oppbandit::Result<()> {
    let spec = SyntheticSpec {
        n_events: 200_000,
        seed: 11,
        ..Default::default()
    };
    let log = generate_log(&spec)?;
    println!("logged {} events, true ctr {:?}", log.events.len(), log.truth.ctr());

    let kinds = [
        PolicyKind::Uniform,
        PolicyKind::thompson(),
        PolicyKind::Ucb1 { alpha: 1.0 },
        PolicyKind::AdaUcb { alpha: 1.0 },
        PolicyKind::Optimal { best_arm: log.truth.best_arm() },
    ];
    println!("policy   retained  consumed  retention  clicks  regret");
    for kind in kinds {
        let mut policy = Policy::new(kind, log.truth.arms(), 5)?;
        let r = replay_policy(&mut policy, &log.events, &log.truth, ReplayOptions::new(30_000))?;
        println!(
            "{:<8} {:>8}  {:>8}  {:>9.4}  {:>6}  {:>8.1}",
            r.policy,
            r.valid_steps(),
            r.events_consumed,
            r.retention_rate(),
            r.cumulative_reward.last().unwrap(),
            r.cumulative_regret.last().unwrap()
        );
    }
    Ok(())
}
