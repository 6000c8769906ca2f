//! Index arithmetic and a short online run for each policy family.

use oppbandit::policy::{adaucb_index, deg_epsilon, ucb1_index};
use oppbandit::{ArmStats, LoadScenario, Policy, PolicyKind, SyntheticSpec};

fn main() -> oppbandit::Result<()> {
    let stats = ArmStats::new(40, 3)?;
    let t = 1_000;
    println!("ucb1 index            {:?}", ucb1_index(&stats, t, 1.0)?);
    for load in [0.0, 0.5, 1.0] {
        println!("adaucb index at L={load:<4} {:?}", adaucb_index(&stats, load, t, 1.0)?);
    }
    println!("deg epsilon at t=5e4  {:.5}", deg_epsilon(50_000, 0.1, 10_000.0));

    let spec = SyntheticSpec {
        scenario: LoadScenario::Bimodal(Default::default()),
        seed: 7,
        ..Default::default()
    };
    let truth = spec.truth()?;
    let kinds = [
        PolicyKind::Uniform,
        PolicyKind::deg(),
        PolicyKind::thompson(),
        PolicyKind::Ucb1 { alpha: 0.5 },
        PolicyKind::AdaUcb { alpha: 0.5 },
        PolicyKind::Optimal { best_arm: truth.best_arm() },
    ];
    println!("\npolicy   final regret over 20000 online steps");
    for (i, kind) in kinds.into_iter().enumerate() {
        let mut policy = Policy::new(kind, spec.arms(), 100 + i as u64)?;
        let run = oppbandit::simulate_online(&mut policy, &spec, 20_000)?;
        println!("{:<8} {:.2}", run.policy, run.final_regret());
    }
    Ok(())
}
