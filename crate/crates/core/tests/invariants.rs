use oppbandit::load::{impute_missing, LoadNormalizer};
use oppbandit::policy::{adaucb_index, ucb1_index};
use oppbandit::{ArmId, ArmStats, Policy, PolicyKind, UcbIndex};
use proptest::prelude::*;

fn stats() -> impl Strategy<Value = ArmStats> {
    (1u64..10_000).prop_flat_map(|n| (Just(n), 0..=n)).prop_map(|(n, s)| ArmStats::new(n, s).unwrap())
}

proptest! {
    #[test]
    fn adaucb_at_zero_load_is_ucb1(s in stats(), t in 1u64..1_000_000, alpha in 0.01f64..10.0) {
        prop_assert_eq!(adaucb_index(&s, 0.0, t, alpha).unwrap(), ucb1_index(&s, t, alpha).unwrap());
    }

    #[test]
    fn adaucb_at_full_load_is_the_mean(s in stats(), t in 1u64..1_000_000, alpha in 0.01f64..10.0) {
        prop_assert_eq!(adaucb_index(&s, 1.0, t, alpha).unwrap(), UcbIndex::Finite(s.mean().unwrap()));
    }

    #[test]
    fn index_does_not_grow_with_load(
        s in stats(),
        t in 1u64..1_000_000,
        alpha in 0.01f64..10.0,
        a in 0.0f64..=1.0,
        b in 0.0f64..=1.0,
    ) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let at_lo = adaucb_index(&s, lo, t, alpha).unwrap().value().unwrap();
        let at_hi = adaucb_index(&s, hi, t, alpha).unwrap().value().unwrap();
        prop_assert!(at_hi <= at_lo);
        prop_assert!(at_hi >= s.mean().unwrap());
    }

    #[test]
    fn counts_follow_observations(rewards in proptest::collection::vec((0usize..3, any::<bool>()), 0..300)) {
        let mut ucb = Policy::new(PolicyKind::AdaUcb { alpha: 1.0 }, 3, 0).unwrap();
        let mut ts = Policy::new(PolicyKind::thompson(), 3, 0).unwrap();
        for &(arm, r) in &rewards {
            ucb.update(ArmId(arm), u8::from(r)).unwrap();
            ts.update(ArmId(arm), u8::from(r)).unwrap();
        }
        for k in 0..3 {
            let pulls = rewards.iter().filter(|(a, _)| *a == k).count() as u64;
            let clicks = rewards.iter().filter(|(a, r)| *a == k && *r).count() as u64;
            prop_assert_eq!(ucb.stats()[k].pulls(), pulls);
            prop_assert_eq!(ucb.stats()[k].reward_sum(), clicks);
            let beta = ts.beta_counts(ArmId(k)).unwrap();
            prop_assert_eq!(beta.successes, 1.0 + clicks as f64);
            prop_assert_eq!(beta.failures, 1.0 + (pulls - clicks) as f64);
        }
    }

    #[test]
    fn imputation_keeps_observed_loads(
        loads in proptest::collection::vec(proptest::option::weighted(0.8, 0.0f64..1e6), 1..200),
    ) {
        prop_assume!(loads.iter().any(Option::is_some));
        let filled = impute_missing(&loads).unwrap();
        let known: Vec<f64> = loads.iter().flatten().copied().collect();
        let mean = known.iter().sum::<f64>() / known.len() as f64;
        for (orig, got) in loads.iter().zip(&filled) {
            match orig {
                Some(v) => prop_assert_eq!(*v, *got),
                None => prop_assert!((got - mean).abs() <= 1e-9 * mean.abs().max(1.0)),
            }
        }
    }

    #[test]
    fn normalized_loads_stay_in_unit_interval(
        loads in proptest::collection::vec(0.0f64..1e4, 40..400),
        probe in -1e5f64..1e5,
    ) {
        let Ok(n) = LoadNormalizer::fit(&loads, 0.05) else { return Ok(()) };
        let x = n.normalize(probe);
        prop_assert!((0.0..=1.0).contains(&x));
        for &l in &loads {
            let y = n.normalize(l);
            prop_assert!((0.0..=1.0).contains(&y));
        }
    }
}
