//! Fitting truncation thresholds and mapping raw loads onto [0, 1].

use oppbandit::load::{impute_missing, normalize_all, traffic_loads, PurchaseLoad};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> oppbandit::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sampler = PurchaseLoad::default().sampler()?;
    let raw: Vec<Option<f64>> = (0..10_000).map(|_| sampler.sample(&mut rng)).collect();
    let missing = raw.iter().filter(|l| l.is_none()).count();
    let loads = impute_missing(&raw)?;
    let (norm, normalized) = normalize_all(&loads, 0.05)?;
    println!("purchase loads: {missing} missing of {}", raw.len());
    println!("thresholds l_min={:.3} l_max={:.3}", norm.l_min(), norm.l_max());
    let at_zero = normalized.iter().filter(|&&x| x == 0.0).count();
    let at_one = normalized.iter().filter(|&&x| x == 1.0).count();
    println!("mass at 0: {at_zero}, mass at 1: {at_one}");
    for raw in [50.0, 150.0, 400.0, 2_000.0] {
        println!("  load {raw:>7.1} -> {:.4}", norm.normalize(raw));
    }

    // Traffic: events per 15 minute bucket, then the same normalization.
    let timestamps: Vec<i64> = (0..5_000).map(|i| i * i / 40).collect();
    let traffic = traffic_loads(&timestamps, 900)?;
    let (tnorm, _) = normalize_all(&traffic, 0.05)?;
    println!("traffic thresholds l_min={} l_max={}", tnorm.l_min(), tnorm.l_max());
    Ok(())
}
