//! Generate a synthetic log, write it to CSV and read it back.

use oppbandit::event::{read_events, write_events};
use oppbandit::simulate::TrafficLoad;
use oppbandit::{generate_log, LoadScenario, SyntheticSpec};

fn main() -> oppbandit::Result<()> {
    let spec = SyntheticSpec {
        n_events: 50_000,
        scenario: LoadScenario::Traffic(TrafficLoad::default()),
        seed: 2,
        ..Default::default()
    };
    let log = generate_log(&spec)?;
    let mut buf = Vec::new();
    write_events(&mut buf, &log.events)?;
    let back = read_events(buf.as_slice())?;
    assert_eq!(back, log.events);

    let text = String::from_utf8_lossy(&buf);
    for line in text.lines().take(6) {
        println!("{line}");
    }
    println!("... {} bytes, round trip ok", buf.len());
    println!(
        "traffic thresholds {:.1}..{:.1}, truth best arm {}",
        log.normalizer.l_min(),
        log.normalizer.l_max(),
        log.truth.best_arm().0
    );
    Ok(())
}
