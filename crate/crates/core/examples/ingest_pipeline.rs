//! Raw display/click rows to canonical events.

use oppbandit::ingest::{process, read_raw, IngestOptions};

const RAW: &str = "\
timestamp,customer_id,purchasing_power,action,arm,session_hit
2018-08-01T09:00:00Z,c1,120.5,display,0,1
2018-08-01T09:00:05Z,c1,120.5,click,0,2
2018-08-01T09:01:00Z,c2,,display,2,1
2018-08-01T09:01:00Z,c2,,display,2,1
2018-08-01T09:02:00Z,c3,40,display,1,1
2018-08-01T09:03:00Z,c3,40,display,1,3
2018-08-01T09:03:30Z,c3,40,click,1,4
2018-08-01T09:04:00Z,c4,300,click,0,1
2018-08-01T09:05:00Z,c5,80,display,0,1
not-a-time,c6,1,display,0,1
";

fn main() -> oppbandit::Result<()> {
    let (records, read) = read_raw(RAW.as_bytes(), b',')?;
    let opts = IngestOptions {
        rho: 0.25,
        ..Default::default()
    };
    let (events, mut stats) = process(records, &opts)?;
    stats.rows_read = read.rows_read;
    stats.rows_skipped = read.rows_skipped;
    println!("{stats:#?}");
    for e in &events {
        println!(
            "{} {:<3} load={:<6} norm={:.3} arm={} reward={}",
            e.timestamp,
            e.customer_id.as_deref().unwrap_or("-"),
            e.load,
            e.normalized_load,
            e.arm.0,
            u8::from(e.reward)
        );
    }
    Ok(())
}
