#![allow(dead_code)]

use std::path::PathBuf;

use chrono::DateTime;
use oppbandit::ingest::{ingest_files, IngestOptions, IngestStats};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Expected join result, worked out by hand for `raw_sessions.csv`.
pub const GOLDEN_STATS: IngestStats = IngestStats {
    rows_read: 50,
    rows_skipped: 3,
    duplicates_removed: 2,
    displays: 28,
    clicks: 17,
    clicks_matched: 12,
    clicks_dropped: 5,
    loads_imputed: 2,
};

/// Runs the ingest pipeline on the golden fixture and compares it with the
/// hand-annotated expectation. Returns a description of the first mismatch.
pub fn check_golden_join() -> Result<(), String> {
    let raw = fixture("raw_sessions.csv");
    let (events, stats) = ingest_files(&[raw.as_path()], &IngestOptions::default()).map_err(|e| e.to_string())?;
    if stats != GOLDEN_STATS {
        return Err(format!("stats {stats:?}"));
    }

    let mut expected = csv::Reader::from_path(fixture("raw_sessions_expected.csv")).map_err(|e| e.to_string())?;
    let rows: Vec<csv::StringRecord> = expected.records().collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    if rows.len() != events.len() {
        return Err(format!("{} events, expected {}", events.len(), rows.len()));
    }
    for (i, (e, row)) in events.iter().zip(&rows).enumerate() {
        let ts = DateTime::parse_from_rfc3339(&row[0]).unwrap().timestamp();
        let arm: usize = row[2].parse().unwrap();
        let reward = &row[4] == "1";
        if e.timestamp != ts || e.customer_id.as_deref() != Some(&row[1]) || e.arm.0 != arm || e.reward != reward {
            return Err(format!("event {i}: got {e:?}, expected {row:?}"));
        }
    }

    // Imputed loads take the mean over displays with a known load.
    let known: Vec<f64> = [
        160.0, 120.0, 85.5, 85.5, 240.0, 240.0, 33.0, 410.0, 95.0, 72.0, 180.0, 55.0, 20.0, 45.0, 510.0, 75.0,
        110.0, 140.0, 65.0, 88.0, 200.0, 35.0, 99.0, 130.0, 130.0, 150.0,
    ]
    .to_vec();
    let mean = known.iter().sum::<f64>() / known.len() as f64;
    for who in ["c11", "c15"] {
        let e = events.iter().find(|e| e.customer_id.as_deref() == Some(who)).unwrap();
        if (e.load - mean).abs() > 1e-9 * mean {
            return Err(format!("imputed load for {who} is {}, expected {mean}", e.load));
        }
    }
    if events.iter().any(|e| !(0.0..=1.0).contains(&e.normalized_load)) {
        return Err("normalized load out of range".into());
    }
    Ok(())
}
