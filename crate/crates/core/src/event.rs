//! The canonical event log: one retained display per row.
//!
//! ```text
//! timestamp,customer_id,load,normalized_load,arm,reward
//! 1533081600,c17,148.4131591,0.2718281828,2,0
//! ```
//!
//! `timestamp` is integer seconds since the Unix epoch, `customer_id` may be
//! empty, reals are written with 10 significant digits in their shortest
//! form so that read and write round-trip byte for byte.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::arm::ArmId;
use crate::error::{Error, Result};

pub const EVENT_LOG_HEADER: [&str; 6] = [
    "timestamp",
    "customer_id",
    "load",
    "normalized_load",
    "arm",
    "reward",
];

/// One logged interaction `(L, L̃, a, r)` plus its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct LoggedEvent {
    pub timestamp: i64,
    pub customer_id: Option<String>,
    pub load: f64,
    pub normalized_load: f64,
    pub arm: ArmId,
    pub reward: bool,
}

/// Rounds to 10 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.9e}").parse().expect("formatted float parses")
}

/// Stable text form of a real: 10 significant digits, shortest representation.
pub fn fmt_real(x: f64) -> String {
    format!("{}", round_sig(x))
}

#[derive(Serialize, Deserialize)]
struct Row {
    timestamp: i64,
    customer_id: String,
    load: String,
    normalized_load: String,
    arm: usize,
    reward: u8,
}

pub fn write_events<W: Write>(writer: W, events: &[LoggedEvent]) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    out.write_record(EVENT_LOG_HEADER)?;
    for e in events {
        out.serialize(Row {
            timestamp: e.timestamp,
            customer_id: e.customer_id.clone().unwrap_or_default(),
            load: fmt_real(e.load),
            normalized_load: fmt_real(e.normalized_load),
            arm: e.arm.0,
            reward: u8::from(e.reward),
        })?;
    }
    out.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn read_events<R: Read>(reader: R) -> Result<Vec<LoggedEvent>> {
    let mut input = csv::Reader::from_reader(reader);
    let header: Vec<String> = input.headers()?.iter().map(str::to_owned).collect();
    if header != EVENT_LOG_HEADER {
        return Err(Error::param(format!(
            "event log header {header:?} does not match {EVENT_LOG_HEADER:?}"
        )));
    }
    let mut events = Vec::new();
    for (line, row) in input.deserialize::<Row>().enumerate() {
        let row = row?;
        let bad = |what: &str| Error::param(format!("event row {}: {what}", line + 1));
        let load: f64 = row.load.parse().map_err(|_| bad("load is not a number"))?;
        let normalized_load: f64 = row
            .normalized_load
            .parse()
            .map_err(|_| bad("normalized_load is not a number"))?;
        if !(0.0..=1.0).contains(&normalized_load) {
            return Err(bad("normalized_load outside [0, 1]"));
        }
        let reward = match row.reward {
            0 => false,
            1 => true,
            _ => return Err(bad("reward must be 0 or 1")),
        };
        events.push(LoggedEvent {
            timestamp: row.timestamp,
            customer_id: (!row.customer_id.is_empty()).then_some(row.customer_id),
            load,
            normalized_load,
            arm: ArmId(row.arm),
            reward,
        });
    }
    Ok(events)
}

pub fn write_events_file(path: &Path, events: &[LoggedEvent]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_events(std::io::BufWriter::new(file), events).map_err(|e| with_path(path, e))
}

pub fn read_events_file(path: &Path) -> Result<Vec<LoggedEvent>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_events(std::io::BufReader::new(file)).map_err(|e| with_path(path, e))
}

pub(crate) fn with_path(path: &Path, err: Error) -> Error {
    match err {
        Error::Io { .. } => err,
        other => Error::Format {
            path: path.to_owned(),
            message: other.to_string(),
        },
    }
}

/// Number of arms implied by a log (largest arm index + 1).
pub fn arm_count(events: &[LoggedEvent]) -> usize {
    events.iter().map(|e| e.arm.0 + 1).max().unwrap_or(0)
}
