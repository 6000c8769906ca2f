//! Raw display/click logs to the canonical event log.
//!
//! Raw input is delimited text with a header naming the columns
//! `timestamp, customer_id, purchasing_power, action, arm, session_hit`
//! (any order, extra columns ignored). Timestamps are ISO-8601; the calendar
//! day used by the join is the UTC date of the timestamp. An empty
//! `purchasing_power` marks a customer without purchase history.
//!
//! The pipeline drops exact duplicate rows, turns every display into one
//! event, and rewards a display when a click on the same
//! `(customer, arm, day)` happens at the same or a later session hit. A click
//! is credited to the nearest preceding display that has not been credited
//! yet, so a single click never rewards two displays.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::Read;
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};

use crate::arm::ArmId;
use crate::error::{Error, Result};
use crate::event::{round_sig, with_path, LoggedEvent};
use crate::load::{impute_missing, traffic_loads, LoadNormalizer, DEFAULT_RHO};

pub const RAW_COLUMNS: [&str; 6] = [
    "timestamp",
    "customer_id",
    "purchasing_power",
    "action",
    "arm",
    "session_hit",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Display,
    Click,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub timestamp: DateTime<Utc>,
    pub customer_id: String,
    pub purchasing_power: Option<f64>,
    pub action: Action,
    pub arm: ArmId,
    pub session_hit: u32,
}

impl RawRecord {
    pub fn date(&self) -> NaiveDate {
        self.timestamp.date_naive()
    }

    fn key(&self) -> (i64, u32, &str, Option<u64>, Action, usize, u32) {
        (
            self.timestamp.timestamp(),
            self.timestamp.timestamp_subsec_nanos(),
            &self.customer_id,
            self.purchasing_power.map(f64::to_bits),
            self.action,
            self.arm.0,
            self.session_hit,
        )
    }
}

/// Counters reported by the pipeline.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestStats {
    pub rows_read: usize,
    pub rows_skipped: usize,
    pub duplicates_removed: usize,
    pub displays: usize,
    pub clicks: usize,
    pub clicks_matched: usize,
    pub clicks_dropped: usize,
    pub loads_imputed: usize,
}

impl IngestStats {
    fn absorb(&mut self, other: IngestStats) {
        self.rows_read += other.rows_read;
        self.rows_skipped += other.rows_skipped;
    }
}

/// Where event loads come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadSource {
    PurchasingPower,
    Traffic { interval_seconds: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IngestOptions {
    pub delimiter: u8,
    pub load: LoadSource,
    pub rho: f64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            load: LoadSource::PurchasingPower,
            rho: DEFAULT_RHO,
        }
    }
}

pub fn parse_timestamp(text: &str) -> Option<DateTime<Utc>> {
    let text = text.trim();
    if let Ok(ts) = DateTime::parse_from_rfc3339(text) {
        return Some(ts.with_timezone(&Utc));
    }
    ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"]
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(text, fmt).ok())
        .map(|naive| naive.and_utc())
}

fn parse_action(text: &str) -> Option<Action> {
    match text.trim().to_ascii_lowercase().as_str() {
        "display" => Some(Action::Display),
        "click" => Some(Action::Click),
        _ => None,
    }
}

/// Parses raw records, skipping (and counting) rows that do not parse.
pub fn read_raw<R: Read>(reader: R, delimiter: u8) -> Result<(Vec<RawRecord>, IngestStats)> {
    let mut input = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .from_reader(reader);
    let headers = input.headers()?.clone();
    let mut columns = [0usize; 6];
    for (slot, name) in columns.iter_mut().zip(RAW_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::param(format!("raw log has no {name:?} column")))?;
    }
    let [ts_col, id_col, pp_col, action_col, arm_col, hit_col] = columns;

    let mut stats = IngestStats::default();
    let mut records = Vec::new();
    for row in input.records() {
        stats.rows_read += 1;
        let parsed = row.ok().and_then(|row| {
            let field = |i: usize| row.get(i).map(str::trim);
            let purchasing_power = match field(pp_col)? {
                "" => None,
                text => Some(text.parse::<f64>().ok().filter(|v| *v >= 0.0 && v.is_finite())?),
            };
            let session_hit: u32 = field(hit_col)?.parse().ok().filter(|h| *h >= 1)?;
            let customer_id = field(id_col)?.to_owned();
            if customer_id.is_empty() {
                return None;
            }
            Some(RawRecord {
                timestamp: parse_timestamp(field(ts_col)?)?,
                customer_id,
                purchasing_power,
                action: parse_action(field(action_col)?)?,
                arm: ArmId(field(arm_col)?.parse().ok()?),
                session_hit,
            })
        });
        match parsed {
            Some(r) => records.push(r),
            None => stats.rows_skipped += 1,
        }
    }
    Ok((records, stats))
}

/// Removes exact duplicate rows, keeping first occurrences in order.
/// Returns the kept records and the number removed.
pub fn dedupe(records: Vec<RawRecord>) -> (Vec<RawRecord>, usize) {
    let before = records.len();
    let kept: Vec<RawRecord> = {
        let mut seen = HashSet::with_capacity(records.len());
        let mut keep = vec![false; records.len()];
        for (i, r) in records.iter().enumerate() {
            keep[i] = seen.insert(r.key());
        }
        records
            .into_iter()
            .zip(keep)
            .filter_map(|(r, k)| k.then_some(r))
            .collect()
    };
    let removed = before - kept.len();
    (kept, removed)
}

/// A display with its reward, before loads are attached.
#[derive(Debug, Clone, PartialEq)]
pub struct JoinedEvent {
    pub timestamp: DateTime<Utc>,
    pub customer_id: String,
    pub purchasing_power: Option<f64>,
    pub arm: ArmId,
    pub session_hit: u32,
    pub reward: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JoinOutcome {
    /// One event per display, ordered by timestamp (input order on ties).
    pub events: Vec<JoinedEvent>,
    pub clicks: usize,
    pub clicks_matched: usize,
    pub clicks_dropped: usize,
}

/// Joins clicks to displays on `(customer_id, arm, date)` with
/// `display.session_hit <= click.session_hit`.
pub fn join_clicks(records: &[RawRecord]) -> JoinOutcome {
    type Key<'a> = (&'a str, usize, NaiveDate);
    let mut groups: HashMap<Key<'_>, (Vec<usize>, Vec<usize>)> = HashMap::new();
    for (i, r) in records.iter().enumerate() {
        let entry = groups.entry((&r.customer_id, r.arm.0, r.date())).or_default();
        match r.action {
            Action::Display => entry.0.push(i),
            Action::Click => entry.1.push(i),
        }
    }

    let mut rewarded = vec![false; records.len()];
    let mut clicks = 0;
    let mut matched = 0;
    for (mut displays, mut group_clicks) in groups.into_values() {
        clicks += group_clicks.len();
        // stable sorts keep input order among equal session hits
        displays.sort_by_key(|&i| records[i].session_hit);
        group_clicks.sort_by_key(|&i| records[i].session_hit);
        for c in group_clicks {
            let hit = records[c].session_hit;
            let eligible = displays.partition_point(|&d| records[d].session_hit <= hit);
            if let Some(&d) = displays[..eligible].iter().rev().find(|&&d| !rewarded[d]) {
                rewarded[d] = true;
                matched += 1;
            }
        }
    }

    let mut events: Vec<JoinedEvent> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.action == Action::Display)
        .map(|(i, r)| JoinedEvent {
            timestamp: r.timestamp,
            customer_id: r.customer_id.clone(),
            purchasing_power: r.purchasing_power,
            arm: r.arm,
            session_hit: r.session_hit,
            reward: rewarded[i],
        })
        .collect();
    events.sort_by_key(|e| e.timestamp);
    JoinOutcome {
        events,
        clicks,
        clicks_matched: matched,
        clicks_dropped: clicks - matched,
    }
}

/// Attaches real and normalized loads. Returns the events, the fitted
/// normalizer (absent for an empty input) and the number of imputed loads.
pub fn attach_load(
    events: &[JoinedEvent],
    source: LoadSource,
    rho: f64,
) -> Result<(Vec<LoggedEvent>, Option<LoadNormalizer>, usize)> {
    if events.is_empty() {
        return Ok((Vec::new(), None, 0));
    }
    let (loads, imputed) = match source {
        LoadSource::PurchasingPower => {
            let raw: Vec<Option<f64>> = events.iter().map(|e| e.purchasing_power).collect();
            let missing = raw.iter().filter(|l| l.is_none()).count();
            (impute_missing(&raw)?, missing)
        }
        LoadSource::Traffic { interval_seconds } => {
            let ts: Vec<i64> = events.iter().map(|e| e.timestamp.timestamp()).collect();
            (traffic_loads(&ts, interval_seconds)?, 0)
        }
    };
    let loads: Vec<f64> = loads.into_iter().map(round_sig).collect();
    let normalizer = LoadNormalizer::fit(&loads, rho)?;
    let out = events
        .iter()
        .zip(loads)
        .map(|(e, load)| LoggedEvent {
            timestamp: e.timestamp.timestamp(),
            customer_id: Some(e.customer_id.clone()),
            load,
            normalized_load: round_sig(normalizer.normalize(load)),
            arm: e.arm,
            reward: e.reward,
        })
        .collect();
    Ok((out, Some(normalizer), imputed))
}

/// Re-fits thresholds on the logged loads and recomputes normalized loads.
pub fn renormalize(events: &[LoggedEvent], rho: f64) -> Result<Vec<LoggedEvent>> {
    if events.is_empty() {
        return Ok(Vec::new());
    }
    let loads: Vec<f64> = events.iter().map(|e| e.load).collect();
    let normalizer = LoadNormalizer::fit(&loads, rho)?;
    Ok(events
        .iter()
        .map(|e| LoggedEvent {
            normalized_load: round_sig(normalizer.normalize(e.load)),
            ..e.clone()
        })
        .collect())
}

/// Full pipeline over already parsed records.
pub fn process(records: Vec<RawRecord>, opts: &IngestOptions) -> Result<(Vec<LoggedEvent>, IngestStats)> {
    let (records, duplicates_removed) = dedupe(records);
    let joined = join_clicks(&records);
    let (events, _, loads_imputed) = attach_load(&joined.events, opts.load, opts.rho)?;
    Ok((
        events,
        IngestStats {
            duplicates_removed,
            displays: joined.events.len(),
            clicks: joined.clicks,
            clicks_matched: joined.clicks_matched,
            clicks_dropped: joined.clicks_dropped,
            loads_imputed,
            ..IngestStats::default()
        },
    ))
}

/// Reads and processes one or more raw files as a single log.
pub fn ingest_files(paths: &[&Path], opts: &IngestOptions) -> Result<(Vec<LoggedEvent>, IngestStats)> {
    let mut records = Vec::new();
    let mut read_stats = IngestStats::default();
    for &path in paths {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let (mut r, s) = read_raw(std::io::BufReader::new(file), opts.delimiter).map_err(|e| with_path(path, e))?;
        records.append(&mut r);
        read_stats.absorb(s);
    }
    let (events, mut stats) = process(records, opts)?;
    stats.absorb(read_stats);
    Ok((events, stats))
}
