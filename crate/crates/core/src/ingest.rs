//! Event-file ingestion: schema parsing, precision/source filters, and
//! per-user per-day track grouping.
//!
//! Input is line-delimited UTF-8 with one JSON object per line:
//!
//! ```text
//! {"user_id":"u1","ts":"2020-03-11T14:03:00Z","lat":40.7,"lon":-74.0,
//!  "country":"US","admin1":"NY","source":"some app","precision":"gps"}
//! ```
//!
//! `admin1` may be `null`. Blank lines and lines starting with `#` are
//! comments and are skipped without counting as malformed. Malformed lines
//! never abort a run; they are tallied in [`ParseStats`].

use std::collections::HashMap;
use std::io::BufRead;
use std::str::FromStr;

use chrono::{DateTime, Duration, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::error::InputError;
use crate::geodesy::GeoPoint;

/// Geotag precision, ordered coarse to fine so `Ord` matches fineness:
/// `Country < Admin < City < Gps`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Country,
    Admin,
    City,
    Gps,
}

impl Precision {
    pub fn label(&self) -> &'static str {
        match self {
            Precision::Country => "country",
            Precision::Admin => "admin",
            Precision::City => "city",
            Precision::Gps => "gps",
        }
    }
}

impl FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gps" => Ok(Precision::Gps),
            "city" => Ok(Precision::City),
            "admin" => Ok(Precision::Admin),
            "country" => Ok(Precision::Country),
            other => Err(format!("unknown precision `{other}`")),
        }
    }
}

/// One validated geotagged post.
#[derive(Debug, Clone, PartialEq)]
pub struct LocatedEvent {
    pub user_id: String,
    pub timestamp: DateTime<Utc>,
    pub point: GeoPoint,
    pub country: String,
    pub admin1: Option<String>,
    pub source: String,
    pub precision: Precision,
}

/// Per-line ingestion tallies. `malformed` is the sum of the reason
/// buckets below it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseStats {
    pub lines: u64,
    pub comments: u64,
    pub parsed: u64,
    pub malformed: u64,
    pub bad_json: u64,
    pub bad_timestamp: u64,
    pub bad_coordinates: u64,
    pub bad_precision: u64,
}

#[derive(Deserialize)]
struct RawEvent {
    user_id: String,
    ts: String,
    lat: f64,
    lon: f64,
    country: String,
    admin1: Option<String>,
    source: String,
    precision: String,
}

/// Streaming line parser. Call [`EventParser::next_event`] until it
/// returns `Ok(None)`, then read the tallies from [`EventParser::stats`].
pub struct EventParser<R> {
    reader: R,
    line: String,
    stats: ParseStats,
}

impl<R: BufRead> EventParser<R> {
    pub fn new(reader: R) -> Self {
        EventParser {
            reader,
            line: String::new(),
            stats: ParseStats::default(),
        }
    }

    pub fn stats(&self) -> ParseStats {
        self.stats
    }

    /// Next well-formed event, skipping comments and tallying malformed
    /// lines. `Ok(None)` at end of stream; `Err` only on unreadable input.
    pub fn next_event(&mut self) -> Result<Option<LocatedEvent>, InputError> {
        loop {
            self.line.clear();
            if self.reader.read_line(&mut self.line)? == 0 {
                return Ok(None);
            }
            let trimmed = self.line.trim();
            if trimmed.is_empty() {
                continue;
            }
            self.stats.lines += 1;
            if trimmed.starts_with('#') {
                self.stats.comments += 1;
                self.stats.lines -= 1;
                continue;
            }
            match parse_line(trimmed) {
                Ok(event) => {
                    self.stats.parsed += 1;
                    return Ok(Some(event));
                }
                Err(reason) => {
                    self.stats.malformed += 1;
                    match reason {
                        LineError::Json => self.stats.bad_json += 1,
                        LineError::Timestamp => self.stats.bad_timestamp += 1,
                        LineError::Coordinates => self.stats.bad_coordinates += 1,
                        LineError::Precision => self.stats.bad_precision += 1,
                    }
                }
            }
        }
    }
}

enum LineError {
    Json,
    Timestamp,
    Coordinates,
    Precision,
}

fn parse_line(line: &str) -> Result<LocatedEvent, LineError> {
    let raw: RawEvent = serde_json::from_str(line).map_err(|_| LineError::Json)?;
    let timestamp = DateTime::parse_from_rfc3339(&raw.ts)
        .map_err(|_| LineError::Timestamp)?
        .with_timezone(&Utc);
    let point = GeoPoint::new(raw.lat, raw.lon).map_err(|_| LineError::Coordinates)?;
    let precision = raw.precision.parse().map_err(|_| LineError::Precision)?;
    Ok(LocatedEvent {
        user_id: raw.user_id,
        timestamp,
        point,
        country: raw.country,
        admin1: raw.admin1,
        source: raw.source,
        precision,
    })
}

/// Parses a whole stream into memory. The pipeline itself streams through
/// [`EventParser`]; this is the convenience form for tests and small files.
pub fn parse_events<R: BufRead>(reader: R) -> Result<(Vec<LocatedEvent>, ParseStats), InputError> {
    let mut parser = EventParser::new(reader);
    let mut events = Vec::new();
    while let Some(event) = parser.next_event()? {
        events.push(event);
    }
    Ok((events, parser.stats()))
}

/// Why an event was dropped by [`EventFilter`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    Precision,
    Source,
}

/// Per-reason filter tallies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FilterTally {
    pub kept: u64,
    pub dropped_precision: u64,
    pub dropped_source: u64,
}

impl FilterTally {
    pub fn record(&mut self, decision: Option<DropReason>) {
        match decision {
            None => self.kept += 1,
            Some(DropReason::Precision) => self.dropped_precision += 1,
            Some(DropReason::Source) => self.dropped_source += 1,
        }
    }
}

/// Drops events coarser than `min_precision` and events whose source is on
/// the denylist (exact match, case-insensitive).
#[derive(Debug, Clone)]
pub struct EventFilter {
    denylist: std::collections::HashSet<String>,
    min_precision: Precision,
}

impl EventFilter {
    pub fn new<I, S>(denylist: I, min_precision: Precision) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        EventFilter {
            denylist: denylist
                .into_iter()
                .map(|s| s.as_ref().to_lowercase())
                .collect(),
            min_precision,
        }
    }

    /// `None` means keep; precision is checked before source.
    pub fn check(&self, event: &LocatedEvent) -> Option<DropReason> {
        if event.precision < self.min_precision {
            return Some(DropReason::Precision);
        }
        if !self.denylist.is_empty() && self.denylist.contains(&event.source.to_lowercase()) {
            return Some(DropReason::Source);
        }
        None
    }
}

/// Applies a filter to a batch, returning the kept events and tallies.
pub fn filter_events(
    events: Vec<LocatedEvent>,
    filter: &EventFilter,
) -> (Vec<LocatedEvent>, FilterTally) {
    let mut tally = FilterTally::default();
    let kept = events
        .into_iter()
        .filter(|event| {
            let decision = filter.check(event);
            tally.record(decision);
            decision.is_none()
        })
        .collect();
    (kept, tally)
}

/// Interned region labels. Per-point tags compress to ids so tracks stay
/// compact at large corpus sizes.
#[derive(Debug, Default)]
pub struct RegionTable {
    labels: Vec<String>,
    index: HashMap<String, u32>,
}

impl RegionTable {
    pub fn new() -> Self {
        RegionTable::default()
    }

    pub fn intern(&mut self, label: &str) -> u32 {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = self.labels.len() as u32;
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), id);
        id
    }

    pub fn label(&self, id: u32) -> &str {
        &self.labels[id as usize]
    }
}

/// Region tags of one event, as ids into a [`RegionTable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegionRef {
    pub country: u32,
    pub admin1: Option<u32>,
}

/// One point of a user-day track, with its original region tags and the
/// input sequence number used for stable time ties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    pub timestamp: DateTime<Utc>,
    pub seq: u64,
    pub point: GeoPoint,
    pub region: RegionRef,
}

/// A user's time-ordered points within one calendar day.
#[derive(Debug, Clone, PartialEq)]
pub struct UserDayTrack {
    pub user_id: String,
    pub day: NaiveDate,
    pub points: Vec<TrackPoint>,
}

impl UserDayTrack {
    /// True when the track's longitudes span more than half the globe,
    /// i.e. the literal coordinate mean is geometrically questionable.
    pub fn straddles_antimeridian(&self) -> bool {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for p in &self.points {
            min = min.min(p.point.lon());
            max = max.max(p.point.lon());
        }
        max - min > 180.0
    }
}

/// Accumulates filtered events into per-(user, day) tracks.
///
/// The day boundary is the UTC calendar date of `timestamp +
/// day_offset_hours`, so the offset shifts the boundary globally. Events
/// may arrive in any order; `finish` sorts every track by `(timestamp,
/// seq)` (stable on input order) and the track list by `(user_id, day)`.
pub struct TrackBuilder {
    day_offset: Duration,
    groups: HashMap<(String, NaiveDate), Vec<TrackPoint>>,
    next_seq: u64,
}

impl TrackBuilder {
    pub fn new(day_offset_hours: i32) -> Self {
        TrackBuilder {
            day_offset: Duration::hours(day_offset_hours as i64),
            groups: HashMap::new(),
            next_seq: 0,
        }
    }

    pub fn push(&mut self, event: LocatedEvent, regions: &mut RegionTable) {
        let seq = self.next_seq;
        self.next_seq += 1;
        let day = (event.timestamp + self.day_offset).date_naive();
        let region = RegionRef {
            country: regions.intern(&event.country),
            admin1: event.admin1.as_deref().map(|a| regions.intern(a)),
        };
        self.groups
            .entry((event.user_id, day))
            .or_default()
            .push(TrackPoint {
                timestamp: event.timestamp,
                seq,
                point: event.point,
                region,
            });
    }

    pub fn finish(self) -> Vec<UserDayTrack> {
        let mut tracks: Vec<UserDayTrack> = self
            .groups
            .into_iter()
            .map(|((user_id, day), mut points)| {
                points.sort_by_key(|p| (p.timestamp, p.seq));
                UserDayTrack {
                    user_id,
                    day,
                    points,
                }
            })
            .collect();
        tracks.sort_by(|a, b| (&a.user_id, a.day).cmp(&(&b.user_id, b.day)));
        tracks
    }
}

/// Groups a batch of filtered events into sorted tracks.
pub fn group_user_days(
    events: impl IntoIterator<Item = LocatedEvent>,
    regions: &mut RegionTable,
    day_offset_hours: i32,
) -> Vec<UserDayTrack> {
    let mut builder = TrackBuilder::new(day_offset_hours);
    for event in events {
        builder.push(event, regions);
    }
    builder.finish()
}
