//! Wall-clock parsing and formatting in the plant's local time zone.

use chrono::{DateTime, LocalResult, NaiveDateTime, TimeZone, Utc};
use chrono_tz::Tz;

use crate::types::Timestamp;

/// Time zone for naive timestamps and the shutdown schedule.
pub const DEFAULT_TZ: Tz = chrono_tz::America::New_York;

const NAIVE_FORMATS: [&str; 9] = [
    "%Y-%m-%dT%H:%M:%S%.f",
    "%Y-%m-%d %H:%M:%S%.f",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M",
    "%m/%d/%Y %H:%M:%S",
    "%m/%d/%Y %H:%M",
    "%m/%d/%Y %I:%M:%S %p",
    "%m/%d/%Y %I:%M %p",
    "%m/%d/%y %H:%M",
];

/// Parses RFC 3339 (explicit offset) or a naive local time in one of the
/// accepted layouts, e.g. `2021-07-27 00:05:00` or `7/27/2021 0:05`.
pub fn parse_timestamp(text: &str, tz: Tz) -> Option<Timestamp> {
    let text = text.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(text) {
        return Some(from_datetime(dt.with_timezone(&Utc)));
    }
    let naive = NAIVE_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(text, f).ok())?;
    localize(naive, tz).map(from_datetime)
}

/// Resolves a local wall-clock time. Ambiguous fall-back times take the
/// earlier instant; times inside a spring-forward gap move one hour later.
pub fn localize(naive: NaiveDateTime, tz: Tz) -> Option<DateTime<Utc>> {
    match tz.from_local_datetime(&naive) {
        LocalResult::Single(dt) => Some(dt.with_timezone(&Utc)),
        LocalResult::Ambiguous(early, _) => Some(early.with_timezone(&Utc)),
        LocalResult::None => {
            let shifted = naive + chrono::Duration::hours(1);
            tz.from_local_datetime(&shifted)
                .earliest()
                .map(|dt| dt.with_timezone(&Utc))
        }
    }
}

fn from_datetime(dt: DateTime<Utc>) -> Timestamp {
    Timestamp(dt.timestamp() as f64 + dt.timestamp_subsec_nanos() as f64 / 1e9)
}

pub fn to_utc(ts: Timestamp) -> Option<DateTime<Utc>> {
    let secs = ts.0.floor();
    let mut nanos = ((ts.0 - secs) * 1e9).round() as i64;
    let mut secs = secs as i64;
    if nanos >= 1_000_000_000 {
        secs += 1;
        nanos -= 1_000_000_000;
    }
    Utc.timestamp_opt(secs, nanos as u32).single()
}

pub fn to_local(ts: Timestamp, tz: Tz) -> Option<DateTime<Tz>> {
    to_utc(ts).map(|dt| dt.with_timezone(&tz))
}

/// RFC 3339 rendering in `tz`, with fractional seconds only when present.
pub fn format_timestamp(ts: Timestamp, tz: Tz) -> String {
    match to_local(ts, tz) {
        Some(dt) => dt.to_rfc3339_opts(chrono::SecondsFormat::AutoSi, false),
        None => format!("{}", ts.0),
    }
}
