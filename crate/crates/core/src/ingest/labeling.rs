//! Machine-state labels for process rows: weekly shutdown plus abnormal days.

use std::collections::BTreeSet;

use chrono::{Datelike, NaiveDate, Timelike, Weekday};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use super::process::ProcessRow;
use super::time::{to_local, DEFAULT_TZ};
use crate::error::{Error, Result};
use crate::types::{MachineState, Timestamp};

const MINUTES_PER_WEEK: u32 = 7 * 24 * 60;

/// A point in the week, as minutes since Monday 00:00.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WeekTime(u32);

impl WeekTime {
    pub fn new(day: Weekday, hour: u32, minute: u32) -> Result<Self> {
        if hour >= 24 || minute >= 60 {
            return Err(Error::Config(format!("invalid time of day {hour:02}:{minute:02}")));
        }
        Ok(WeekTime(day.num_days_from_monday() * 1440 + hour * 60 + minute))
    }

    pub fn minutes(self) -> u32 {
        self.0
    }
}

/// Half-open weekly interval `[from, to)`; may wrap past Sunday midnight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeeklyInterval {
    pub from: WeekTime,
    pub to: WeekTime,
}

impl WeeklyInterval {
    fn contains(&self, t: u32) -> bool {
        let (a, b) = (self.from.0, self.to.0);
        if a <= b {
            a <= t && t < b
        } else {
            t >= a || t < b
        }
    }
}

/// Weekly periods during which the plant is shut down.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeeklySchedule {
    pub off: Vec<WeeklyInterval>,
}

impl Default for WeeklySchedule {
    /// Off from Friday 19:00 to Sunday 23:00.
    fn default() -> Self {
        WeeklySchedule {
            off: vec![WeeklyInterval {
                from: WeekTime(4 * 1440 + 19 * 60),
                to: WeekTime(6 * 1440 + 23 * 60),
            }],
        }
    }
}

impl WeeklySchedule {
    pub fn always_on() -> Self {
        WeeklySchedule { off: Vec::new() }
    }

    pub fn is_off(&self, week_minute: u32) -> bool {
        self.off.iter().any(|iv| iv.contains(week_minute % MINUTES_PER_WEEK))
    }
}

/// Dates on which the plant ran abnormally. Each is labeled for its whole calendar day.
pub fn default_abnormal_dates() -> BTreeSet<NaiveDate> {
    [(2022, 2, 1), (2022, 3, 8)]
        .into_iter()
        .filter_map(|(y, m, d)| NaiveDate::from_ymd_opt(y, m, d))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelingConfig {
    pub schedule: WeeklySchedule,
    pub abnormal_dates: BTreeSet<NaiveDate>,
    #[serde(with = "tz_name")]
    pub tz: Tz,
}

impl Default for LabelingConfig {
    fn default() -> Self {
        LabelingConfig {
            schedule: WeeklySchedule::default(),
            abnormal_dates: default_abnormal_dates(),
            tz: DEFAULT_TZ,
        }
    }
}

mod tz_name {
    use chrono_tz::Tz;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(tz: &Tz, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(tz.name())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Tz, D::Error> {
        let name = String::deserialize(d)?;
        name.parse().map_err(serde::de::Error::custom)
    }
}

/// State of the machine at `ts`. Abnormal days win over the shutdown schedule.
pub fn machine_state(ts: Timestamp, cfg: &LabelingConfig) -> MachineState {
    let Some(local) = to_local(ts, cfg.tz) else {
        return MachineState::On;
    };
    if cfg.abnormal_dates.contains(&local.date_naive()) {
        return MachineState::Abnormal;
    }
    let minute = local.weekday().num_days_from_monday() * 1440 + local.hour() * 60 + local.minute();
    if cfg.schedule.is_off(minute) {
        MachineState::Off
    } else {
        MachineState::On
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledProcessRow {
    pub row: ProcessRow,
    pub state: MachineState,
}

pub fn label_process_rows(rows: &[ProcessRow], cfg: &LabelingConfig) -> Vec<LabeledProcessRow> {
    rows.iter()
        .map(|r| LabeledProcessRow {
            row: r.clone(),
            state: machine_state(r.timestamp, cfg),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::time::parse_timestamp;

    fn state_at(text: &str) -> MachineState {
        machine_state(parse_timestamp(text, DEFAULT_TZ).unwrap(), &LabelingConfig::default())
    }

    #[test]
    fn weekend_shutdown() {
        // 2021-07-31 is a Saturday.
        assert_eq!(state_at("2021-07-31 12:00"), MachineState::Off);
        assert_eq!(state_at("2021-07-30 18:55"), MachineState::On);
        assert_eq!(state_at("2021-07-30 19:00"), MachineState::Off);
        assert_eq!(state_at("2021-08-01 22:55"), MachineState::Off);
        assert_eq!(state_at("2021-08-01 23:00"), MachineState::On);
        assert_eq!(state_at("2021-07-27 10:00"), MachineState::On);
    }

    #[test]
    fn abnormal_days_cover_whole_date() {
        assert_eq!(state_at("2022-02-01 00:00"), MachineState::Abnormal);
        assert_eq!(state_at("2022-02-01 23:55"), MachineState::Abnormal);
        assert_eq!(state_at("2022-03-08 12:00"), MachineState::Abnormal);
        assert_eq!(state_at("2022-02-02 00:00"), MachineState::On);
    }

    #[test]
    fn wrapping_interval() {
        let iv = WeeklyInterval {
            from: WeekTime::new(Weekday::Sun, 22, 0).unwrap(),
            to: WeekTime::new(Weekday::Mon, 2, 0).unwrap(),
        };
        assert!(iv.contains(WeekTime::new(Weekday::Sun, 23, 0).unwrap().minutes()));
        assert!(iv.contains(WeekTime::new(Weekday::Mon, 1, 0).unwrap().minutes()));
        assert!(!iv.contains(WeekTime::new(Weekday::Mon, 3, 0).unwrap().minutes()));
        assert!(WeekTime::new(Weekday::Mon, 24, 0).is_err());
    }

    #[test]
    fn config_serde_round_trip() {
        let cfg = LabelingConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("America/New_York"));
        let back: LabelingConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }
}
