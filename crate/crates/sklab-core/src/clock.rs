//! Simulated study clock.
//!
//! Time is measured in whole minutes since study start; the study always
//! starts on a Monday at 00:00. All protocol machinery advances on the
//! 30-minute slot grid.

use serde::{Deserialize, Serialize};

/// Minutes per slot of the diary grid.
pub const SLOT_MINUTES: u64 = 30;
/// Slots per day with the default 30-minute period.
pub const SLOTS_PER_DAY: u64 = 24 * 60 / SLOT_MINUTES;

/// An instant on the simulated clock, in minutes since study start.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct SimTime(pub u64);

impl SimTime {
    pub fn from_minutes(m: u64) -> Self {
        SimTime(m)
    }

    pub fn from_slot(slot: u64) -> Self {
        SimTime(slot * SLOT_MINUTES)
    }

    pub fn minutes(self) -> u64 {
        self.0
    }

    /// Index of the 30-minute slot containing this instant.
    pub fn slot(self) -> u64 {
        self.0 / SLOT_MINUTES
    }

    /// Day number since study start (day 0 is the first Monday).
    pub fn day(self) -> u64 {
        self.0 / (24 * 60)
    }

    /// Day of week, 0 = Monday .. 6 = Sunday.
    pub fn day_of_week(self) -> u64 {
        self.day() % 7
    }

    /// Monday..Friday.
    pub fn is_workday(self) -> bool {
        self.day_of_week() < 5
    }

    pub fn minute_of_day(self) -> u64 {
        self.0 % (24 * 60)
    }

    pub fn hour_of_day(self) -> u64 {
        self.minute_of_day() / 60
    }

    /// Fractional hour of day, e.g. 14.5 for 14:30.
    pub fn hour_fraction(self) -> f64 {
        self.minute_of_day() as f64 / 60.0
    }

    pub fn slot_in_day(self) -> u64 {
        self.minute_of_day() / SLOT_MINUTES
    }

    /// True exactly on the slot grid.
    pub fn is_slot_boundary(self) -> bool {
        self.0 % SLOT_MINUTES == 0
    }

    pub fn plus_minutes(self, m: u64) -> SimTime {
        SimTime(self.0 + m)
    }

    pub fn plus_hours(self, h: f64) -> SimTime {
        SimTime(self.0 + (h * 60.0).round() as u64)
    }

    /// Render as `dayNN HH:MM` for logs.
    pub fn label(self) -> String {
        format!(
            "day{:02} {:02}:{:02}",
            self.day(),
            self.hour_of_day(),
            self.minute_of_day() % 60
        )
    }
}

/// Calendar epoch used when converting the simulated clock to ISO-8601
/// timestamps in logs; a Monday, so day-of-week arithmetic lines up.
pub const EPOCH_ISO: &str = "2026-01-05T00:00:00Z";

/// Convert a simulated instant to an ISO-8601 UTC timestamp.
pub fn to_iso(t: SimTime) -> String {
    use chrono::{Duration, NaiveDate};
    let epoch = NaiveDate::from_ymd_opt(2026, 1, 5)
        .unwrap()
        .and_hms_opt(0, 0, 0)
        .unwrap();
    let ts = epoch + Duration::minutes(t.0 as i64);
    format!("{}Z", ts.format("%Y-%m-%dT%H:%M:%S"))
}

/// Parse an ISO-8601 UTC timestamp back to the simulated clock.
pub fn from_iso(s: &str) -> Option<SimTime> {
    use chrono::NaiveDateTime;
    let s = s.strip_suffix('Z').unwrap_or(s);
    let ts = NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S").ok()?;
    let epoch = chrono::NaiveDate::from_ymd_opt(2026, 1, 5)?.and_hms_opt(0, 0, 0)?;
    let delta = ts.signed_duration_since(epoch).num_minutes();
    if delta < 0 {
        return None;
    }
    Some(SimTime(delta as u64))
}
