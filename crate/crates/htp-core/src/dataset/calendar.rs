//! Civil-calendar features for timestamps.
//!
//! Timestamps are epoch seconds interpreted in a configurable fixed UTC
//! offset (datasets carry no timezone info). Features are month-of-year,
//! ISO week-of-year and day-of-week; each table reserves one extra index as
//! the pad row so pads never alias real calendar values.

use serde::{Deserialize, Serialize};

/// Discrete calendar indices for one timestamp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeFeature {
    /// Month of year, `0..12`; 12 is the pad index.
    pub month: u8,
    /// ISO week of year minus one, `0..53`; 53 is the pad index.
    pub week: u8,
    /// Day of week with Monday = 0, `0..7`; 7 is the pad index.
    pub day: u8,
}

pub const PAD_TIME: TimeFeature = TimeFeature { month: 12, week: 53, day: 7 };

/// Embedding-table cardinalities including the pad row.
pub const MONTH_CARD: usize = 13;
pub const WEEK_CARD: usize = 54;
pub const DAY_CARD: usize = 8;

impl TimeFeature {
    pub fn is_pad(&self) -> bool {
        *self == PAD_TIME
    }
}

const SECS_PER_DAY: i64 = 86_400;

fn floor_div(a: i64, b: i64) -> i64 {
    a.div_euclid(b)
}

/// Days since 1970-01-01 to (year, month 1..12, day 1..31).
/// Howard Hinnant's civil-calendar algorithm.
fn civil_from_days(z: i64) -> (i64, u32, u32) {
    let z = z + 719_468;
    let era = floor_div(z, 146_097);
    let doe = z - era * 146_097; // [0, 146096]
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365; // [0, 399]
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100); // [0, 365]
    let mp = (5 * doy + 2) / 153; // [0, 11]
    let d = (doy - (153 * mp + 2) / 5 + 1) as u32; // [1, 31]
    let m = if mp < 10 { mp + 3 } else { mp - 9 } as u32; // [1, 12]
    (if m <= 2 { y + 1 } else { y }, m, d)
}

fn days_from_civil(y: i64, m: u32, d: u32) -> i64 {
    let y = if m <= 2 { y - 1 } else { y };
    let era = floor_div(y, 400);
    let yoe = y - era * 400;
    let mp = if m > 2 { m - 3 } else { m + 9 } as i64;
    let doy = (153 * mp + 2) / 5 + d as i64 - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

/// Weekday with Monday = 0. 1970-01-01 was a Thursday.
fn weekday_from_days(z: i64) -> u8 {
    (z + 3).rem_euclid(7) as u8
}

fn is_leap(y: i64) -> bool {
    y % 4 == 0 && (y % 100 != 0 || y % 400 == 0)
}

fn weeks_in_iso_year(y: i64) -> u32 {
    // 53-week years start on Thursday, or on Wednesday when leap.
    let jan1 = weekday_from_days(days_from_civil(y, 1, 1));
    if jan1 == 3 || (is_leap(y) && jan1 == 2) {
        53
    } else {
        52
    }
}

fn iso_week(y: i64, m: u32, d: u32) -> u32 {
    let days = days_from_civil(y, m, d);
    let doy = (days - days_from_civil(y, 1, 1) + 1) as i64; // 1-based
    let dow = weekday_from_days(days) as i64 + 1; // ISO: Monday = 1
    let w = (doy - dow + 10) / 7;
    if w < 1 {
        weeks_in_iso_year(y - 1)
    } else if w as u32 > weeks_in_iso_year(y) {
        1
    } else {
        w as u32
    }
}

/// Calendar features of an epoch-seconds timestamp under a fixed offset.
pub fn calendar_features(ts: i64, tz_offset_secs: i32) -> TimeFeature {
    let local = ts + tz_offset_secs as i64;
    let days = floor_div(local, SECS_PER_DAY);
    let (y, m, d) = civil_from_days(days);
    TimeFeature {
        month: (m - 1) as u8,
        week: (iso_week(y, m, d) - 1) as u8,
        day: weekday_from_days(days),
    }
}

/// Start-of-day timestamp (UTC seconds) of the calendar day containing `ts`
/// under the fixed offset. Used as the ATM histogram bucket key.
pub fn day_bucket(ts: i64, tz_offset_secs: i32) -> i64 {
    let local = ts + tz_offset_secs as i64;
    floor_div(local, SECS_PER_DAY) * SECS_PER_DAY - tz_offset_secs as i64
}

/// Parses `Y-m-d` or `m/d/Y` calendar dates to epoch seconds at local
/// midnight under the fixed offset.
pub fn parse_date(s: &str, tz_offset_secs: i32) -> Option<i64> {
    let (y, m, d) = if s.contains('-') {
        let mut it = s.splitn(3, '-');
        let y: i64 = it.next()?.trim().parse().ok()?;
        let m: u32 = it.next()?.trim().parse().ok()?;
        let d: u32 = it.next()?.trim().parse().ok()?;
        (y, m, d)
    } else {
        let mut it = s.splitn(3, '/');
        let m: u32 = it.next()?.trim().parse().ok()?;
        let d: u32 = it.next()?.trim().parse().ok()?;
        let y: i64 = it.next()?.trim().parse().ok()?;
        (y, m, d)
    };
    if !(1..=12).contains(&m) || !(1..=31).contains(&d) {
        return None;
    }
    Some(days_from_civil(y, m, d) * SECS_PER_DAY - tz_offset_secs as i64)
}
