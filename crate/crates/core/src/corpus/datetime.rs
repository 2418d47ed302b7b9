//! User-local civil date-times and the session-timing buckets derived from them.
//!
//! Times are taken as already local to the user; no timezone arithmetic is
//! performed anywhere.

use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::CorpusError;

/// A calendar date and wall-clock time without offset.
///
/// Field order makes the derived `Ord` chronological.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CivilDateTime {
    pub year: i32,
    pub month: u8,
    pub day: u8,
    pub hour: u8,
    pub minute: u8,
    pub second: u8,
    pub millis: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Weekday {
    Monday,
    Tuesday,
    Wednesday,
    Thursday,
    Friday,
    Saturday,
    Sunday,
}

impl Weekday {
    pub fn is_weekend(self) -> bool {
        matches!(self, Weekday::Saturday | Weekday::Sunday)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TimeOfDay {
    /// 06:00 to 12:00
    Morning,
    /// 12:00 to 18:00
    Afternoon,
    /// 18:00 to 24:00
    Night,
    /// 00:00 to 06:00
    LateNight,
}

impl TimeOfDay {
    pub fn from_hour(hour: u8) -> Self {
        match hour {
            0..=5 => TimeOfDay::LateNight,
            6..=11 => TimeOfDay::Morning,
            12..=17 => TimeOfDay::Afternoon,
            _ => TimeOfDay::Night,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TimeOfDay::Morning => "morning",
            TimeOfDay::Afternoon => "afternoon",
            TimeOfDay::Night => "night",
            TimeOfDay::LateNight => "late_night",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DayClass {
    Weekday,
    Weekend,
}

impl DayClass {
    pub fn as_str(self) -> &'static str {
        match self {
            DayClass::Weekday => "weekday",
            DayClass::Weekend => "weekend",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Season {
    /// June, July or August.
    Summer,
    RestOfYear,
}

impl Season {
    pub fn from_month(month: u8) -> Self {
        if (6..=8).contains(&month) {
            Season::Summer
        } else {
            Season::RestOfYear
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Season::Summer => "summer",
            Season::RestOfYear => "rest_of_year",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeBuckets {
    pub time_of_day: TimeOfDay,
    pub day_of_week: DayClass,
    pub season: Season,
}

/// Maps a recording time onto the time-of-day, weekday/weekend and season buckets.
pub fn derive_time_buckets(at: &CivilDateTime) -> TimeBuckets {
    TimeBuckets {
        time_of_day: TimeOfDay::from_hour(at.hour),
        day_of_week: if at.weekday().is_weekend() {
            DayClass::Weekend
        } else {
            DayClass::Weekday
        },
        season: Season::from_month(at.month),
    }
}

pub fn is_leap_year(year: i32) -> bool {
    (year % 4 == 0 && year % 100 != 0) || year % 400 == 0
}

pub fn days_in_month(year: i32, month: u8) -> u8 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if is_leap_year(year) => 29,
        2 => 28,
        _ => 0,
    }
}

impl CivilDateTime {
    pub fn new(
        year: i32,
        month: u8,
        day: u8,
        hour: u8,
        minute: u8,
        second: u8,
    ) -> Result<Self, CorpusError> {
        let dt = CivilDateTime {
            year,
            month,
            day,
            hour,
            minute,
            second,
            millis: 0,
        };
        dt.validate()?;
        Ok(dt)
    }

    fn validate(&self) -> Result<(), CorpusError> {
        let ok = (1..=12).contains(&self.month)
            && self.day >= 1
            && self.day <= days_in_month(self.year, self.month)
            && self.hour < 24
            && self.minute < 60
            && self.second < 60
            && self.millis < 1000;
        if ok {
            Ok(())
        } else {
            Err(CorpusError::InvalidDateTime(alloc::format!("{self}")))
        }
    }

    /// Day of the week (Sakamoto's method, proleptic Gregorian calendar).
    pub fn weekday(&self) -> Weekday {
        const OFFSETS: [i32; 12] = [0, 3, 2, 5, 0, 3, 5, 1, 4, 6, 2, 4];
        let m = self.month as usize;
        let y = if m < 3 { self.year - 1 } else { self.year };
        let idx = (y + y.div_euclid(4) - y.div_euclid(100) + y.div_euclid(400)
            + OFFSETS[m - 1]
            + self.day as i32)
            .rem_euclid(7);
        // idx 0 is Sunday
        match idx {
            0 => Weekday::Sunday,
            1 => Weekday::Monday,
            2 => Weekday::Tuesday,
            3 => Weekday::Wednesday,
            4 => Weekday::Thursday,
            5 => Weekday::Friday,
            _ => Weekday::Saturday,
        }
    }

    /// Date `day_index` days after January 1st of `year` (0-based), at the given time.
    pub fn from_day_of_year(
        year: i32,
        day_index: u32,
        hour: u8,
        minute: u8,
        second: u8,
    ) -> Result<Self, CorpusError> {
        let mut remaining = day_index;
        for month in 1..=12u8 {
            let len = days_in_month(year, month) as u32;
            if remaining < len {
                return CivilDateTime::new(year, month, remaining as u8 + 1, hour, minute, second);
            }
            remaining -= len;
        }
        Err(CorpusError::InvalidDateTime(alloc::format!(
            "day {day_index} of {year}"
        )))
    }
}

impl fmt::Display for CivilDateTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:04}-{:02}-{:02}T{:02}:{:02}:{:02}",
            self.year, self.month, self.day, self.hour, self.minute, self.second
        )?;
        if self.millis != 0 {
            write!(f, ".{:03}", self.millis)?;
        }
        Ok(())
    }
}

fn parse_fixed(s: &str, what: &str, full: &str) -> Result<u32, CorpusError> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(CorpusError::InvalidDateTime(alloc::format!(
            "{full}: bad {what}"
        )));
    }
    s.parse()
        .map_err(|_| CorpusError::InvalidDateTime(alloc::format!("{full}: bad {what}")))
}

impl FromStr for CivilDateTime {
    type Err = CorpusError;

    /// Accepts `YYYY-MM-DDTHH:MM[:SS[.fff]]`; a space may replace the `T`.
    /// Offsets (`Z`, `+hh:mm`) are rejected because times are user-local.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CorpusError::InvalidDateTime(String::from(s));
        let (date, time) = s
            .split_once('T')
            .or_else(|| s.split_once(' '))
            .ok_or_else(bad)?;
        let mut dparts = date.split('-');
        let (y, m, d) = match (dparts.next(), dparts.next(), dparts.next(), dparts.next()) {
            (Some(y), Some(m), Some(d), None) if y.len() == 4 && m.len() == 2 && d.len() == 2 => {
                (y, m, d)
            }
            _ => return Err(bad()),
        };
        if time.contains(['Z', 'z', '+']) || time.matches('-').count() > 0 {
            return Err(bad());
        }
        let (hms, frac) = match time.split_once('.') {
            Some((hms, frac)) => (hms, Some(frac)),
            None => (time, None),
        };
        let mut tparts = hms.split(':');
        let (hh, mm, ss) = match (tparts.next(), tparts.next(), tparts.next(), tparts.next()) {
            (Some(h), Some(m), sec, None) if h.len() == 2 && m.len() == 2 => (h, m, sec),
            _ => return Err(bad()),
        };
        let second = match ss {
            Some(sec) if sec.len() == 2 => parse_fixed(sec, "second", s)? as u8,
            Some(_) => return Err(bad()),
            None => 0,
        };
        let millis = match frac {
            None => 0,
            Some(f) if ss.is_some() && !f.is_empty() && f.len() <= 9 => {
                let digits = parse_fixed(f, "fraction", s)?;
                let scale = 10u32.pow(f.len() as u32);
                (digits as u64 * 1000 / scale as u64) as u16
            }
            Some(_) => return Err(bad()),
        };
        let dt = CivilDateTime {
            year: parse_fixed(y, "year", s)? as i32,
            month: parse_fixed(m, "month", s)? as u8,
            day: parse_fixed(d, "day", s)? as u8,
            hour: parse_fixed(hh, "hour", s)? as u8,
            minute: parse_fixed(mm, "minute", s)? as u8,
            second,
            millis,
        };
        dt.validate()?;
        Ok(dt)
    }
}

impl Serialize for CivilDateTime {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CivilDateTime {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = <alloc::borrow::Cow<'de, str>>::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn at(s: &str) -> CivilDateTime {
        s.parse().unwrap()
    }

    #[test]
    fn time_of_day_boundaries() {
        assert_eq!(derive_time_buckets(&at("2020-03-02T06:00:00")).time_of_day, TimeOfDay::Morning);
        assert_eq!(derive_time_buckets(&at("2020-03-02T05:59:59")).time_of_day, TimeOfDay::LateNight);
        assert_eq!(derive_time_buckets(&at("2020-03-02T13:30:00")).time_of_day, TimeOfDay::Afternoon);
        assert_eq!(derive_time_buckets(&at("2020-03-02T12:00:00")).time_of_day, TimeOfDay::Afternoon);
        assert_eq!(derive_time_buckets(&at("2020-03-02T18:00:00")).time_of_day, TimeOfDay::Night);
        assert_eq!(derive_time_buckets(&at("2020-03-02T23:59:00")).time_of_day, TimeOfDay::Night);
        assert_eq!(derive_time_buckets(&at("2020-03-02T02:00:00")).time_of_day, TimeOfDay::LateNight);
        assert_eq!(derive_time_buckets(&at("2020-03-02T00:00:00")).time_of_day, TimeOfDay::LateNight);
    }

    #[test]
    fn seasons() {
        assert_eq!(derive_time_buckets(&at("2019-07-04T10:00:00")).season, Season::Summer);
        assert_eq!(derive_time_buckets(&at("2019-06-01T10:00:00")).season, Season::Summer);
        assert_eq!(derive_time_buckets(&at("2019-08-31T10:00:00")).season, Season::Summer);
        assert_eq!(derive_time_buckets(&at("2019-09-01T10:00:00")).season, Season::RestOfYear);
        assert_eq!(derive_time_buckets(&at("2019-05-31T10:00:00")).season, Season::RestOfYear);
    }

    #[test]
    fn weekdays() {
        // 2020-02-29 was a Saturday, 2000-01-01 a Saturday, 2024-01-01 a Monday.
        assert_eq!(at("2020-02-29T09:00:00").weekday(), Weekday::Saturday);
        assert_eq!(at("2000-01-01T09:00:00").weekday(), Weekday::Saturday);
        assert_eq!(at("2024-01-01T09:00:00").weekday(), Weekday::Monday);
        assert_eq!(at("2024-01-07T09:00:00").weekday(), Weekday::Sunday);
        assert_eq!(derive_time_buckets(&at("2020-02-29T09:00:00")).day_of_week, DayClass::Weekend);
        assert_eq!(derive_time_buckets(&at("2020-03-02T09:00:00")).day_of_week, DayClass::Weekday);
    }

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["2019-07-04T10:05:09", "2019-07-04T10:05:09.250"] {
            assert_eq!(at(s).to_string(), s);
        }
        assert_eq!(at("2019-07-04 10:05").to_string(), "2019-07-04T10:05:00");
    }

    #[test]
    fn rejects_offsets_and_garbage() {
        for s in [
            "2019-07-04T10:05:09Z",
            "2019-07-04T10:05:09+02:00",
            "2019-07-04T10:05:09-05:00",
            "2019-02-29T10:00:00",
            "2019-13-01T10:00:00",
            "2019-07-04T24:00:00",
            "2019-7-4T10:00:00",
            "yesterday",
        ] {
            assert!(s.parse::<CivilDateTime>().is_err(), "{s}");
        }
    }

    #[test]
    fn day_of_year_walks_months() {
        assert_eq!(
            CivilDateTime::from_day_of_year(2019, 0, 1, 2, 3).unwrap().to_string(),
            "2019-01-01T01:02:03"
        );
        assert_eq!(
            CivilDateTime::from_day_of_year(2019, 364, 0, 0, 0).unwrap().to_string(),
            "2019-12-31T00:00:00"
        );
        assert_eq!(
            CivilDateTime::from_day_of_year(2020, 59, 0, 0, 0).unwrap().to_string(),
            "2020-02-29T00:00:00"
        );
        assert!(CivilDateTime::from_day_of_year(2019, 365, 0, 0, 0).is_err());
    }
}
