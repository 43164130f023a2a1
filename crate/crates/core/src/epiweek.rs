//! MMWR epidemiological weeks and influenza seasons.
//!
//! Week arithmetic uses a precomputed calendar of weeks per year shipped in
//! `data/epiweek_calendar.csv`.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

const CALENDAR: &str = include_str!("../data/epiweek_calendar.csv");

/// First week of a season.
pub const SEASON_START_WEEK: u8 = 40;
/// Last week of a season (in the following calendar year).
pub const SEASON_END_WEEK: u8 = 20;

struct Calendar {
    first_year: i32,
    weeks: Vec<u8>,
}

fn calendar() -> &'static Calendar {
    static CAL: OnceLock<Calendar> = OnceLock::new();
    CAL.get_or_init(|| {
        let mut first_year = None;
        let mut weeks = Vec::new();
        for line in CALENDAR.lines().filter(|l| !l.starts_with('#')).skip(1) {
            let (y, w) = line.split_once(',').expect("calendar row");
            let y: i32 = y.trim().parse().expect("calendar year");
            first_year.get_or_insert(y);
            weeks.push(w.trim().parse().expect("calendar weeks"));
        }
        Calendar {
            first_year: first_year.expect("non-empty calendar"),
            weeks,
        }
    })
}

/// Number of MMWR weeks (52 or 53) in `year`.
pub fn weeks_in_year(year: i32) -> Result<u8> {
    let cal = calendar();
    usize::try_from(year - cal.first_year)
        .ok()
        .and_then(|i| cal.weeks.get(i).copied())
        .ok_or(Error::Domain {
            value: year as f64,
            domain: "years covered by the epiweek calendar",
        })
}

/// Calendar years covered by the shipped table.
pub fn calendar_years() -> std::ops::RangeInclusive<i32> {
    let cal = calendar();
    cal.first_year..=cal.first_year + cal.weeks.len() as i32 - 1
}

/// An epidemiological week, ordered by `(year, week)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Epiweek {
    year: i32,
    week: u8,
}

impl Epiweek {
    pub fn new(year: i32, week: u8) -> Result<Self> {
        let max = weeks_in_year(year)?;
        if week == 0 || week > max {
            return Err(Error::Domain {
                value: week as f64,
                domain: "epiweek number within the year's calendar",
            });
        }
        Ok(Self { year, week })
    }

    /// Parses the `YYYYWW` integer form.
    pub fn from_yyyyww(code: u32) -> Result<Self> {
        Self::new((code / 100) as i32, (code % 100) as u8)
    }

    pub fn yyyyww(self) -> u32 {
        self.year as u32 * 100 + self.week as u32
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn week(self) -> u8 {
        self.week
    }

    /// Shifts by a signed number of weeks across year boundaries.
    pub fn add_weeks(self, delta: i64) -> Result<Self> {
        let mut year = self.year;
        let mut week = self.week as i64 + delta;
        while week > weeks_in_year(year)? as i64 {
            week -= weeks_in_year(year)? as i64;
            year += 1;
        }
        while week < 1 {
            year -= 1;
            week += weeks_in_year(year)? as i64;
        }
        Self::new(year, week as u8)
    }

    /// Signed number of weeks from `self` to `other`.
    pub fn weeks_until(self, other: Epiweek) -> Result<i64> {
        let (lo, hi, sign) = if self <= other { (self, other, 1) } else { (other, self, -1) };
        let mut n = hi.week as i64 - lo.week as i64;
        for y in lo.year..hi.year {
            n += weeks_in_year(y)? as i64;
        }
        Ok(sign * n)
    }

    /// Season containing this week, if it lies in weeks 40..=53 or 1..=20.
    pub fn season(self) -> Option<Season> {
        if self.week >= SEASON_START_WEEK {
            Some(Season(self.year))
        } else if self.week <= SEASON_END_WEEK {
            Some(Season(self.year - 1))
        } else {
            None
        }
    }
}

impl fmt::Display for Epiweek {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:02}", self.year, self.week)
    }
}

impl FromStr for Epiweek {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.len() != 6 || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::Domain {
                value: f64::NAN,
                domain: "epiweek in YYYYWW form",
            });
        }
        Self::from_yyyyww(s.parse().expect("digits"))
    }
}

impl Serialize for Epiweek {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u32(self.yyyyww())
    }
}

impl<'de> Deserialize<'de> for Epiweek {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let code = u32::deserialize(d)?;
        Epiweek::from_yyyyww(code).map_err(serde::de::Error::custom)
    }
}

/// Influenza season identified by the calendar year of its week 40.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Season(pub i32);

impl Season {
    pub fn first_week(self) -> Epiweek {
        Epiweek::new(self.0, SEASON_START_WEEK).expect("week 40 exists")
    }

    pub fn last_week(self) -> Epiweek {
        Epiweek::new(self.0 + 1, SEASON_END_WEEK).expect("week 20 exists")
    }

    /// Every week of the season in order.
    pub fn weeks(self) -> Vec<Epiweek> {
        let mut out = Vec::new();
        let mut w = self.first_week();
        let last = self.last_week();
        while w <= last {
            out.push(w);
            w = w.add_weeks(1).expect("within calendar");
        }
        out
    }

    pub fn len(self) -> usize {
        self.first_week().weeks_until(self.last_week()).expect("within calendar") as usize + 1
    }

    pub fn is_empty(self) -> bool {
        false
    }

    /// 1-based position of `week` in the season.
    pub fn week_index(self, week: Epiweek) -> Option<usize> {
        (week.season() == Some(self)).then(|| self.first_week().weeks_until(week).expect("calendar") as usize + 1)
    }

    pub fn contains(self, week: Epiweek) -> bool {
        week.season() == Some(self)
    }
}

impl fmt::Display for Season {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0, self.0 + 1)
    }
}

impl FromStr for Season {
    type Err = Error;

    /// Accepts `2017`, `2017/2018` or `2017-2018`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let head = s.split(['/', '-']).next().unwrap_or("");
        let year: i32 = head.parse().map_err(|_| Error::Config(format!("bad season `{s}`")))?;
        if let Some(tail) = s.split(['/', '-']).nth(1) {
            if tail.parse::<i32>().ok() != Some(year + 1) {
                return Err(Error::Config(format!("bad season `{s}`")));
            }
        }
        weeks_in_year(year)?;
        weeks_in_year(year + 1)?;
        Ok(Season(year))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Datelike, NaiveDate, Weekday};

    fn ew(code: u32) -> Epiweek {
        Epiweek::from_yyyyww(code).unwrap()
    }

    fn mmwr_week1_start(year: i32) -> NaiveDate {
        let jan4 = NaiveDate::from_ymd_opt(year, 1, 4).unwrap();
        jan4 - chrono::Duration::days(jan4.weekday().num_days_from_sunday() as i64)
    }

    #[test]
    fn calendar_matches_mmwr_rule() {
        for year in calendar_years() {
            let days = (mmwr_week1_start(year + 1) - mmwr_week1_start(year)).num_days();
            assert_eq!(weeks_in_year(year).unwrap() as i64, days / 7, "year {year}");
        }
        assert_eq!(mmwr_week1_start(2017).weekday(), Weekday::Sun);
    }

    #[test]
    fn arithmetic() {
        assert_eq!(ew(201040).add_weeks(4).unwrap(), ew(201044));
        assert_eq!(ew(201052).add_weeks(1).unwrap(), ew(201101));
        assert_eq!(ew(201452).add_weeks(1).unwrap(), ew(201453));
        assert_eq!(ew(201453).add_weeks(1).unwrap(), ew(201501));
        assert_eq!(ew(201501).add_weeks(-1).unwrap(), ew(201453));
        assert_eq!(ew(201750).add_weeks(4).unwrap(), ew(201802));
        assert_eq!(ew(201040).weeks_until(ew(201120)).unwrap(), 32);
        assert_eq!(ew(201120).weeks_until(ew(201040)).unwrap(), -32);
    }

    #[test]
    fn arithmetic_agrees_with_dates() {
        let start = ew(201040);
        let start_date = mmwr_week1_start(2010) + chrono::Duration::weeks(39);
        for k in 0..600i64 {
            let w = start.add_weeks(k).unwrap();
            let date = start_date + chrono::Duration::weeks(k);
            let mut year = date.year() + 1;
            while mmwr_week1_start(year) > date {
                year -= 1;
            }
            let week = (date - mmwr_week1_start(year)).num_days() / 7 + 1;
            assert_eq!((w.year(), w.week() as i64), (year, week), "offset {k}");
            assert_eq!(start.weeks_until(w).unwrap(), k);
        }
    }

    #[test]
    fn seasons() {
        assert_eq!(ew(201040).season(), Some(Season(2010)));
        assert_eq!(ew(201120).season(), Some(Season(2010)));
        assert_eq!(ew(201453).season(), Some(Season(2014)));
        assert_eq!(ew(201121).season(), None);
        assert_eq!(Season(2010).len(), 33);
        assert_eq!(Season(2014).len(), 34);
        assert_eq!(Season(2014).weeks().len(), 34);
        assert_eq!(Season(2010).week_index(ew(201040)), Some(1));
        assert_eq!(Season(2010).week_index(ew(201101)), Some(14));
        assert_eq!("2017/2018".parse::<Season>().unwrap(), Season(2017));
        assert_eq!("2017".parse::<Season>().unwrap(), Season(2017));
        assert!("2017/2019".parse::<Season>().is_err());
    }

    #[test]
    fn parsing() {
        assert_eq!("201743".parse::<Epiweek>().unwrap(), ew(201743));
        assert!("201754".parse::<Epiweek>().is_err());
        assert!("201700".parse::<Epiweek>().is_err());
        assert!("2017-43".parse::<Epiweek>().is_err());
        assert_eq!(ew(201801).to_string(), "201801");
        assert!(ew(201752) < ew(201801));
    }
}
