use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;

use crate::adaptive::ForecastRecord;
use crate::error::{Error, Result};

pub const OVERALL: &str = "overall";
pub const WAVES: &str = "waves";
pub const NORMAL: &str = "normal";

/// A named, inclusive calendar range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DateRange {
    pub name: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }
}

impl FromStr for DateRange {
    type Err = String;

    /// Parses `<name>:<YYYY-MM-DD>:<YYYY-MM-DD>`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let [name, start, end] = parts.as_slice() else {
            return Err(format!("segment `{s}` must look like <name>:<start>:<end>"));
        };
        let date = |d: &str| {
            NaiveDate::parse_from_str(d, "%Y-%m-%d").map_err(|e| format!("segment `{s}`: bad date `{d}`: {e}"))
        };
        Ok(DateRange {
            name: name.to_string(),
            start: date(start)?,
            end: date(end)?,
        })
    }
}

impl fmt::Display for DateRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.name, self.start, self.end)
    }
}

/// Wave periods; every other date is "normal".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentSpec {
    pub waves: Vec<DateRange>,
}

impl Default for SegmentSpec {
    /// The five Cyprus wave periods between late 2020 and mid 2022.
    fn default() -> Self {
        let wave = |n: u32, start: (i32, u32, u32), end: (i32, u32, u32)| DateRange {
            name: format!("Wave {n}"),
            start: NaiveDate::from_ymd_opt(start.0, start.1, start.2).expect("valid date"),
            end: NaiveDate::from_ymd_opt(end.0, end.1, end.2).expect("valid date"),
        };
        Self {
            waves: vec![
                wave(1, (2020, 12, 13), (2021, 1, 11)),
                wave(2, (2021, 4, 4), (2021, 5, 3)),
                wave(3, (2021, 7, 2), (2021, 7, 31)),
                wave(4, (2021, 12, 19), (2022, 1, 7)),
                wave(5, (2022, 6, 17), (2022, 7, 26)),
            ],
        }
    }
}

impl SegmentSpec {
    pub fn new(waves: Vec<DateRange>) -> Result<Self> {
        let spec = Self { waves };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for w in &self.waves {
            if w.start > w.end {
                return Err(Error::config("segment", format!("`{}` ends before it starts", w.name)));
            }
            if [OVERALL, WAVES, NORMAL].contains(&w.name.as_str()) {
                return Err(Error::config("segment", format!("`{}` is a reserved segment name", w.name)));
            }
        }
        for (i, a) in self.waves.iter().enumerate() {
            for b in &self.waves[i + 1..] {
                if a.name == b.name {
                    return Err(Error::config("segment", format!("duplicate segment `{}`", a.name)));
                }
                if a.start <= b.end && b.start <= a.end {
                    return Err(Error::config(
                        "segment",
                        format!("`{}` and `{}` overlap", a.name, b.name),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Wave containing `date`, if any.
    pub fn wave_of(&self, date: NaiveDate) -> Option<&DateRange> {
        self.waves.iter().find(|w| w.contains(date))
    }
}

/// Splits records by the date of their first target. Output order: overall,
/// waves, normal, then each wave in spec order. Empty subsets are kept.
pub fn segment<'a>(records: &'a [ForecastRecord], spec: &SegmentSpec) -> Vec<(String, Vec<&'a ForecastRecord>)> {
    let mut per_wave: Vec<Vec<&ForecastRecord>> = vec![Vec::new(); spec.waves.len()];
    let mut normal = Vec::new();
    for r in records {
        match spec.waves.iter().position(|w| w.contains(r.first_target())) {
            Some(k) => per_wave[k].push(r),
            None => normal.push(r),
        }
    }
    let union: Vec<&ForecastRecord> = per_wave.iter().flatten().copied().collect();
    let mut out = vec![
        (OVERALL.to_string(), records.iter().collect()),
        (WAVES.to_string(), union),
        (NORMAL.to_string(), normal),
    ];
    out.extend(spec.waves.iter().map(|w| w.name.clone()).zip(per_wave));
    out
}
