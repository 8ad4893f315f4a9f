use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;

use crate::error::{Error, Result};

use super::TimeSeries;

/// Date encodings accepted in the date column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DateFormat {
    /// `YYYY-MM-DD`
    #[default]
    Iso,
    /// `DD/MM/YY`, two-digit years expand to 20YY.
    DayMonthYear,
}

impl DateFormat {
    pub fn parse(self, s: &str) -> Option<NaiveDate> {
        let s = s.trim();
        match self {
            DateFormat::Iso => NaiveDate::parse_from_str(s, "%Y-%m-%d").ok(),
            DateFormat::DayMonthYear => {
                let mut parts = s.split('/');
                let (d, m, y) = (parts.next()?, parts.next()?, parts.next()?);
                if parts.next().is_some() || y.len() != 2 {
                    return None;
                }
                let year = 2000 + y.parse::<i32>().ok()?;
                NaiveDate::from_ymd_opt(year, m.parse().ok()?, d.parse().ok()?)
            }
        }
    }
}

impl FromStr for DateFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "iso" | "yyyy-mm-dd" => Ok(DateFormat::Iso),
            "dmy" | "dd/mm/yy" => Ok(DateFormat::DayMonthYear),
            other => Err(format!("unknown date format `{other}` (expected `iso` or `dmy`)")),
        }
    }
}

impl fmt::Display for DateFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DateFormat::Iso => "iso",
            DateFormat::DayMonthYear => "dmy",
        })
    }
}

/// Maps CSV headers onto the date, case and covariate columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvSchema {
    pub date_column: String,
    pub value_column: String,
    /// `None` takes every remaining column as a covariate.
    pub covariates: Option<Vec<String>>,
    pub date_format: DateFormat,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            date_column: "date".into(),
            value_column: "cases".into(),
            covariates: None,
            date_format: DateFormat::Iso,
        }
    }
}

/// Parsed but not yet imputed data: `None` marks an empty cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<Option<f64>>,
    pub covariates: BTreeMap<String, Vec<Option<f64>>>,
}

impl RawSeries {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }
}

impl From<&TimeSeries> for RawSeries {
    fn from(ts: &TimeSeries) -> Self {
        Self {
            dates: ts.dates().to_vec(),
            values: ts.values().iter().copied().map(Some).collect(),
            covariates: ts
                .covariates()
                .iter()
                .map(|(k, v)| (k.clone(), v.iter().copied().map(Some).collect()))
                .collect(),
        }
    }
}

pub fn parse_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<RawSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv_reader(file, schema)
}

pub fn parse_csv_reader<R: Read>(reader: R, schema: &CsvSchema) -> Result<RawSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            row: 1,
            message: e.to_string(),
        })?
        .clone();
    let find = |name: &str| -> Result<usize> {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::config("schema", format!("column `{name}` not found in CSV header"))
        })
    };
    let date_idx = find(&schema.date_column)?;
    let value_idx = find(&schema.value_column)?;
    let cov_cols: Vec<(String, usize)> = match &schema.covariates {
        Some(names) => names
            .iter()
            .map(|n| find(n).map(|i| (n.clone(), i)))
            .collect::<Result<_>>()?,
        None => headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != date_idx && *i != value_idx)
            .map(|(i, h)| (h.to_string(), i))
            .collect(),
    };

    let mut rows: Vec<(NaiveDate, usize, Option<f64>, Vec<Option<f64>>)> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            row: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        let cell = |i: usize| record.get(i).unwrap_or("");
        let date = schema.date_format.parse(cell(date_idx)).ok_or_else(|| Error::Parse {
            row,
            message: format!(
                "unparseable date `{}` (format {})",
                cell(date_idx),
                schema.date_format
            ),
        })?;
        let number = |i: usize, name: &str| -> Result<Option<f64>> {
            let s = cell(i);
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Some)
                .ok_or_else(|| Error::Parse {
                    row,
                    message: format!("column `{name}`: `{s}` is not a finite number"),
                })
        };
        let value = number(value_idx, &schema.value_column)?;
        if let Some(v) = value {
            if v < 0.0 {
                return Err(Error::Parse {
                    row,
                    message: format!("negative case count {v}"),
                });
            }
        }
        let covs = cov_cols
            .iter()
            .map(|(name, i)| number(*i, name))
            .collect::<Result<Vec<_>>>()?;
        rows.push((date, row, value, covs));
    }

    rows.sort_by_key(|r| r.0);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::Data(format!(
            "duplicate date {} (rows {} and {})",
            w[0].0, w[0].1, w[1].1
        )));
    }

    let mut covariates: BTreeMap<String, Vec<Option<f64>>> = cov_cols
        .iter()
        .map(|(n, _)| (n.clone(), Vec::with_capacity(rows.len())))
        .collect();
    let mut dates = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len());
    for (date, _, value, covs) in rows {
        dates.push(date);
        values.push(value);
        for ((name, _), v) in cov_cols.iter().zip(covs) {
            covariates.get_mut(name).expect("column registered").push(v);
        }
    }
    Ok(RawSeries {
        dates,
        values,
        covariates,
    })
}

/// Writes a series in the ingest format: ISO dates, `cases`, then covariates in name order.
pub fn write_csv<W: Write>(ts: &TimeSeries, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| Error::Data(format!("csv write failed: {e}"));
    let mut header = vec!["date".to_string(), super::CASES.to_string()];
    header.extend(ts.covariates().keys().cloned());
    wtr.write_record(&header).map_err(csv_err)?;
    for (i, date) in ts.dates().iter().enumerate() {
        let mut row = vec![date.format("%Y-%m-%d").to_string(), ts.values()[i].to_string()];
        row.extend(ts.covariates().values().map(|c| c[i].to_string()));
        wtr.write_record(&row).map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| Error::Data(format!("csv write failed: {e}")))?;
    Ok(())
}
