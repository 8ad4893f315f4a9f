use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

use super::{RawSeries, TimeSeries};

/// Fills calendar gaps and empty cells.
///
/// A missing cell takes the mean of the values present in the same row; when
/// the row has nothing else to offer, the previous day's (already imputed)
/// value is copied. Absent calendar days count as fully missing rows.
pub fn impute_missing(raw: &RawSeries) -> Result<TimeSeries> {
    if raw.values.iter().all(Option::is_none)
        && raw.covariates.values().all(|c| c.iter().all(Option::is_none))
    {
        return Err(Error::Data("series holds no observed values".into()));
    }
    let (Some(&first), Some(&last)) = (raw.dates.first(), raw.dates.last()) else {
        return Err(Error::Data("series is empty".into()));
    };

    let names: Vec<&String> = raw.covariates.keys().collect();
    let span = (last - first).num_days() as usize + 1;
    // column 0 is the case value, then covariates in name order
    let mut grid: Vec<Vec<Option<f64>>> = vec![vec![None; 1 + names.len()]; span];
    for (i, date) in raw.dates.iter().enumerate() {
        let row = &mut grid[(*date - first).num_days() as usize];
        row[0] = raw.values[i];
        for (k, name) in names.iter().enumerate() {
            row[k + 1] = raw.covariates[*name][i];
        }
    }

    let mut filled: Vec<Vec<f64>> = Vec::with_capacity(span);
    for (day, row) in grid.iter().enumerate() {
        let present: Vec<f64> = row.iter().flatten().copied().collect();
        let row_mean = (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64);
        let mut out = Vec::with_capacity(row.len());
        for (col, cell) in row.iter().enumerate() {
            let v = match (cell, row_mean) {
                (Some(v), _) => *v,
                (None, Some(mean)) => mean,
                (None, None) => match filled.last() {
                    Some(prev) => prev[col],
                    None => {
                        return Err(Error::Data(format!(
                            "first day {} is fully missing and has no previous row to copy",
                            first + chrono::Days::new(day as u64)
                        )))
                    }
                },
            };
            out.push(v);
        }
        filled.push(out);
    }

    let dates = first.iter_days().take(span).collect();
    let values = filled.iter().map(|r| r[0]).collect();
    let covariates = names
        .iter()
        .enumerate()
        .map(|(k, name)| ((*name).clone(), filled.iter().map(|r| r[k + 1]).collect()))
        .collect();
    TimeSeries::with_covariates(dates, values, covariates)
}

/// Drops every day whose case count is below `threshold`. Retained days form
/// one contiguous stream; their original dates are kept.
pub fn filter_low_counts(ts: &TimeSeries, threshold: f64) -> Result<TimeSeries> {
    let out = ts.retain_indices(|i| ts.values()[i] >= threshold);
    if out.is_empty() {
        return Err(Error::Data(format!(
            "no day has at least {threshold} cases; filtered stream is empty"
        )));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScaleMode {
    /// Divide day `t` by the maximum over days `<= t`.
    #[default]
    RunningMax,
    /// Divide everything by the maximum of the whole series. Uses future data.
    GlobalMax,
}

impl FromStr for ScaleMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "running-max" => Ok(ScaleMode::RunningMax),
            "global-max" | "fixed-global-max" => Ok(ScaleMode::GlobalMax),
            other => Err(format!(
                "unknown normalization `{other}` (expected `running-max` or `global-max`)"
            )),
        }
    }
}

impl fmt::Display for ScaleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScaleMode::RunningMax => "running-max",
            ScaleMode::GlobalMax => "global-max",
        })
    }
}

/// Per-day divisors applied to the case column by [`normalize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Scale {
    mode: ScaleMode,
    factors: Vec<f64>,
}

impl Scale {
    pub fn mode(&self) -> ScaleMode {
        self.mode
    }

    /// Divisor in force at stream index `t`.
    pub fn factor_at(&self, t: usize) -> f64 {
        self.factors[t]
    }

    pub fn factors(&self) -> &[f64] {
        &self.factors
    }

    pub fn denormalize(&self, t: usize, value: f64) -> f64 {
        value * self.factors[t]
    }
}

fn scale_factors(col: &[f64], mode: ScaleMode) -> Vec<f64> {
    match mode {
        ScaleMode::GlobalMax => {
            let m = col.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            vec![m; col.len()]
        }
        ScaleMode::RunningMax => col
            .iter()
            .scan(0.0_f64, |m, v| {
                *m = m.max(v.abs());
                Some(*m)
            })
            .collect(),
    }
}

/// Divides case values (and each covariate column, independently) by their
/// maximum, global or running. Covariate days whose running maximum is still
/// zero are left unscaled.
pub fn normalize(ts: &TimeSeries, mode: ScaleMode) -> Result<(TimeSeries, Scale)> {
    if ts.is_empty() {
        return Err(Error::Data("cannot normalize an empty series".into()));
    }
    let factors = scale_factors(ts.values(), mode);
    if let Some(i) = factors.iter().position(|f| *f <= 0.0) {
        return Err(Error::Data(format!(
            "non-positive scale factor on {} (series must start with a positive count)",
            ts.dates()[i]
        )));
    }
    let values = ts.values().iter().zip(&factors).map(|(v, f)| v / f).collect();
    let covariates: BTreeMap<String, Vec<f64>> = ts
        .covariates()
        .iter()
        .map(|(name, col)| {
            let scaled = col
                .iter()
                .zip(scale_factors(col, mode))
                .map(|(v, f)| if f > 0.0 { v / f } else { *v })
                .collect();
            (name.clone(), scaled)
        })
        .collect();
    Ok((ts.with_columns(values, covariates), Scale { mode, factors }))
}
