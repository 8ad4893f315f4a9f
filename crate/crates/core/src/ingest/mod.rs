//! Loading, cleaning and windowing of daily case-count streams.
//!
//! The usual pipeline is
//! [`parse_csv`] → [`impute_missing`] → [`filter_low_counts`] → [`normalize`] → [`make_windows`].
//! After low-count filtering the stream may contain calendar gaps; every
//! downstream step indexes by stream position and keeps the original dates
//! only for labelling.

mod csv_input;
mod preprocess;
mod synthetic;
mod window;

use std::collections::BTreeMap;

use chrono::NaiveDate;

use crate::error::{Error, Result};

pub use csv_input::{parse_csv, parse_csv_reader, write_csv, CsvSchema, DateFormat, RawSeries};
pub use preprocess::{filter_low_counts, impute_missing, normalize, Scale, ScaleMode};
pub use synthetic::{generate_synthetic_stream, five_wave_preset, SyntheticConfig, WaveSpec};
pub use window::{make_windows, WindowedExample};

/// Name under which the case column can always be referenced, whatever its CSV header.
pub const CASES: &str = "cases";

/// A dated sequence of daily case counts with optional covariate columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
    covariates: BTreeMap<String, Vec<f64>>,
}

impl TimeSeries {
    /// Builds a series without covariates.
    pub fn new(dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        Self::with_covariates(dates, values, BTreeMap::new())
    }

    pub fn with_covariates(
        dates: Vec<NaiveDate>,
        values: Vec<f64>,
        covariates: BTreeMap<String, Vec<f64>>,
    ) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::Shape {
                expected: dates.len(),
                actual: values.len(),
            });
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Data(format!(
                "dates must be strictly increasing ({} followed by {})",
                w[0], w[1]
            )));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(Error::Data(format!(
                "case value {v} on {} is not a finite non-negative number",
                dates[i]
            )));
        }
        for (name, col) in &covariates {
            if col.len() != dates.len() {
                return Err(Error::Data(format!(
                    "covariate `{name}` has {} values for {} dates",
                    col.len(),
                    dates.len()
                )));
            }
            if let Some(v) = col.iter().find(|v| !v.is_finite()) {
                return Err(Error::Data(format!("covariate `{name}` holds non-finite value {v}")));
            }
        }
        Ok(Self {
            dates,
            values,
            covariates,
        })
    }

    /// Builds a series of consecutive days starting at `start`.
    pub fn from_values(start: NaiveDate, values: Vec<f64>) -> Result<Self> {
        let dates = start.iter_days().take(values.len()).collect();
        Self::new(dates, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn covariates(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.covariates
    }

    /// Looks up a column by name. [`CASES`] always resolves to the case values.
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        match self.covariates.get(name) {
            Some(col) => Some(col.as_slice()),
            None if name == CASES => Some(&self.values),
            None => None,
        }
    }

    /// Keeps the days whose index satisfies `keep`.
    pub(crate) fn retain_indices(&self, keep: impl Fn(usize) -> bool) -> Self {
        let pick = |src: &[f64]| -> Vec<f64> {
            src.iter().enumerate().filter(|(i, _)| keep(*i)).map(|(_, v)| *v).collect()
        };
        Self {
            dates: self
                .dates
                .iter()
                .enumerate()
                .filter(|(i, _)| keep(*i))
                .map(|(_, d)| *d)
                .collect(),
            values: pick(&self.values),
            covariates: self
                .covariates
                .iter()
                .map(|(k, v)| (k.clone(), pick(v)))
                .collect(),
        }
    }

    /// Replaces the case values and covariates, keeping dates.
    pub(crate) fn with_columns(&self, values: Vec<f64>, covariates: BTreeMap<String, Vec<f64>>) -> Self {
        debug_assert_eq!(values.len(), self.dates.len());
        Self {
            dates: self.dates.clone(),
            values,
            covariates,
        }
    }

    /// Prefix of the first `len` days.
    pub fn truncate(&self, len: usize) -> Self {
        let len = len.min(self.len());
        self.retain_indices(|i| i < len)
    }
}
