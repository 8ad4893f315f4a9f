//! Aggregated feature vectors over a trailing window of a multivariate stream.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ingest::{TimeSeries, CASES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Aggregator {
    Mean,
    Min,
    Max,
    Median,
    /// max - min
    Range,
    /// Population standard deviation.
    StdDev,
}

impl Aggregator {
    pub fn apply(self, values: &[f64]) -> f64 {
        debug_assert!(!values.is_empty());
        let n = values.len() as f64;
        match self {
            Aggregator::Mean => values.iter().sum::<f64>() / n,
            Aggregator::Min => values.iter().copied().fold(f64::INFINITY, f64::min),
            Aggregator::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Aggregator::Median => {
                let mut sorted = values.to_vec();
                sorted.sort_by(f64::total_cmp);
                let mid = sorted.len() / 2;
                if sorted.len() % 2 == 0 {
                    (sorted[mid - 1] + sorted[mid]) / 2.0
                } else {
                    sorted[mid]
                }
            }
            Aggregator::Range => Aggregator::Max.apply(values) - Aggregator::Min.apply(values),
            Aggregator::StdDev => {
                let mean = Aggregator::Mean.apply(values);
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
            }
        }
    }

    fn needs_spread(self) -> bool {
        matches!(self, Aggregator::Range | Aggregator::StdDev)
    }
}

impl FromStr for Aggregator {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.trim() {
            "mean" => Aggregator::Mean,
            "min" => Aggregator::Min,
            "max" => Aggregator::Max,
            "median" => Aggregator::Median,
            "range" => Aggregator::Range,
            "std" | "sd" | "std-dev" | "stddev" => Aggregator::StdDev,
            other => return Err(format!("unknown aggregator `{other}`")),
        })
    }
}

impl fmt::Display for Aggregator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregator::Mean => "mean",
            Aggregator::Min => "min",
            Aggregator::Max => "max",
            Aggregator::Median => "median",
            Aggregator::Range => "range",
            Aggregator::StdDev => "std-dev",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureItem {
    pub column: String,
    pub aggregator: Aggregator,
}

impl FromStr for FeatureItem {
    type Err = String;

    /// Parses `<column>:<aggregator>`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (column, agg) = s
            .rsplit_once(':')
            .ok_or_else(|| format!("feature `{s}` must look like <column>:<aggregator>"))?;
        let column = column.trim();
        if column.is_empty() {
            return Err(format!("feature `{s}` has an empty column name"));
        }
        Ok(FeatureItem {
            column: column.to_string(),
            aggregator: agg.parse()?,
        })
    }
}

impl fmt::Display for FeatureItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.column, self.aggregator)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSpec {
    pub items: Vec<FeatureItem>,
    /// Lookback length in days.
    pub window: usize,
}

impl FeatureSpec {
    pub fn new(items: Vec<FeatureItem>, window: usize) -> Result<Self> {
        let spec = Self { items, window };
        spec.validate()?;
        Ok(spec)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.items.is_empty() {
            return Err(Error::config("feature", "feature spec has no items"));
        }
        if self.window == 0 {
            return Err(Error::config("feature_window", "feature window must be at least 1"));
        }
        if self.window < 2 && self.items.iter().any(|i| i.aggregator.needs_spread()) {
            return Err(Error::config(
                "feature_window",
                "range and std-dev need a window of at least 2 days",
            ));
        }
        Ok(())
    }

    /// Checks that every referenced column exists in `ts`.
    pub fn check_columns(&self, ts: &TimeSeries) -> Result<()> {
        match self.items.iter().find(|i| ts.column(&i.column).is_none()) {
            Some(item) => Err(Error::config(
                "feature",
                format!("column `{}` is not present in the stream", item.column),
            )),
            None => Ok(()),
        }
    }
}

/// Feature vector for the window ending at stream index `end_day` (inclusive).
/// Reads nothing after `end_day`.
pub fn aggregate_window(ts: &TimeSeries, end_day: usize, spec: &FeatureSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    if end_day + 1 < spec.window || end_day >= ts.len() {
        return Err(Error::InsufficientData {
            needed: spec.window,
            available: (end_day + 1).min(ts.len()),
        });
    }
    let lo = end_day + 1 - spec.window;
    spec.items
        .iter()
        .map(|item| {
            let col = ts.column(&item.column).ok_or_else(|| {
                Error::config("feature", format!("column `{}` is not present in the stream", item.column))
            })?;
            Ok(item.aggregator.apply(&col[lo..=end_day]))
        })
        .collect()
}

/// The twenty aggregated features used for the multivariate experiments, over 14 days.
pub fn default_covariate_spec() -> FeatureSpec {
    use Aggregator::*;
    let items = [
        ("school_closing", Mean),
        ("public_events_cancellation", Mean),
        (CASES, Min),
        (CASES, Max),
        ("unvaccinated_cases", Min),
        ("unvaccinated_cases", Median),
        ("second_dose_population", Min),
        ("second_dose_population", Range),
        ("second_dose_cases", Mean),
        ("second_dose_cases", Median),
        ("first_dose_cases", Median),
        ("first_dose_cases", Mean),
        ("weekly_deaths", Mean),
        ("workplace_closing", Mean),
        ("weekly_icu", Mean),
        ("weighted_stringency", Median),
        ("recovered", StdDev),
        ("cases_70_plus", Mean),
        ("first_dose_population", Median),
        ("cases_18_24", Mean),
    ]
    .into_iter()
    .map(|(column, aggregator)| FeatureItem {
        column: column.to_string(),
        aggregator,
    })
    .collect();
    FeatureSpec { items, window: 14 }
}
