//! The prequential driver: each day, first train on the examples whose
//! targets have just been observed, then forecast the next `D` days.
//!
//! Days are numbered from 1 (the first observation). With lookback `W` and
//! horizon `D`:
//!
//! * days `W ..= W+D-1` only predict;
//! * from day `W+D` on, the pair (window ending at day `t-D`, values of days
//!   `t-D+1 ..= t`) is appended to the memory, the model trains on the
//!   whole memory, and then predicts from the window ending at day `t`.
//!
//! A forecast issued at day `t` covers days `t+1 ..= t+D` and only depends on
//! data up to day `t` (with running-max normalization).

mod forecaster;
mod memory;

use chrono::{Days, NaiveDate};

use crate::error::{Error, Result};
use crate::features::{aggregate_window, FeatureSpec};
use crate::ingest::{normalize, ScaleMode, TimeSeries, WindowedExample};

pub use forecaster::{ArForecaster, DayContext, Forecaster, MlpForecaster};
pub use memory::MemoryQueue;

/// One issued forecast and, once known, what actually happened.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastRecord {
    /// 1-based stream position of the issue day.
    pub issue_day: usize,
    pub issue_date: NaiveDate,
    pub target_dates: Vec<NaiveDate>,
    /// Forecast in case units.
    pub predicted: Vec<f64>,
    /// Observed values; `None` past the end of the stream.
    pub realized: Vec<Option<f64>>,
}

impl ForecastRecord {
    pub fn horizon(&self) -> usize {
        self.predicted.len()
    }

    pub fn is_realized(&self) -> bool {
        self.realized.iter().all(Option::is_some)
    }

    pub fn first_target(&self) -> NaiveDate {
        self.target_dates[0]
    }
}

/// Loop parameters shared by the online and offline drivers.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopOptions {
    /// Raw-lag lookback `W`. Ignored in feature mode.
    pub window: usize,
    /// Forecast horizon `D`.
    pub horizon: usize,
    /// Memory capacity `M`.
    pub memory: usize,
    pub scale: ScaleMode,
    /// When set, inputs are aggregated features over `features.window` days.
    pub features: Option<FeatureSpec>,
}

impl LoopOptions {
    pub fn raw(window: usize, horizon: usize, memory: usize) -> Self {
        Self {
            window,
            horizon,
            memory,
            scale: ScaleMode::RunningMax,
            features: None,
        }
    }

    /// Days of history consumed by one model input.
    pub fn lookback(&self) -> usize {
        self.features.as_ref().map_or(self.window, |f| f.window)
    }

    /// Length of one model input vector.
    pub fn input_dim(&self) -> usize {
        self.features.as_ref().map_or(self.window, FeatureSpec::len)
    }

    fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::config("window", "must be at least 1"));
        }
        if self.horizon == 0 {
            return Err(Error::config("horizon", "must be at least 1"));
        }
        if self.memory == 0 {
            return Err(Error::config("memory", "must be at least 1"));
        }
        if let Some(spec) = &self.features {
            spec.validate()?;
        }
        Ok(())
    }
}

/// Instrumentation hook for the drivers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LoopEvent<'a> {
    /// An example entered the memory at `day`.
    Append {
        day: usize,
        example: &'a WindowedExample,
        memory_len: usize,
    },
    /// The forecaster trained on `memory_len` examples at `day`.
    Train { day: usize, memory_len: usize },
    /// A forecast was issued at `day`.
    Predict { day: usize, record: &'a ForecastRecord },
}

/// Normalized stream plus everything needed to cut inputs and targets.
struct Prepared<'a> {
    raw: &'a TimeSeries,
    norm: TimeSeries,
    factors: Vec<f64>,
    opts: &'a LoopOptions,
}

impl<'a> Prepared<'a> {
    fn new(ts: &'a TimeSeries, opts: &'a LoopOptions) -> Result<Self> {
        opts.validate()?;
        if let Some(spec) = &opts.features {
            spec.check_columns(ts)?;
        }
        let needed = opts.lookback() + opts.horizon;
        if ts.len() < needed {
            return Err(Error::InsufficientData {
                needed,
                available: ts.len(),
            });
        }
        let (norm, scale) = normalize(ts, opts.scale)?;
        Ok(Self {
            raw: ts,
            norm,
            factors: scale.factors().to_vec(),
            opts,
        })
    }

    fn len(&self) -> usize {
        self.raw.len()
    }

    /// Model input for the window ending at `day` (1-based).
    fn input(&self, day: usize) -> Result<Vec<f64>> {
        match &self.opts.features {
            Some(spec) => aggregate_window(&self.norm, day - 1, spec),
            None => Ok(self.norm.values()[day - self.opts.window..day].to_vec()),
        }
    }

    fn target_dates(&self, day: usize) -> Vec<NaiveDate> {
        let dates = self.raw.dates();
        let last = *dates.last().expect("non-empty");
        (day + 1..=day + self.opts.horizon)
            .map(|d| match dates.get(d - 1) {
                Some(date) => *date,
                None => last + Days::new((d - self.len()) as u64),
            })
            .collect()
    }

    /// Training pair whose input window ends at `issue_day` and whose targets
    /// are the following `D` days.
    fn example(&self, issue_day: usize) -> Result<WindowedExample> {
        let h = self.opts.horizon;
        Ok(WindowedExample {
            x: self.input(issue_day)?,
            y: self.norm.values()[issue_day..issue_day + h].to_vec(),
            issue_index: issue_day - 1,
            issue_date: self.raw.dates()[issue_day - 1],
            target_dates: self.target_dates(issue_day),
        })
    }

    fn forecast<F: Forecaster>(&self, forecaster: &mut F, day: usize) -> Result<ForecastRecord> {
        let input = self.input(day)?;
        let ctx = DayContext {
            day,
            input: &input,
            history: &self.raw.values()[..day],
            scale: self.factors[day - 1],
            horizon: self.opts.horizon,
        };
        let predicted = forecaster.predict(&ctx)?;
        if predicted.len() != self.opts.horizon {
            return Err(Error::Shape {
                expected: self.opts.horizon,
                actual: predicted.len(),
            });
        }
        if predicted.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite forecast on day {day}")));
        }
        let realized = (day + 1..=day + self.opts.horizon)
            .map(|d| self.raw.values().get(d - 1).copied())
            .collect();
        Ok(ForecastRecord {
            issue_day: day,
            issue_date: self.raw.dates()[day - 1],
            target_dates: self.target_dates(day),
            predicted,
            realized,
        })
    }
}

/// Runs the adaptive loop over the whole stream and returns one record per
/// day from the lookback onward (`len - lookback + 1` records).
pub fn run_online<F: Forecaster>(ts: &TimeSeries, forecaster: &mut F, opts: &LoopOptions) -> Result<Vec<ForecastRecord>> {
    run_online_observed(ts, forecaster, opts, |_| {})
}

pub fn run_online_observed<F, O>(
    ts: &TimeSeries,
    forecaster: &mut F,
    opts: &LoopOptions,
    mut observe: O,
) -> Result<Vec<ForecastRecord>>
where
    F: Forecaster,
    O: FnMut(&LoopEvent<'_>),
{
    let prep = Prepared::new(ts, opts)?;
    let lookback = opts.lookback();
    let horizon = opts.horizon;
    let mut memory = MemoryQueue::new(opts.memory)?;
    let mut records = Vec::with_capacity(prep.len() + 1 - lookback);

    for day in lookback..=prep.len() {
        if day >= lookback + horizon {
            let example = prep.example(day - horizon)?;
            memory.push(example);
            observe(&LoopEvent::Append {
                day,
                example: memory.newest().expect("just pushed"),
                memory_len: memory.len(),
            });
            forecaster.learn(&memory)?;
            observe(&LoopEvent::Train {
                day,
                memory_len: memory.len(),
            });
        }
        let record = prep.forecast(forecaster, day)?;
        observe(&LoopEvent::Predict { day, record: &record });
        records.push(record);
    }
    Ok(records)
}

/// Trains once on every window that fits inside the first `pretrain_days`,
/// then forecasts each remaining day with the parameters frozen.
pub fn run_offline<F: Forecaster>(
    ts: &TimeSeries,
    forecaster: &mut F,
    opts: &LoopOptions,
    pretrain_days: usize,
) -> Result<Vec<ForecastRecord>> {
    run_offline_observed(ts, forecaster, opts, pretrain_days, |_| {})
}

pub fn run_offline_observed<F, O>(
    ts: &TimeSeries,
    forecaster: &mut F,
    opts: &LoopOptions,
    pretrain_days: usize,
    mut observe: O,
) -> Result<Vec<ForecastRecord>>
where
    F: Forecaster,
    O: FnMut(&LoopEvent<'_>),
{
    let lookback = opts.lookback();
    let horizon = opts.horizon;
    if pretrain_days < lookback + horizon {
        return Err(Error::config(
            "pretrain_days",
            format!("must be at least lookback + horizon = {}", lookback + horizon),
        ));
    }
    let prep = Prepared::new(ts, opts)?;
    if prep.len() < pretrain_days {
        return Err(Error::InsufficientData {
            needed: pretrain_days,
            available: prep.len(),
        });
    }

    let issue_days = lookback..=pretrain_days - horizon;
    let mut memory = MemoryQueue::new(issue_days.clone().count())?;
    for issue in issue_days {
        memory.push(prep.example(issue)?);
        observe(&LoopEvent::Append {
            day: issue + horizon,
            example: memory.newest().expect("just pushed"),
            memory_len: memory.len(),
        });
    }
    forecaster.learn(&memory)?;
    observe(&LoopEvent::Train {
        day: pretrain_days,
        memory_len: memory.len(),
    });

    let mut records = Vec::with_capacity(prep.len() + 1 - pretrain_days);
    for day in pretrain_days..=prep.len() {
        let record = prep.forecast(forecaster, day)?;
        observe(&LoopEvent::Predict { day, record: &record });
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests;
