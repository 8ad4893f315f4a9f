use crate::arima::{fit_ar1, ArModel};
use crate::error::Result;
use crate::mlp::{MlpModel, TrainConfig};

use super::MemoryQueue;

/// What a forecaster may look at when issuing the forecast for one day.
#[derive(Debug, Clone, Copy)]
pub struct DayContext<'a> {
    /// Issue day, 1-based stream position.
    pub day: usize,
    /// Normalized model input: the lag window or the feature vector.
    pub input: &'a [f64],
    /// Raw case counts for days `1..=day`.
    pub history: &'a [f64],
    /// Normalization divisor in force at `day`.
    pub scale: f64,
    pub horizon: usize,
}

/// A model driven by the adaptive loop. Forecasts are returned in case units.
pub trait Forecaster {
    fn predict(&mut self, ctx: &DayContext<'_>) -> Result<Vec<f64>>;

    /// Incremental update on the current memory contents.
    fn learn(&mut self, memory: &MemoryQueue) -> Result<()>;
}

#[derive(Debug, Clone)]
pub struct MlpForecaster {
    pub model: MlpModel,
    pub config: TrainConfig,
    oriented: bool,
}

impl MlpForecaster {
    /// Builds a network `input_dim -> hidden... -> horizon`.
    pub fn new(input_dim: usize, hidden: &[usize], horizon: usize, config: TrainConfig) -> Result<Self> {
        let mut arch = Vec::with_capacity(hidden.len() + 2);
        arch.push(input_dim);
        arch.extend_from_slice(hidden);
        arch.push(horizon);
        Ok(Self {
            model: MlpModel::init(&arch, &config)?,
            config,
            oriented: false,
        })
    }

    /// Applies `MlpModel::orient_outputs` once, on the first input seen.
    fn orient_once(&mut self, x: &[f64]) -> Result<()> {
        if !self.oriented {
            self.oriented = true;
            if self.config.orient_outputs {
                self.model.orient_outputs(x)?;
            }
        }
        Ok(())
    }
}

impl Forecaster for MlpForecaster {
    fn predict(&mut self, ctx: &DayContext<'_>) -> Result<Vec<f64>> {
        self.orient_once(ctx.input)?;
        Ok(self
            .model
            .forward(ctx.input)?
            .into_iter()
            .map(|v| v * ctx.scale)
            .collect())
    }

    fn learn(&mut self, memory: &MemoryQueue) -> Result<()> {
        if let Some(first) = memory.iter().next() {
            self.orient_once(&first.x)?;
        }
        self.model.train_increment(memory, &self.config)
    }
}

/// AR(1) refit every day on the trailing `fit_window` raw counts.
#[derive(Debug, Clone)]
pub struct ArForecaster {
    pub fit_window: usize,
    last_fit: Option<ArModel>,
}

impl ArForecaster {
    pub fn new(fit_window: usize) -> Self {
        Self {
            fit_window,
            last_fit: None,
        }
    }

    pub fn last_fit(&self) -> Option<&ArModel> {
        self.last_fit.as_ref()
    }
}

impl Forecaster for ArForecaster {
    fn predict(&mut self, ctx: &DayContext<'_>) -> Result<Vec<f64>> {
        let start = ctx.history.len().saturating_sub(self.fit_window);
        let window = &ctx.history[start..];
        let model = fit_ar1(window)?;
        self.last_fit = Some(model);
        let last = *window.last().expect("fit_ar1 checked length");
        // counts cannot be negative
        Ok(model.forecast(last, ctx.horizon).into_iter().map(|v| v.max(0.0)).collect())
    }

    fn learn(&mut self, _memory: &MemoryQueue) -> Result<()> {
        Ok(())
    }
}
