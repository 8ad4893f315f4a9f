//! Adaptive forecasting of daily case counts.
//!
//! A feed-forward network (or an AR(1) baseline) is trained incrementally as
//! each day's counts arrive, replaying a bounded memory of recent windows,
//! and is scored prequentially by MAE and MAPE over wave and normal periods.
//!
//! * [`ingest`]: CSV loading, imputation, low-count filtering, scaling, windows, synthetic streams
//! * [`features`]: aggregated feature vectors over a trailing window
//! * [`mlp`]: the network, backpropagation and Adam
//! * [`arima`]: the AR(1) baseline
//! * [`adaptive`]: replay memory and the online/offline drivers
//! * [`evaluation`]: metrics, segmentation and reports
//! * [`experiment`]: config-driven runs, grids and output files

pub mod adaptive;
pub mod arima;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod features;
pub mod format;
pub mod ingest;
pub mod mlp;

pub use error::{Error, Result};
