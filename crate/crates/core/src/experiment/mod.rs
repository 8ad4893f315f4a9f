//! Config-driven experiment runs, parameter grids and synthetic data export.

mod config;
mod grid;
mod run;

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ingest::{generate_synthetic_stream, write_csv, SyntheticConfig};

pub use config::{ConfigEntries, DataSource, ExperimentConfig, Mode, ModelKind, OUTPUT_ROOT_ENV};
pub use grid::{run_grid, summary_csv, summary_table, GridOutcome, GridRowOutcome, GridSpec, SUMMARY_CSV, SUMMARY_TXT};
pub use run::{
    build_report, load_series, plot_data, predictions_csv, predictions_file, read_predictions, report_run_dir,
    run_experiment, run_repetition, RunOutcome, FAILED_MARKER, METRICS_CSV, METRICS_TXT, PLOTDATA_CSV, SNAPSHOT_FILE,
};

/// Writes a synthetic stream to `path` in the ingest CSV format and returns its length.
pub fn synth_command(config: &SyntheticConfig, path: &Path) -> Result<usize> {
    let ts = generate_synthetic_stream(config)?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(&ts, BufWriter::new(file))?;
    Ok(ts.len())
}
