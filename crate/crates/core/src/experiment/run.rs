use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Days, NaiveDate};
use rayon::prelude::*;

use crate::adaptive::{run_offline, run_online, ArForecaster, ForecastRecord, Forecaster, LoopOptions, MlpForecaster};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, MetricsReport, ReportMeta};
use crate::format::sig10;
use crate::ingest::{filter_low_counts, generate_synthetic_stream, impute_missing, parse_csv, TimeSeries};
use crate::mlp::TrainConfig;

use super::config::{DataSource, ExperimentConfig, Mode, ModelKind};

pub const SNAPSHOT_FILE: &str = "config.snapshot";
pub const METRICS_CSV: &str = "metrics.csv";
pub const METRICS_TXT: &str = "metrics.txt";
pub const PLOTDATA_CSV: &str = "plotdata.csv";
pub const FAILED_MARKER: &str = "FAILED";

pub fn predictions_file(rep: usize) -> String {
    format!("predictions_rep{rep}.csv")
}

/// Artifacts of a finished run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub report: MetricsReport,
    /// Forecast records per repetition, in repetition order.
    pub records: Vec<Vec<ForecastRecord>>,
}

/// Loads and preprocesses the configured stream.
pub fn load_series(cfg: &ExperimentConfig) -> Result<TimeSeries> {
    let ts = match &cfg.data {
        DataSource::Csv { path, schema } => impute_missing(&parse_csv(path, schema)?)?,
        DataSource::Synthetic(s) => generate_synthetic_stream(s)?,
    };
    filter_low_counts(&ts, cfg.low_count_threshold)
}

fn loop_options(cfg: &ExperimentConfig) -> LoopOptions {
    LoopOptions {
        window: cfg.window,
        horizon: cfg.horizon,
        memory: cfg.memory,
        scale: cfg.normalization,
        features: match cfg.model {
            ModelKind::Mlp => cfg.features.clone(),
            ModelKind::Ar => None,
        },
    }
}

fn drive<F: Forecaster>(cfg: &ExperimentConfig, ts: &TimeSeries, f: &mut F) -> Result<Vec<ForecastRecord>> {
    let opts = loop_options(cfg);
    match cfg.mode {
        Mode::Online => run_online(ts, f, &opts),
        Mode::Offline => run_offline(ts, f, &opts, cfg.pretrain_days),
    }
}

/// One repetition with the given seed.
pub fn run_repetition(cfg: &ExperimentConfig, ts: &TimeSeries, seed: u64) -> Result<Vec<ForecastRecord>> {
    match cfg.model {
        ModelKind::Mlp => {
            let train = TrainConfig {
                seed,
                ..cfg.train.clone()
            };
            let opts = loop_options(cfg);
            let mut f = MlpForecaster::new(opts.input_dim(), &cfg.hidden, cfg.horizon, train)?;
            drive(cfg, ts, &mut f)
        }
        ModelKind::Ar => drive(cfg, ts, &mut ArForecaster::new(cfg.ar_fit_window)),
    }
}

fn notes(cfg: &ExperimentConfig) -> Vec<String> {
    let mut notes = Vec::new();
    if cfg.model == ModelKind::Ar {
        notes.push(format!(
            "ar(1) refit every day on the trailing {} counts; deterministic, so {} repetition(s) collapse to 1",
            cfg.ar_fit_window, cfg.repetitions
        ));
    }
    notes
}

/// Scores every repetition and aggregates them.
pub fn build_report(cfg: &ExperimentConfig, reps: &[Vec<ForecastRecord>]) -> Result<MetricsReport> {
    let scores = reps
        .iter()
        .map(|r| evaluate(r, &cfg.segments))
        .collect::<Result<Vec<_>>>()?;
    MetricsReport::from_repetitions(
        &scores,
        ReportMeta {
            config_hash: cfg.hash(),
            seeds: cfg.seeds(),
            window: cfg.lookback(),
            horizon: cfg.horizon,
            memory: cfg.memory,
            notes: notes(cfg),
        },
    )
}

/// Runs every repetition (in parallel) and writes the run directory
/// `<output>/<hash>`. On failure the directory holds a `FAILED` marker with
/// the error message.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let dir = cfg.run_dir();
    prepare_dir(&dir)?;
    write_atomic(&dir.join(SNAPSHOT_FILE), &cfg.snapshot())?;
    match execute(cfg, &dir) {
        Ok(outcome) => Ok(outcome),
        Err(e) => {
            let _ = fs::write(dir.join(FAILED_MARKER), format!("{e}\n"));
            Err(e)
        }
    }
}

fn execute(cfg: &ExperimentConfig, dir: &Path) -> Result<RunOutcome> {
    let ts = load_series(cfg)?;
    let records = cfg
        .seeds()
        .into_par_iter()
        .map(|seed| run_repetition(cfg, &ts, seed))
        .collect::<Result<Vec<_>>>()?;
    let report = build_report(cfg, &records)?;
    for (r, recs) in records.iter().enumerate() {
        write_atomic(&dir.join(predictions_file(r)), &predictions_csv(recs, cfg.horizon))?;
    }
    write_atomic(&dir.join(PLOTDATA_CSV), &plot_data(&records))?;
    write_atomic(&dir.join(METRICS_TXT), &report.to_table())?;
    write_atomic(&dir.join(METRICS_CSV), &report.to_csv())?;
    Ok(RunOutcome {
        dir: dir.to_path_buf(),
        report,
        records,
    })
}

/// Creates the run directory and removes artifacts left by an earlier run.
fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let ours = [FAILED_MARKER, SNAPSHOT_FILE, METRICS_CSV, METRICS_TXT, PLOTDATA_CSV].contains(&name)
            || (name.starts_with("predictions_rep") && name.ends_with(".csv"));
        if ours && path.is_file() {
            fs::remove_file(&path).map_err(|e| Error::io(&path, e))?;
        }
    }
    Ok(())
}

/// Writes through a temporary file so readers never see a partial artifact.
pub(crate) fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// `issue_date, pred_1..pred_D, real_1..real_D`; unrealized cells are empty.
pub fn predictions_csv(records: &[ForecastRecord], horizon: usize) -> String {
    let mut out = String::from("issue_date");
    for k in 1..=horizon {
        let _ = write!(out, ",pred_{k}");
    }
    for k in 1..=horizon {
        let _ = write!(out, ",real_{k}");
    }
    out.push('\n');
    for r in records {
        out.push_str(&r.issue_date.format("%Y-%m-%d").to_string());
        for p in &r.predicted {
            let _ = write!(out, ",{}", sig10(*p));
        }
        for v in &r.realized {
            match v {
                Some(v) => {
                    let _ = write!(out, ",{}", sig10(*v));
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

/// Reads a predictions file back into records. Target dates are the calendar
/// days following the issue date.
pub fn read_predictions(path: &Path) -> Result<Vec<ForecastRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| Error::Parse { row: 1, message: e.to_string() })?
        .clone();
    if header.len() < 3 || header.len() % 2 == 0 || &header[0] != "issue_date" {
        return Err(Error::Parse {
            row: 1,
            message: format!("{}: unexpected predictions header", path.display()),
        });
    }
    let horizon = (header.len() - 1) / 2;
    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::Parse { row: line, message: e.to_string() })?;
        let parse_err = |message: String| Error::Parse { row: line, message };
        let issue_date: NaiveDate = row[0]
            .parse()
            .map_err(|_| parse_err(format!("bad issue date `{}`", &row[0])))?;
        let num = |s: &str| s.parse::<f64>().map_err(|_| parse_err(format!("bad number `{s}`")));
        let predicted = (1..=horizon).map(|k| num(&row[k])).collect::<Result<Vec<_>>>()?;
        let realized = (horizon + 1..=2 * horizon)
            .map(|k| if row[k].is_empty() { Ok(None) } else { num(&row[k]).map(Some) })
            .collect::<Result<Vec<_>>>()?;
        let target_dates = (1..=horizon as u64)
            .map(|k| issue_date.checked_add_days(Days::new(k)).expect("date in range"))
            .collect();
        records.push(ForecastRecord {
            issue_day: records.len() + 1,
            issue_date,
            target_dates,
            predicted,
            realized,
        });
    }
    Ok(records)
}

/// One row per first-target date: the actual value (empty if beyond the
/// stream), then mean and population std of the horizon-1 forecast across
/// repetitions.
pub fn plot_data(reps: &[Vec<ForecastRecord>]) -> String {
    let mut out = String::from("date,actual,mean_prediction,std_prediction\n");
    let Some(first) = reps.first() else {
        return out;
    };
    for (i, r) in first.iter().enumerate() {
        let preds: Vec<f64> = reps.iter().map(|rep| rep[i].predicted[0]).collect();
        let n = preds.len() as f64;
        let mean = preds.iter().sum::<f64>() / n;
        let std = (preds.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / n).sqrt();
        let actual = r.realized[0].map(sig10).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{}", r.first_target(), actual, sig10(mean), sig10(std));
    }
    out
}

/// Recomputes the metrics of an existing run directory from its snapshot and
/// prediction files, and rewrites `metrics.csv` / `metrics.txt`.
pub fn report_run_dir(dir: &Path) -> Result<MetricsReport> {
    let snapshot = dir.join(SNAPSHOT_FILE);
    let text = fs::read_to_string(&snapshot).map_err(|e| Error::io(&snapshot, e))?;
    let cfg = ExperimentConfig::parse(&text, dir)?;
    let mut reps = Vec::new();
    for r in 0..cfg.effective_repetitions() {
        let path = dir.join(predictions_file(r));
        if !path.exists() {
            return Err(Error::Data(format!("{} is missing", path.display())));
        }
        reps.push(read_predictions(&path)?);
    }
    let report = build_report(&cfg, &reps)?;
    write_atomic(&dir.join(METRICS_TXT), &report.to_table())?;
    write_atomic(&dir.join(METRICS_CSV), &report.to_csv())?;
    Ok(report)
}
