//! `adaptcast` command line: run experiments, parameter grids, synthetic data
//! export and metric reports.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric error.

use std::path::PathBuf;
use std::process::ExitCode;

use adaptcast::experiment::{
    report_run_dir, run_experiment, run_grid, synth_command, ExperimentConfig, GridSpec, SUMMARY_TXT,
};
use adaptcast::ingest::{five_wave_preset, SyntheticConfig, WaveSpec};
use adaptcast::Error;
use chrono::NaiveDate;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "adaptcast", version, about = "Adaptive case-count forecasting experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a config file.
    Run { config: PathBuf },
    /// Run every row of a grid file and write a summary.
    Grid { grid: PathBuf },
    /// Write a synthetic case stream as CSV.
    Synth(SynthArgs),
    /// Recompute the metrics of a finished run directory.
    Report { run_dir: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// Five waves over 724 days starting 2020-10-15.
    FiveWave,
    /// No waves; use --wave to add some.
    None,
}

#[derive(clap::Args)]
struct SynthArgs {
    /// Output CSV path.
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value = "five-wave")]
    preset: Preset,
    /// Wave as start:peak:end:height (day offsets); repeatable, replaces the preset's waves.
    #[arg(long = "wave")]
    waves: Vec<WaveSpec>,
    #[arg(long)]
    days: Option<usize>,
    /// First date, YYYY-MM-DD.
    #[arg(long)]
    start: Option<NaiveDate>,
    #[arg(long)]
    baseline: Option<f64>,
    /// Multiplicative noise standard deviation.
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SynthArgs {
    fn config(&self) -> SyntheticConfig {
        let mut cfg = five_wave_preset(self.noise, self.seed);
        if matches!(self.preset, Preset::None) {
            cfg.waves.clear();
        }
        if !self.waves.is_empty() {
            cfg.waves = self.waves.clone();
        }
        cfg.days = self.days.unwrap_or(cfg.days);
        cfg.start_date = self.start.unwrap_or(cfg.start_date);
        cfg.baseline = self.baseline.unwrap_or(cfg.baseline);
        cfg
    }
}

/// Returns the exit code for runs that finish with recorded failures.
fn execute(command: Command) -> Result<u8, Error> {
    match command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            for w in &cfg.warnings {
                eprintln!("warning: {w}");
            }
            let out = run_experiment(&cfg)?;
            print!("{}", out.report.to_table());
            println!("\nwrote {}", out.dir.display());
        }
        Command::Grid { grid } => {
            let spec = GridSpec::load(&grid)?;
            let out = run_grid(&spec)?;
            let table = std::fs::read_to_string(out.dir.join(SUMMARY_TXT)).unwrap_or_default();
            print!("{table}");
            println!("\nwrote {}", out.dir.display());
            if let Some(e) = out.first_error() {
                eprintln!("error: at least one grid row failed; first failure: {e}");
                return Ok(e.exit_code() as u8);
            }
        }
        Command::Synth(args) => {
            let n = synth_command(&args.config(), &args.output)?;
            println!("wrote {n} days to {}", args.output.display());
        }
        Command::Report { run_dir } => {
            let report = report_run_dir(&run_dir)?;
            print!("{}", report.to_table());
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
