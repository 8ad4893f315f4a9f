//! Sweeps over several experiment configurations.
//!
//! A grid file holds, one per line:
//!
//! ```text
//! base = experiment.cfg          # optional shared config, at most once
//! output = runs                  # optional output root for rows and summary
//! run = window=7; memory=30      # one row: base plus overrides
//! config = other.cfg             # one row: a complete config file
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evaluation::{MetricsReport, NORMAL, OVERALL, WAVES};
use crate::format::sig10;

use super::config::{base_dir, ConfigEntries, ExperimentConfig, OUTPUT_ROOT_ENV};
use super::run::{run_experiment, write_atomic};

pub const SUMMARY_CSV: &str = "summary.csv";
pub const SUMMARY_TXT: &str = "summary.txt";

const SUMMARY_SEGMENTS: [&str; 3] = [OVERALL, WAVES, NORMAL];

#[derive(Debug, Clone, PartialEq)]
enum RowSource {
    Overrides(Vec<(String, String)>),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
struct GridRow {
    label: String,
    source: RowSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    base: Option<PathBuf>,
    output: Option<PathBuf>,
    rows: Vec<GridRow>,
    dir: PathBuf,
}

impl GridSpec {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config("grid", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, base_dir(path))
    }

    pub fn parse(text: &str, dir: &Path) -> Result<Self> {
        let resolve = |p: &str| {
            let p = PathBuf::from(p);
            if p.is_absolute() {
                p
            } else {
                dir.join(p)
            }
        };
        let mut spec = GridSpec {
            base: None,
            output: None,
            rows: Vec::new(),
            dir: dir.to_path_buf(),
        };
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse { row: n + 1, message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected `key = value`, got `{line}`")))?;
            let value = value.trim();
            match key.trim() {
                "base" if spec.base.is_none() => spec.base = Some(resolve(value)),
                "output" if spec.output.is_none() => spec.output = Some(resolve(value)),
                "base" | "output" => return Err(Error::config(key.trim(), "given more than once in the grid")),
                "config" => spec.rows.push(GridRow {
                    label: value.to_string(),
                    source: RowSource::File(resolve(value)),
                }),
                "run" => {
                    let overrides = value
                        .split(';')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|kv| {
                            kv.split_once('=')
                                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                                .ok_or_else(|| parse_err(format!("override `{kv}` is not `key=value`")))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let label = overrides
                        .iter()
                        .map(|(k, v)| format!("{k}={v}"))
                        .collect::<Vec<_>>()
                        .join("; ");
                    spec.rows.push(GridRow {
                        label,
                        source: RowSource::Overrides(overrides),
                    });
                }
                other => return Err(parse_err(format!("unknown grid key `{other}`"))),
            }
        }
        if spec.rows.is_empty() {
            return Err(Error::config("grid", "no `run` or `config` rows"));
        }
        Ok(spec)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn row_config(&self, row: &GridRow) -> Result<ExperimentConfig> {
        let mut cfg = match &row.source {
            RowSource::File(path) => ExperimentConfig::load(path)?,
            RowSource::Overrides(overrides) => {
                let (mut entries, dir) = match &self.base {
                    Some(base) => {
                        let text = fs::read_to_string(base).map_err(|e| Error::io(base, e))?;
                        (ConfigEntries::parse(&text)?, base_dir(base).to_path_buf())
                    }
                    None => (ConfigEntries::default(), self.dir.clone()),
                };
                let mut replaced: Vec<&str> = Vec::new();
                for (k, v) in overrides {
                    // an override of a repeatable key replaces the base's list
                    if !replaced.contains(&k.as_str()) {
                        entries.clear(k);
                        replaced.push(k);
                    }
                    entries.set(k, v)?;
                }
                ExperimentConfig::from_entries(&entries, &dir)?
            }
        };
        if std::env::var_os(OUTPUT_ROOT_ENV).is_none() {
            if let Some(out) = &self.output {
                cfg.output = out.clone();
            }
        }
        Ok(cfg)
    }

    /// The grid's `output`, else the output root of the first valid row.
    fn summary_root(&self, row_roots: &[Option<PathBuf>]) -> PathBuf {
        std::env::var_os(OUTPUT_ROOT_ENV)
            .filter(|v| !v.is_empty())
            .map(PathBuf::from)
            .or_else(|| self.output.clone())
            .or_else(|| row_roots.iter().flatten().next().cloned())
            .unwrap_or_else(|| self.dir.join("runs"))
    }
}

/// Result of one grid row.
#[derive(Debug)]
pub struct GridRowOutcome {
    pub label: String,
    pub config_hash: Option<String>,
    pub result: std::result::Result<MetricsReport, Error>,
}

#[derive(Debug)]
pub struct GridOutcome {
    pub dir: PathBuf,
    pub rows: Vec<GridRowOutcome>,
}

impl GridOutcome {
    /// The first row error, if any row failed.
    pub fn first_error(&self) -> Option<&Error> {
        self.rows.iter().find_map(|r| r.result.as_ref().err())
    }
}

/// Runs every row (in parallel); a failing row is recorded and the rest
/// still run. Writes `summary.csv` and `summary.txt` under
/// `<output root>/grid-<hash>`.
pub fn run_grid(spec: &GridSpec) -> Result<GridOutcome> {
    let (rows, roots): (Vec<GridRowOutcome>, Vec<Option<PathBuf>>) = spec
        .rows
        .par_iter()
        .map(|row| match spec.row_config(row) {
            Err(e) => (
                GridRowOutcome {
                    label: row.label.clone(),
                    config_hash: None,
                    result: Err(e),
                },
                None,
            ),
            Ok(cfg) => (
                GridRowOutcome {
                    label: row.label.clone(),
                    config_hash: Some(cfg.hash()),
                    result: run_experiment(&cfg).map(|o| o.report),
                },
                Some(cfg.output),
            ),
        })
        .unzip();

    let mut hasher = Sha256::new();
    for r in &rows {
        hasher.update(r.label.as_bytes());
        hasher.update(r.config_hash.as_deref().unwrap_or("-").as_bytes());
        hasher.update(b"\n");
    }
    let hash: String = hasher.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect();
    let dir = spec.summary_root(&roots).join(format!("grid-{hash}"));
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write_atomic(&dir.join(SUMMARY_TXT), &summary_table(&rows))?;
    write_atomic(&dir.join(SUMMARY_CSV), &summary_csv(&rows))?;
    Ok(GridOutcome { dir, rows })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One row per grid row; MAE/MAPE mean and std for overall, waves and normal.
pub fn summary_csv(rows: &[GridRowOutcome]) -> String {
    let mut out = String::from("run,status,config_hash");
    for seg in SUMMARY_SEGMENTS {
        let _ = write!(out, ",{seg}_mae,{seg}_mae_std,{seg}_mape,{seg}_mape_std");
    }
    out.push_str(",error\n");
    for r in rows {
        let status = if r.result.is_ok() { "ok" } else { "failed" };
        let _ = write!(
            out,
            "{},{status},{}",
            csv_field(&r.label),
            r.config_hash.as_deref().unwrap_or("")
        );
        for seg in SUMMARY_SEGMENTS {
            match r.result.as_ref().ok().and_then(|rep| rep.get(seg)) {
                Some(s) => {
                    let _ = write!(
                        out,
                        ",{},{},{},{}",
                        sig10(s.mae_mean),
                        sig10(s.mae_std),
                        sig10(s.mape_mean),
                        sig10(s.mape_std)
                    );
                }
                None => out.push_str(",,,,"),
            }
        }
        let err = r.result.as_ref().err().map(|e| e.to_string()).unwrap_or_default();
        let _ = writeln!(out, ",{}", csv_field(&err));
    }
    out
}

/// Aligned `mean (std)` table, one line per grid row.
pub fn summary_table(rows: &[GridRowOutcome]) -> String {
    let mut header = vec!["Run".to_string()];
    for seg in SUMMARY_SEGMENTS {
        header.push(format!("{seg} MAE"));
        header.push(format!("{seg} MAPE (%)"));
    }
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut cells = vec![r.label.clone()];
            for seg in SUMMARY_SEGMENTS {
                match &r.result {
                    Ok(rep) => match rep.get(seg) {
                        Some(s) => {
                            cells.push(format!("{:.1} ({:.1})", s.mae_mean, s.mae_std));
                            cells.push(format!("{:.1} ({:.1})", s.mape_mean, s.mape_std));
                        }
                        None => cells.extend(["-".to_string(), "-".to_string()]),
                    },
                    Err(_) => cells.extend(["failed".to_string(), "failed".to_string()]),
                }
            }
            cells
        })
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|c| body.iter().chain([&header]).map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let render = |cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (s, w))| if c == 0 { format!("{s:<w$}") } else { format!("{s:>w$}") })
            .collect();
        format!("{}\n", parts.join(" | "))
    };
    let mut out = render(&header);
    out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("-+-"));
    out.push('\n');
    for cells in &body {
        out.push_str(&render(cells));
    }
    for r in rows {
        if let Err(e) = &r.result {
            let _ = writeln!(out, "{}: {e}", r.label);
        }
    }
    out
}
