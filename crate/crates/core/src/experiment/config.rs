//! Flat `key = value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored; a value may be wrapped in double
//! quotes. `feature`, `segment` and `synthetic_wave` may repeat, every other
//! key may appear once. Relative paths resolve against the config file's
//! directory.

use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evaluation::{DateRange, SegmentSpec};
use crate::features::{default_covariate_spec, FeatureItem, FeatureSpec};
use crate::ingest::{five_wave_preset, CsvSchema, DateFormat, ScaleMode, SyntheticConfig, WaveSpec};
use crate::mlp::TrainConfig;

/// Overrides the configured output directory when set.
pub const OUTPUT_ROOT_ENV: &str = "ADAPTCAST_OUTPUT_ROOT";

const REPEATABLE: [&str; 3] = ["feature", "segment", "synthetic_wave"];

const KNOWN_KEYS: [&str; 37] = [
    "data",
    "date_format",
    "date_column",
    "value_column",
    "covariates",
    "low_count_threshold",
    "normalization",
    "synthetic_preset",
    "synthetic_start",
    "synthetic_days",
    "synthetic_baseline",
    "synthetic_noise",
    "synthetic_seed",
    "synthetic_wave",
    "window",
    "horizon",
    "memory",
    "mode",
    "model",
    "feature",
    "feature_preset",
    "feature_window",
    "hidden",
    "learning_rate",
    "beta1",
    "beta2",
    "epsilon",
    "leaky_slope",
    "epochs",
    "weight_decay",
    "orient_outputs",
    "repetitions",
    "seed",
    "output",
    "pretrain_days",
    "ar_fit_window",
    "segment",
];

/// Raw entries in file order, before interpretation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigEntries {
    entries: Vec<(String, String)>,
}

impl ConfigEntries {
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                row: n + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            out.push(key.trim(), unquote(value.trim()))?;
        }
        Ok(out)
    }

    /// Adds an entry; a non-repeatable key replaces its earlier value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        check_key(key)?;
        if !REPEATABLE.contains(&key) {
            self.entries.retain(|(k, _)| k != key);
        }
        self.entries.push((key.to_string(), value.to_string()));
        Ok(())
    }

    /// Drops every entry for `key`.
    pub fn clear(&mut self, key: &str) {
        self.entries.retain(|(k, _)| k != key);
    }

    fn push(&mut self, key: &str, value: String) -> Result<()> {
        check_key(key)?;
        if !REPEATABLE.contains(&key) && self.entries.iter().any(|(k, _)| k == key) {
            return Err(Error::config(key, "given more than once"));
        }
        self.entries.push((key.to_string(), value));
        Ok(())
    }

    fn one(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn all(&self, key: &str) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .collect()
    }

    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        match self.one(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|e| Error::config(key, format!("cannot parse `{v}`: {e}"))),
        }
    }
}

fn unquote(v: &str) -> String {
    v.strip_prefix('"')
        .and_then(|s| s.strip_suffix('"'))
        .unwrap_or(v)
        .to_string()
}

fn check_key(key: &str) -> Result<()> {
    if KNOWN_KEYS.contains(&key) {
        Ok(())
    } else {
        Err(Error::config(key, "unknown key"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Csv { path: PathBuf, schema: CsvSchema },
    Synthetic(SyntheticConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Online,
    Offline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Mlp,
    Ar,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "online" => Ok(Mode::Online),
            "offline" => Ok(Mode::Offline),
            _ => Err("expected `online` or `offline`".into()),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Online => "online",
            Mode::Offline => "offline",
        })
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "mlp" => Ok(ModelKind::Mlp),
            "ar" | "arima" => Ok(ModelKind::Ar),
            _ => Err("expected `mlp` or `ar`".into()),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Mlp => "mlp",
            ModelKind::Ar => "ar",
        })
    }
}

/// A fully resolved and validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub low_count_threshold: f64,
    pub normalization: ScaleMode,
    pub window: usize,
    pub horizon: usize,
    pub memory: usize,
    pub mode: Mode,
    pub model: ModelKind,
    pub features: Option<FeatureSpec>,
    pub hidden: Vec<usize>,
    /// Training settings; the seed is replaced per repetition.
    pub train: TrainConfig,
    pub repetitions: usize,
    pub seed: u64,
    /// Output root; each run writes into `<output>/<config hash>`.
    pub output: PathBuf,
    pub pretrain_days: usize,
    pub ar_fit_window: usize,
    pub segments: SegmentSpec,
    /// Non-fatal remarks, e.g. settings the chosen model ignores.
    pub warnings: Vec<String>,
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_entries(&ConfigEntries::parse(&text)?, base_dir(path))
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        Self::from_entries(&ConfigEntries::parse(text)?, base_dir)
    }

    pub fn from_entries(e: &ConfigEntries, base_dir: &Path) -> Result<Self> {
        let resolve = |p: &str| {
            let p = PathBuf::from(p);
            if p.is_absolute() {
                p
            } else {
                base_dir.join(p)
            }
        };
        let data = match e.one("data") {
            None => return Err(Error::config("data", "missing; give a CSV path or `synthetic`")),
            Some("synthetic") => DataSource::Synthetic(synthetic_from(e)?),
            Some(path) => DataSource::Csv {
                path: resolve(path),
                schema: CsvSchema {
                    date_column: e.get("date_column", "date".to_string())?,
                    value_column: e.get("value_column", "cases".to_string())?,
                    covariates: e.one("covariates").map(|v| {
                        v.split(',')
                            .map(str::trim)
                            .filter(|c| !c.is_empty())
                            .map(String::from)
                            .collect()
                    }),
                    date_format: e.get("date_format", DateFormat::Iso)?,
                },
            },
        };

        let features = features_from(e)?;
        let model: ModelKind = e.get("model", ModelKind::Mlp)?;
        let mut warnings = Vec::new();
        if model == ModelKind::Ar {
            for key in ["memory", "hidden", "learning_rate", "epochs", "feature", "feature_preset"] {
                if e.one(key).is_some() {
                    warnings.push(format!("`{key}` is ignored by the ar model"));
                }
            }
        }

        let defaults = TrainConfig::default();
        let train = TrainConfig {
            learning_rate: e.get("learning_rate", defaults.learning_rate)?,
            beta1: e.get("beta1", defaults.beta1)?,
            beta2: e.get("beta2", defaults.beta2)?,
            epsilon: e.get("epsilon", defaults.epsilon)?,
            leaky_slope: e.get("leaky_slope", defaults.leaky_slope)?,
            epochs_per_step: e.get("epochs", defaults.epochs_per_step)?,
            weight_decay: e.get("weight_decay", defaults.weight_decay)?,
            orient_outputs: e.get("orient_outputs", defaults.orient_outputs)?,
            seed: 0,
        };

        let hidden = match e.one("hidden") {
            None => vec![64],
            Some(v) if v.trim().is_empty() || v.trim() == "none" => Vec::new(),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::config("hidden", format!("`{v}` is not a comma-separated list of sizes")))?,
        };

        let segments = match e.all("segment") {
            s if s.is_empty() => SegmentSpec::default(),
            s => SegmentSpec::new(
                s.iter()
                    .map(|v| v.parse::<DateRange>().map_err(|m| Error::config("segment", m)))
                    .collect::<Result<_>>()?,
            )?,
        };

        let output = std::env::var_os(OUTPUT_ROOT_ENV)
            .filter(|v| !v.is_empty())
            .map(PathBuf::from)
            .unwrap_or_else(|| resolve(e.one("output").unwrap_or("runs")));

        let cfg = Self {
            data,
            low_count_threshold: e.get("low_count_threshold", 100.0)?,
            normalization: e.get("normalization", ScaleMode::RunningMax)?,
            window: e.get("window", 7)?,
            horizon: e.get("horizon", 1)?,
            memory: e.get("memory", 1)?,
            mode: e.get("mode", Mode::Online)?,
            model,
            features,
            hidden,
            train,
            repetitions: e.get("repetitions", 10)?,
            seed: e.get("seed", 0)?,
            output,
            pretrain_days: e.get("pretrain_days", 30)?,
            ar_fit_window: e.get("ar_fit_window", 30)?,
            segments,
            warnings,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("window", self.window),
            ("horizon", self.horizon),
            ("memory", self.memory),
            ("repetitions", self.repetitions),
        ] {
            if v == 0 {
                return Err(Error::config(key, "must be at least 1"));
            }
        }
        if !(self.low_count_threshold.is_finite() && self.low_count_threshold >= 0.0) {
            return Err(Error::config("low_count_threshold", "must be a non-negative number"));
        }
        if let DataSource::Synthetic(s) = &self.data {
            s.validate()?;
        }
        if let Some(f) = &self.features {
            f.validate()?;
        }
        if self.hidden.contains(&0) {
            return Err(Error::config("hidden", "layer sizes must be at least 1"));
        }
        self.train.validate()?;
        if self.mode == Mode::Offline && self.pretrain_days < self.lookback() + self.horizon {
            return Err(Error::config(
                "pretrain_days",
                format!("must be at least lookback + horizon = {}", self.lookback() + self.horizon),
            ));
        }
        if self.model == ModelKind::Ar && self.ar_fit_window < crate::arima::MIN_FIT_POINTS {
            return Err(Error::config(
                "ar_fit_window",
                format!("must be at least {}", crate::arima::MIN_FIT_POINTS),
            ));
        }
        self.segments.validate()
    }

    /// Days of history behind one model input.
    pub fn lookback(&self) -> usize {
        match (&self.features, self.model) {
            (Some(f), ModelKind::Mlp) => f.window,
            _ => self.window,
        }
    }

    /// Repetitions actually executed: the AR baseline is deterministic, so one suffices.
    pub fn effective_repetitions(&self) -> usize {
        match self.model {
            ModelKind::Mlp => self.repetitions,
            ModelKind::Ar => 1,
        }
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.effective_repetitions() as u64).map(|r| self.seed + r).collect()
    }

    /// Canonical text of every setting that affects results, one `key = value`
    /// per line in a fixed order. Independent of comments and key order in
    /// the source file; the output location is left out.
    pub fn snapshot(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: &dyn fmt::Display| {
            let _ = writeln!(s, "{k} = {v}");
        };
        match &self.data {
            DataSource::Csv { path, schema } => {
                line("data", &path.display());
                line("date_format", &schema.date_format);
                line("date_column", &schema.date_column);
                line("value_column", &schema.value_column);
                if let Some(c) = &schema.covariates {
                    line("covariates", &c.join(","));
                }
            }
            DataSource::Synthetic(c) => {
                line("data", &"synthetic");
                line("synthetic_start", &c.start_date);
                line("synthetic_days", &c.days);
                line("synthetic_baseline", &c.baseline);
                line("synthetic_noise", &c.noise);
                line("synthetic_seed", &c.seed);
                for w in &c.waves {
                    line("synthetic_wave", w);
                }
            }
        }
        line("low_count_threshold", &self.low_count_threshold);
        line("normalization", &self.normalization);
        line("window", &self.window);
        line("horizon", &self.horizon);
        line("memory", &self.memory);
        line("mode", &self.mode);
        line("model", &self.model);
        if let Some(f) = &self.features {
            line("feature_window", &f.window);
            for item in &f.items {
                line("feature", item);
            }
        }
        let hidden: Vec<String> = self.hidden.iter().map(usize::to_string).collect();
        line("hidden", &hidden.join(","));
        line("learning_rate", &self.train.learning_rate);
        line("beta1", &self.train.beta1);
        line("beta2", &self.train.beta2);
        line("epsilon", &self.train.epsilon);
        line("leaky_slope", &self.train.leaky_slope);
        line("epochs", &self.train.epochs_per_step);
        line("weight_decay", &self.train.weight_decay);
        line("orient_outputs", &self.train.orient_outputs);
        line("repetitions", &self.repetitions);
        line("seed", &self.seed);
        line("pretrain_days", &self.pretrain_days);
        line("ar_fit_window", &self.ar_fit_window);
        for w in &self.segments.waves {
            line("segment", w);
        }
        s
    }

    /// First 16 hex digits of the SHA-256 of the snapshot.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.snapshot().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn run_dir(&self) -> PathBuf {
        self.output.join(self.hash())
    }
}

pub(crate) fn base_dir(path: &Path) -> &Path {
    path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."))
}

fn synthetic_from(e: &ConfigEntries) -> Result<SyntheticConfig> {
    let mut cfg = match e.one("synthetic_preset").unwrap_or("five-wave") {
        "five-wave" => five_wave_preset(0.05, 0),
        "none" => SyntheticConfig {
            waves: Vec::new(),
            ..five_wave_preset(0.05, 0)
        },
        other => {
            return Err(Error::config(
                "synthetic_preset",
                format!("unknown preset `{other}`; expected `five-wave` or `none`"),
            ))
        }
    };
    cfg.start_date = e.get::<NaiveDate>("synthetic_start", cfg.start_date)?;
    cfg.days = e.get("synthetic_days", cfg.days)?;
    cfg.baseline = e.get("synthetic_baseline", cfg.baseline)?;
    cfg.noise = e.get("synthetic_noise", cfg.noise)?;
    cfg.seed = e.get("synthetic_seed", cfg.seed)?;
    let waves = e.all("synthetic_wave");
    if !waves.is_empty() {
        cfg.waves = waves
            .iter()
            .map(|w| w.parse::<WaveSpec>().map_err(|m| Error::config("synthetic_wave", m)))
            .collect::<Result<_>>()?;
    }
    Ok(cfg)
}

fn features_from(e: &ConfigEntries) -> Result<Option<FeatureSpec>> {
    let items = e.all("feature");
    let preset = e.one("feature_preset");
    let mut spec = match (preset, items.is_empty()) {
        (None, true) => return Ok(None),
        (Some("covariates"), true) => default_covariate_spec(),
        (None, false) => FeatureSpec {
            items: items
                .iter()
                .map(|v| v.parse::<FeatureItem>().map_err(|m| Error::config("feature", m)))
                .collect::<Result<_>>()?,
            window: 14,
        },
        (Some("covariates"), false) => {
            return Err(Error::config("feature", "give either `feature_preset` or `feature` lines, not both"))
        }
        (Some(other), _) => {
            return Err(Error::config(
                "feature_preset",
                format!("unknown preset `{other}`; expected `covariates`"),
            ))
        }
    };
    spec.window = e.get("feature_window", spec.window)?;
    Ok(Some(spec))
}
