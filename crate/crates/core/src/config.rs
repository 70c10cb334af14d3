//! Run configuration: a flat `key = value` text format.
//!
//! Blank lines and lines starting with `#` are ignored. Every key has a
//! default, so an empty file is valid. Command-line flags go through the same
//! [`RunConfig::set`] after the file is read, so they override it.
//!
//! | key | default |
//! |---|---|
//! | `input` | (none) comma-separated DICOM files or directories |
//! | `out` | `out` |
//! | `seed` | (none) required by build, train, explain and synth |
//! | `cohort` | `auto` (largest eligible cohort) or a cohort slug |
//! | `min_cohort` | 50 |
//! | `test_fraction` | 0.2 |
//! | `correlation.pearson`, `correlation.spearman`, `correlation.single` | 0.7, 0.7, 0.9 |
//! | `models` | `LR,DT,RF,GB,MLP` |
//! | `cv.outer`, `cv.inner` | 10, 3 |
//! | `grid.<kind>.<param>` | built-in grid, e.g. `grid.gb.stages = 100 300` |
//! | `explain.background`, `explain.coalitions` | 100, 2048 |
//! | `explain.trend_threshold`, `explain.top_k` | 0.3, 5 |
//! | `explain.rows` | `test` or `all` |
//! | `synth.n`, `synth.label_noise`, `synth.t1_ms`, `synth.snr_scale`, `synth.decoys` | 400, 0.1, 900, 1, 4 |
//! | `synth.<parameter>` | range as `lo hi`, e.g. `synth.tr_ms = 300 1200` |

use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::dataset::CorrelationThresholds;
use crate::learners::{HyperGrid, ModelKind};
use crate::shap::SummaryOptions;
use crate::synth::{PhysicsConfig, Range};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {reason}")]
    BadValue { key: String, reason: String },
    #[error("a seed is required for this command (set `seed` or pass --seed)")]
    MissingSeed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExplainRows {
    Test,
    All,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplainSettings {
    pub background: usize,
    pub coalitions: usize,
    pub summary: SummaryOptions,
    pub rows: ExplainRows,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: Vec<PathBuf>,
    pub out: PathBuf,
    pub seed: Option<u64>,
    /// Cohort slug to model; `None` picks the largest eligible cohort.
    pub cohort: Option<String>,
    pub min_cohort: usize,
    pub test_fraction: f64,
    pub correlation: CorrelationThresholds,
    pub models: Vec<ModelKind>,
    /// One grid per kind, in [`ModelKind::ALL`] order.
    pub grids: Vec<HyperGrid>,
    pub cv_outer: usize,
    pub cv_inner: usize,
    pub explain: ExplainSettings,
    pub synth_n: usize,
    pub physics: PhysicsConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: Vec::new(),
            out: PathBuf::from("out"),
            seed: None,
            cohort: None,
            min_cohort: 50,
            test_fraction: 0.2,
            correlation: CorrelationThresholds::default(),
            models: ModelKind::ALL.to_vec(),
            grids: ModelKind::ALL.iter().map(|&k| HyperGrid::default_for(k)).collect(),
            cv_outer: 10,
            cv_inner: 3,
            explain: ExplainSettings {
                background: 100,
                coalitions: 2048,
                summary: SummaryOptions::default(),
                rows: ExplainRows::Test,
            },
            synth_n: 400,
            physics: PhysicsConfig::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        reason: format!("cannot parse {value:?}"),
    })
}

fn bad(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn threshold(key: &str, value: &str) -> Result<f64, ConfigError> {
    let t: f64 = parse(key, value)?;
    if t > 0.0 && t <= 1.0 {
        Ok(t)
    } else {
        Err(bad(key, "must lie in (0, 1]"))
    }
}

fn range(key: &str, value: &str) -> Result<Range, ConfigError> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    match parts.as_slice() {
        [lo, hi] => Ok(Range::new(parse(key, lo)?, parse(key, hi)?)),
        [v] => {
            let v = parse(key, v)?;
            Ok(Range::new(v, v))
        }
        _ => Err(bad(key, "expected `lo hi`")),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "input" => {
                self.input = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(PathBuf::from)
                    .collect()
            }
            "out" => self.out = PathBuf::from(value),
            "seed" => self.seed = Some(parse(key, value)?),
            "cohort" => self.cohort = (value != "auto").then(|| value.to_string()),
            "min_cohort" => self.min_cohort = parse(key, value)?,
            "test_fraction" => {
                let f: f64 = parse(key, value)?;
                if !(f > 0.0 && f < 1.0) {
                    return Err(bad(key, "must lie in (0, 1)"));
                }
                self.test_fraction = f;
            }
            "correlation.pearson" => self.correlation.pearson = threshold(key, value)?,
            "correlation.spearman" => self.correlation.spearman = threshold(key, value)?,
            "correlation.single" => self.correlation.single = threshold(key, value)?,
            "models" => {
                let kinds: Vec<ModelKind> = value
                    .split(',')
                    .map(|s| ModelKind::parse(s.trim()).ok_or_else(|| bad(key, format!("unknown model {s:?}"))))
                    .collect::<Result<_, _>>()?;
                if kinds.is_empty() {
                    return Err(bad(key, "empty model list"));
                }
                self.models = ModelKind::ALL.into_iter().filter(|k| kinds.contains(k)).collect();
            }
            "cv.outer" | "cv.inner" => {
                let k: usize = parse(key, value)?;
                if k < 2 {
                    return Err(bad(key, "need at least 2 folds"));
                }
                if key == "cv.outer" {
                    self.cv_outer = k
                } else {
                    self.cv_inner = k
                }
            }
            "explain.background" => self.explain.background = parse(key, value)?,
            "explain.coalitions" => self.explain.coalitions = parse(key, value)?,
            "explain.trend_threshold" => self.explain.summary.trend_threshold = threshold(key, value)?,
            "explain.top_k" => self.explain.summary.top_k = parse(key, value)?,
            "explain.rows" => {
                self.explain.rows = match value {
                    "test" => ExplainRows::Test,
                    "all" => ExplainRows::All,
                    _ => return Err(bad(key, "expected `test` or `all`")),
                }
            }
            "synth.n" => self.synth_n = parse(key, value)?,
            "synth.label_noise" => self.physics.label_noise = parse(key, value)?,
            "synth.t1_ms" => self.physics.t1_ms = parse(key, value)?,
            "synth.snr_scale" => self.physics.snr_scale = parse(key, value)?,
            "synth.decoys" => self.physics.decoys = parse(key, value)?,
            _ => return self.set_nested(key, value),
        }
        Ok(())
    }

    fn set_nested(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if let Some(rest) = key.strip_prefix("grid.") {
            let (kind, param) = rest.split_once('.').ok_or_else(|| ConfigError::UnknownKey(key.into()))?;
            let kind = ModelKind::parse(kind).ok_or_else(|| ConfigError::UnknownKey(key.into()))?;
            let slot = ModelKind::ALL.iter().position(|&k| k == kind).expect("kind listed");
            return self.grids[slot].set(param, value).map_err(|e| bad(key, e.to_string()));
        }
        if let Some(param) = key.strip_prefix("synth.") {
            let p = &mut self.physics;
            let slot = match param {
                "tr_ms" => &mut p.tr_ms,
                "te_ms" => &mut p.te_ms,
                "nex" => &mut p.nex,
                "percent_sampling" => &mut p.percent_sampling,
                "percent_phase_fov" => &mut p.percent_phase_fov,
                "fov_mm" => &mut p.fov_mm,
                "slice_thickness_mm" => &mut p.slice_thickness_mm,
                "rows" => &mut p.rows,
                "cols" => &mut p.cols,
                _ => return Err(ConfigError::UnknownKey(key.into())),
            };
            *slot = range(key, value)?;
            return Ok(());
        }
        Err(ConfigError::UnknownKey(key.into()))
    }

    pub fn grid(&self, kind: ModelKind) -> &HyperGrid {
        let slot = ModelKind::ALL.iter().position(|&k| k == kind).expect("kind listed");
        &self.grids[slot]
    }

    pub fn require_seed(&self) -> Result<u64, ConfigError> {
        self.seed.ok_or(ConfigError::MissingSeed)
    }
}
