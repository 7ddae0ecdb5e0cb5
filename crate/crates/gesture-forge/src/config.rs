//! Run configuration: defaults, key=value config files, and precedence.
//!
//! Precedence is CLI flag > config file > built-in default. The config
//! file format is one `key=value` pair per line; blank lines and lines
//! starting with `#` are skipped. The `GESTURE_FORGE_THREADS`
//! environment variable overrides the worker count from any source.

use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

use crate::events::DetectionParams;
use crate::ingest::{DEFAULT_CONFIDENCE_FLOOR, DEFAULT_MIN_VALID_FRACTION};
use crate::predict::{Mode, DEFAULT_RESPONSE_WINDOW};

/// Name of the environment variable overriding the worker count.
pub const THREADS_ENV_VAR: &str = "GESTURE_FORGE_THREADS";

/// Errors from config-file parsing and validation.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config line {line}: expected key=value, got '{text}'")]
    BadLine { line: usize, text: String },
    #[error("config key '{key}': cannot parse '{value}': {reason}")]
    BadValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("unknown config key '{0}'")]
    UnknownKey(String),
    #[error("{0}")]
    OutOfRange(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Which evaluation modes to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeSelection {
    Sd,
    Si,
    Both,
}

impl ModeSelection {
    /// The modes to evaluate, in report order.
    pub fn modes(self) -> Vec<Mode> {
        match self {
            ModeSelection::Sd => vec![Mode::Sd],
            ModeSelection::Si => vec![Mode::Si],
            ModeSelection::Both => vec![Mode::Sd, Mode::Si],
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "sd" => Some(ModeSelection::Sd),
            "si" => Some(ModeSelection::Si),
            "both" => Some(ModeSelection::Both),
            _ => None,
        }
    }
}

/// Fully resolved settings for a pipeline run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub traces_dir: PathBuf,
    pub schedule_path: PathBuf,
    pub report_out: Option<PathBuf>,
    pub summary_out: Option<PathBuf>,
    pub mode: ModeSelection,
    pub response_window: f64,
    pub confidence_floor: f64,
    pub min_valid_fraction: f64,
    pub detection: DetectionParams,
    pub damping: f64,
    /// Exemplar preference; None means the median off-diagonal
    /// similarity.
    pub preference: Option<f64>,
    pub max_iter: usize,
    pub convergence_iter: usize,
    pub topk_list: Vec<usize>,
    /// Worker count; 0 picks the runtime default. Runtime-only: never
    /// echoed into reports so results stay byte-identical across worker
    /// counts.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            traces_dir: PathBuf::new(),
            schedule_path: PathBuf::new(),
            report_out: None,
            summary_out: None,
            mode: ModeSelection::Sd,
            response_window: DEFAULT_RESPONSE_WINDOW,
            confidence_floor: DEFAULT_CONFIDENCE_FLOOR,
            min_valid_fraction: DEFAULT_MIN_VALID_FRACTION,
            detection: DetectionParams::default(),
            damping: 0.5,
            preference: None,
            max_iter: 200,
            convergence_iter: 15,
            topk_list: vec![2, 10],
            threads: 0,
        }
    }
}

impl RunConfig {
    /// Check numeric ranges before any processing starts.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.5..1.0).contains(&self.damping) {
            return Err(ConfigError::OutOfRange(format!(
                "damping must be in [0.5, 1.0), got {}",
                self.damping
            )));
        }
        if self.response_window <= 0.0 {
            return Err(ConfigError::OutOfRange(format!(
                "response window must be positive, got {}",
                self.response_window
            )));
        }
        if !(0.0..=1.0).contains(&self.confidence_floor) {
            return Err(ConfigError::OutOfRange(format!(
                "confidence floor must be in [0, 1], got {}",
                self.confidence_floor
            )));
        }
        if !(0.0..=1.0).contains(&self.min_valid_fraction) {
            return Err(ConfigError::OutOfRange(format!(
                "min valid fraction must be in [0, 1], got {}",
                self.min_valid_fraction
            )));
        }
        if self.detection.smoothing_window % 2 == 0 || self.detection.smoothing_window == 0 {
            return Err(ConfigError::OutOfRange(format!(
                "smoothing window must be odd, got {}",
                self.detection.smoothing_window
            )));
        }
        if self.max_iter == 0 {
            return Err(ConfigError::OutOfRange("max_iter must be >= 1".into()));
        }
        Ok(())
    }

    /// Worker count after applying the environment override.
    pub fn effective_threads(&self) -> usize {
        std::env::var(THREADS_ENV_VAR)
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(self.threads)
    }
}

/// Values read from a config file; `None` means "not set here".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PartialConfig {
    pub traces_dir: Option<PathBuf>,
    pub schedule_path: Option<PathBuf>,
    pub report_out: Option<PathBuf>,
    pub summary_out: Option<PathBuf>,
    pub mode: Option<ModeSelection>,
    pub response_window: Option<f64>,
    pub confidence_floor: Option<f64>,
    pub min_valid_fraction: Option<f64>,
    pub activation_threshold: Option<f64>,
    pub min_duration_frames: Option<usize>,
    pub smoothing_window: Option<usize>,
    pub damping: Option<f64>,
    pub preference: Option<f64>,
    pub max_iter: Option<usize>,
    pub convergence_iter: Option<usize>,
    pub topk_list: Option<Vec<usize>>,
    pub threads: Option<usize>,
}

impl PartialConfig {
    /// Lay these values over `config`, leaving unset keys alone.
    pub fn apply_to(&self, config: &mut RunConfig) {
        macro_rules! set {
            ($field:ident) => {
                if let Some(v) = &self.$field {
                    config.$field = v.clone();
                }
            };
        }
        set!(traces_dir);
        set!(schedule_path);
        set!(mode);
        set!(response_window);
        set!(confidence_floor);
        set!(min_valid_fraction);
        set!(damping);
        set!(max_iter);
        set!(convergence_iter);
        set!(topk_list);
        set!(threads);
        if let Some(v) = &self.report_out {
            config.report_out = Some(v.clone());
        }
        if let Some(v) = &self.summary_out {
            config.summary_out = Some(v.clone());
        }
        if let Some(v) = self.preference {
            config.preference = Some(v);
        }
        if let Some(v) = self.activation_threshold {
            config.detection.activation_threshold = v;
        }
        if let Some(v) = self.min_duration_frames {
            config.detection.min_duration_frames = v;
        }
        if let Some(v) = self.smoothing_window {
            config.detection.smoothing_window = v;
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::BadValue {
        key: key.into(),
        value: value.into(),
        reason: e.to_string(),
    })
}

/// Parse comma-separated Top-k cutoffs such as `2,10,20`.
pub fn parse_topk_list(text: &str) -> Result<Vec<usize>, ConfigError> {
    text.split(',')
        .map(|part| parse_num("topk_list", part.trim()))
        .collect()
}

/// Parse a `key=value` config file body.
pub fn parse_config_text(text: &str) -> Result<PartialConfig, ConfigError> {
    let mut partial = PartialConfig::default();
    for (number, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::BadLine {
                line: number + 1,
                text: line.into(),
            });
        };
        let key = key.trim();
        let value = value.trim();
        match key {
            "traces" => partial.traces_dir = Some(PathBuf::from(value)),
            "schedule" => partial.schedule_path = Some(PathBuf::from(value)),
            "report_out" => partial.report_out = Some(PathBuf::from(value)),
            "summary_out" => partial.summary_out = Some(PathBuf::from(value)),
            "mode" => {
                partial.mode =
                    Some(ModeSelection::parse(value).ok_or_else(|| ConfigError::BadValue {
                        key: key.into(),
                        value: value.into(),
                        reason: "expected sd, si, or both".into(),
                    })?)
            }
            "window" => partial.response_window = Some(parse_num(key, value)?),
            "confidence_floor" => partial.confidence_floor = Some(parse_num(key, value)?),
            "min_valid_fraction" => partial.min_valid_fraction = Some(parse_num(key, value)?),
            "activation_threshold" => partial.activation_threshold = Some(parse_num(key, value)?),
            "min_duration_frames" => partial.min_duration_frames = Some(parse_num(key, value)?),
            "smoothing_window" => partial.smoothing_window = Some(parse_num(key, value)?),
            "damping" => partial.damping = Some(parse_num(key, value)?),
            "preference" => {
                if value != "median" {
                    partial.preference = Some(parse_num(key, value)?);
                }
            }
            "max_iter" => partial.max_iter = Some(parse_num(key, value)?),
            "convergence_iter" => partial.convergence_iter = Some(parse_num(key, value)?),
            "topk_list" => partial.topk_list = Some(parse_topk_list(value)?),
            "threads" => partial.threads = Some(parse_num(key, value)?),
            other => return Err(ConfigError::UnknownKey(other.into())),
        }
    }
    Ok(partial)
}

/// Read and parse a config file from disk.
pub fn load_config_file(path: &std::path::Path) -> Result<PartialConfig, ConfigError> {
    parse_config_text(&std::fs::read_to_string(path)?)
}
