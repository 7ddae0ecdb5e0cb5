//! Report assembly and emission.
//!
//! The JSON report is versioned and fully deterministic: struct fields
//! serialize in declaration order, subjects are sorted by id, and the
//! echoed configuration omits runtime-only knobs (worker count), so two
//! runs over the same inputs produce byte-identical documents regardless
//! of parallelism. The CSV summary carries one row per mode with
//! percentages rounded to whole numbers; everything upstream stays
//! unrounded.

use serde::Serialize;

use crate::config::{ModeSelection, RunConfig};
use crate::predict::{MetricsReport, Mode, SubjectResult};

/// Schema version stamped into every JSON report.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Configuration echo embedded in the report for reproducibility.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectiveConfig {
    pub traces: String,
    pub schedule: String,
    pub mode: ModeSelection,
    pub response_window: f64,
    pub confidence_floor: f64,
    pub min_valid_fraction: f64,
    pub activation_threshold: f64,
    pub min_duration_frames: usize,
    pub smoothing_window: usize,
    pub damping: f64,
    /// None means the median off-diagonal preference.
    pub preference: Option<f64>,
    pub max_iter: usize,
    pub convergence_iter: usize,
    pub topk_list: Vec<usize>,
}

impl EffectiveConfig {
    pub fn from_run_config(config: &RunConfig) -> Self {
        Self {
            traces: config.traces_dir.display().to_string(),
            schedule: config.schedule_path.display().to_string(),
            mode: config.mode,
            response_window: config.response_window,
            confidence_floor: config.confidence_floor,
            min_valid_fraction: config.min_valid_fraction,
            activation_threshold: config.detection.activation_threshold,
            min_duration_frames: config.detection.min_duration_frames,
            smoothing_window: config.detection.smoothing_window,
            damping: config.damping,
            preference: config.preference,
            max_iter: config.max_iter,
            convergence_iter: config.convergence_iter,
            topk_list: config.topk_list.clone(),
        }
    }
}

/// A subject that failed a pipeline stage; the run continues without it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubjectFailure {
    pub subject_id: String,
    pub stage: String,
    pub error: String,
}

/// Per-subject stage statistics, recorded once per run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubjectDiagnostic {
    pub subject_id: String,
    pub frames: usize,
    pub event_count: usize,
    pub gesture_count: usize,
    pub clustering_converged: bool,
    pub warning_count: usize,
}

/// Results of one evaluation mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeReport {
    pub mode: Mode,
    /// None when every subject was excluded.
    pub metrics: Option<MetricsReport>,
    pub subjects: Vec<SubjectResult>,
}

/// The full evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub config: EffectiveConfig,
    pub diagnostics: Vec<SubjectDiagnostic>,
    pub modes: Vec<ModeReport>,
    pub failures: Vec<SubjectFailure>,
}

impl Report {
    /// True when any subject failed a stage or was excluded in any mode.
    pub fn is_partial(&self) -> bool {
        !self.failures.is_empty()
            || self
                .modes
                .iter()
                .any(|m| m.subjects.iter().any(|s| s.excluded))
    }
}

/// Serialize the report as pretty JSON with a trailing newline.
pub fn report_to_json(report: &Report) -> String {
    let mut text =
        serde_json::to_string_pretty(report).expect("report serialization cannot fail");
    text.push('\n');
    text
}

/// One-line-per-mode CSV summary. Percentages round to whole numbers
/// here, at display time only.
pub fn summary_csv(report: &Report) -> String {
    let mut out = String::from("mode,top2_pct,top10_pct,top15pct_pct,median_rank,included,excluded\n");
    for mode_report in &report.modes {
        match &mode_report.metrics {
            Some(m) => {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    mode_report.mode,
                    m.top2_pct.round(),
                    m.top10_pct.round(),
                    m.top15pct_pct.round(),
                    m.median_rank,
                    m.included_subjects,
                    m.excluded_subjects
                ));
            }
            None => {
                let excluded = mode_report.subjects.len();
                out.push_str(&format!("{},,,,,0,{}\n", mode_report.mode, excluded));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> Report {
        Report {
            schema_version: REPORT_SCHEMA_VERSION,
            config: EffectiveConfig::from_run_config(&RunConfig::default()),
            diagnostics: Vec::new(),
            modes: vec![ModeReport {
                mode: Mode::Sd,
                metrics: Some(MetricsReport {
                    mode: Mode::Sd,
                    top2_pct: 100.0 / 3.0,
                    top10_pct: 200.0 / 3.0,
                    top15pct_pct: 200.0 / 3.0,
                    median_rank: 14.5,
                    median_candidate_count: 48.0,
                    included_subjects: 3,
                    excluded_subjects: 1,
                    topk: Vec::new(),
                }),
                subjects: Vec::new(),
            }],
            failures: Vec::new(),
        }
    }

    #[test]
    fn json_is_deterministic_and_versioned() {
        let report = sample_report();
        let a = report_to_json(&report);
        let b = report_to_json(&report);
        assert_eq!(a, b);
        assert!(a.contains("\"schema_version\": 1"));
        assert!(a.ends_with('\n'));
    }

    #[test]
    fn summary_rounds_percentages_only() {
        let report = sample_report();
        let csv = summary_csv(&report);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "mode,top2_pct,top10_pct,top15pct_pct,median_rank,included,excluded"
        );
        assert_eq!(lines.next().unwrap(), "sd,33,67,67,14.5,3,1");
    }

    #[test]
    fn summary_handles_all_excluded_mode() {
        let mut report = sample_report();
        report.modes[0].metrics = None;
        let csv = summary_csv(&report);
        assert!(csv.lines().nth(1).unwrap().starts_with("sd,,,,,0,"));
    }

    #[test]
    fn excluded_count_key_always_present() {
        let report = sample_report();
        let json = report_to_json(&report);
        assert!(json.contains("\"excluded_subjects\": 1"));
        assert!(json.contains("\"failures\": []"));
    }
}
