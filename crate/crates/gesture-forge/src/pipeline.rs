//! End-to-end orchestration: ingest, detect, cluster, assemble,
//! featurize, align, evaluate, aggregate.
//!
//! Per-subject stages run in parallel on a worker pool; results reduce
//! in sorted subject-id order so output is independent of the worker
//! count. A subject that fails a stage becomes a failure entry and the
//! run continues; fatal errors (unreadable schedule, zero parseable
//! subjects) abort the run.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::cluster::{affinity_propagation, build_temporal_similarity, ApParams};
use crate::config::{ConfigError, RunConfig};
use crate::events::{detect_events, write_events_csv, AUEvent};
use crate::gesture::{
    assemble_gestures, featurize_all, normalize_cohort, write_gestures_csv, FacialGesture,
    FeatureVector, NormalizationContext,
};
use crate::ingest::{
    parse_au_csv, parse_stimulus_schedule, validate_trace, IngestError, StimulusSchedule,
};
use crate::predict::{
    aggregate_metrics, align_stimuli, evaluate_subject_sd, evaluate_subject_si, pooled_prototype,
    Mode, StimulusAlignment,
};
use crate::report::{
    report_to_json, summary_csv, EffectiveConfig, ModeReport, Report, SubjectDiagnostic,
    SubjectFailure, REPORT_SCHEMA_VERSION,
};

/// Exit code for a clean run.
pub const EXIT_OK: i32 = 0;
/// Exit code for a fatal error.
pub const EXIT_FATAL: i32 = 1;
/// Exit code when some subjects failed or were excluded.
pub const EXIT_PARTIAL: i32 = 2;

/// Fatal pipeline errors; per-subject problems become failure entries
/// instead.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("cannot read traces directory {dir}: {source}")]
    TracesDir { dir: PathBuf, source: std::io::Error },
    #[error("no trace CSV files found in {0}")]
    NoTraceFiles(PathBuf),
    #[error("cannot read schedule file {path}: {source}")]
    ScheduleRead { path: PathBuf, source: std::io::Error },
    #[error("invalid schedule file: {0}")]
    Schedule(#[from] IngestError),
    #[error("zero parseable subjects")]
    NoSubjects,
    #[error("failed to build worker pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Everything derived from one subject's trace before mode-specific
/// featurization.
#[derive(Debug, Clone)]
pub struct PreparedSubject {
    pub subject_id: String,
    pub frames: usize,
    pub events: Vec<AUEvent>,
    /// Gestures with zeroed features; each mode featurizes its own copy
    /// under its own normalization scope.
    pub gestures: Vec<FacialGesture>,
    pub alignment: StimulusAlignment,
    pub clustering_converged: bool,
    pub warning_count: usize,
}

/// Trace files in a directory, as (subject_id, path) sorted by id. The
/// subject id is the file stem.
pub fn discover_trace_files(dir: &Path) -> Result<Vec<(String, PathBuf)>, PipelineError> {
    let entries = fs::read_dir(dir).map_err(|source| PipelineError::TracesDir {
        dir: dir.to_path_buf(),
        source,
    })?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| PipelineError::TracesDir {
            dir: dir.to_path_buf(),
            source,
        })?;
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) == Some("csv") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                files.push((stem.to_string(), path));
            }
        }
    }
    if files.is_empty() {
        return Err(PipelineError::NoTraceFiles(dir.to_path_buf()));
    }
    files.sort();
    Ok(files)
}

fn failure(subject_id: &str, stage: &str, error: impl std::fmt::Display) -> SubjectFailure {
    SubjectFailure {
        subject_id: subject_id.to_string(),
        stage: stage.to_string(),
        error: error.to_string(),
    }
}

struct LoadedSubject {
    events: Vec<AUEvent>,
    frames: usize,
    warning_count: usize,
}

fn load_subject_events(
    subject_id: &str,
    path: &Path,
    config: &RunConfig,
) -> Result<LoadedSubject, SubjectFailure> {
    let file = fs::File::open(path).map_err(|e| failure(subject_id, "read", e))?;
    let reader = std::io::BufReader::new(file);
    let trace = parse_au_csv(reader, subject_id, config.confidence_floor)
        .map_err(|e| failure(subject_id, "parse", e))?;
    let (validated, warnings) = validate_trace(trace, config.min_valid_fraction)
        .map_err(|e| failure(subject_id, "validate", e))?;
    let events = detect_events(&validated, &config.detection)
        .map_err(|e| failure(subject_id, "detect", e))?;
    Ok(LoadedSubject {
        events,
        frames: validated.num_frames(),
        warning_count: warnings.len(),
    })
}

/// Run one subject through ingest, detection, clustering, assembly and
/// stimulus alignment.
pub fn prepare_subject(
    subject_id: &str,
    path: &Path,
    config: &RunConfig,
    schedule: Option<&StimulusSchedule>,
) -> Result<PreparedSubject, SubjectFailure> {
    let schedule = schedule
        .ok_or_else(|| failure(subject_id, "schedule", "no stimulus schedule for subject"))?;
    let loaded = load_subject_events(subject_id, path, config)?;

    let (gestures, converged) = if loaded.events.is_empty() {
        (Vec::new(), true)
    } else {
        let similarity = build_temporal_similarity(&loaded.events, config.preference)
            .map_err(|e| failure(subject_id, "similarity", e))?;
        let params = ApParams {
            damping: config.damping,
            max_iter: config.max_iter,
            convergence_iter: config.convergence_iter,
            record_history: false,
        };
        let clustering = affinity_propagation(&similarity, &params)
            .map_err(|e| failure(subject_id, "cluster", e))?;
        let gestures = assemble_gestures(subject_id, &loaded.events, &clustering)
            .map_err(|e| failure(subject_id, "assemble", e))?;
        (gestures, clustering.converged)
    };

    let alignment = align_stimuli(&gestures, schedule, config.response_window);
    Ok(PreparedSubject {
        subject_id: subject_id.to_string(),
        frames: loaded.frames,
        events: loaded.events,
        gestures,
        alignment,
        clustering_converged: converged,
        warning_count: loaded.warning_count,
    })
}

fn evaluate_mode(prepared: &[PreparedSubject], mode: Mode, config: &RunConfig) -> ModeReport {
    let subjects: Vec<crate::predict::SubjectResult> = match mode {
        Mode::Sd => prepared
            .par_iter()
            .map(|subject| {
                let mut gestures = subject.gestures.clone();
                if !gestures.is_empty() {
                    let ctx = normalize_cohort(&gestures)
                        .expect("non-empty gesture list always normalizes");
                    featurize_all(&mut gestures, &ctx);
                }
                evaluate_subject_sd(&subject.subject_id, &gestures, &subject.alignment)
            })
            .collect(),
        Mode::Si => {
            let pooled_ctx = NormalizationContext::from_gesture_iter(
                prepared.iter().flat_map(|s| s.gestures.iter()),
            );
            let featurized: Vec<Vec<FacialGesture>> = prepared
                .par_iter()
                .map(|subject| {
                    let mut gestures = subject.gestures.clone();
                    if let Ok(ctx) = &pooled_ctx {
                        featurize_all(&mut gestures, ctx);
                    }
                    gestures
                })
                .collect();
            let pool: Vec<(&[FacialGesture], &StimulusAlignment)> = featurized
                .iter()
                .zip(prepared)
                .map(|(gestures, subject)| (gestures.as_slice(), &subject.alignment))
                .collect();
            // Errors only when every subject is excluded, in which case
            // the prototype is never read.
            let prototype = pooled_prototype(&pool).unwrap_or_else(|_| FeatureVector::zeros());
            featurized
                .par_iter()
                .zip(prepared)
                .map(|(gestures, subject)| {
                    evaluate_subject_si(
                        &subject.subject_id,
                        gestures,
                        &subject.alignment,
                        &prototype,
                    )
                })
                .collect()
        }
    };
    let metrics = aggregate_metrics(&subjects, mode, &config.topk_list).ok();
    ModeReport { mode, metrics, subjects }
}

/// A finished evaluation run: the report plus the process exit code.
#[derive(Debug, Clone)]
pub struct EvaluationOutcome {
    pub report: Report,
    pub exit_code: i32,
}

/// Run the full pipeline per the configuration and write any requested
/// report files.
pub fn run_evaluate(config: &RunConfig) -> Result<EvaluationOutcome, PipelineError> {
    config.validate()?;
    let schedule_file =
        fs::File::open(&config.schedule_path).map_err(|source| PipelineError::ScheduleRead {
            path: config.schedule_path.clone(),
            source,
        })?;
    let schedules = parse_stimulus_schedule(std::io::BufReader::new(schedule_file))?;
    let files = discover_trace_files(&config.traces_dir)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.effective_threads())
        .build()?;

    let (prepared, failures, modes) = pool.install(|| {
        let outcomes: Vec<Result<PreparedSubject, SubjectFailure>> = files
            .par_iter()
            .map(|(subject_id, path)| {
                prepare_subject(subject_id, path, config, schedules.get(subject_id))
            })
            .collect();

        let mut prepared = Vec::new();
        let mut failures = Vec::new();
        for outcome in outcomes {
            match outcome {
                Ok(subject) => prepared.push(subject),
                Err(f) => failures.push(f),
            }
        }
        let modes: Vec<ModeReport> = config
            .mode
            .modes()
            .into_iter()
            .map(|mode| evaluate_mode(&prepared, mode, config))
            .collect();
        (prepared, failures, modes)
    });

    if prepared.is_empty() {
        return Err(PipelineError::NoSubjects);
    }

    let diagnostics = prepared
        .iter()
        .map(|s| SubjectDiagnostic {
            subject_id: s.subject_id.clone(),
            frames: s.frames,
            event_count: s.events.len(),
            gesture_count: s.gestures.len(),
            clustering_converged: s.clustering_converged,
            warning_count: s.warning_count,
        })
        .collect();

    let report = Report {
        schema_version: REPORT_SCHEMA_VERSION,
        config: EffectiveConfig::from_run_config(config),
        diagnostics,
        modes,
        failures,
    };

    if let Some(path) = &config.report_out {
        fs::write(path, report_to_json(&report))?;
    }
    if let Some(path) = &config.summary_out {
        fs::write(path, summary_csv(&report))?;
    }

    let exit_code = if report.is_partial() { EXIT_PARTIAL } else { EXIT_OK };
    Ok(EvaluationOutcome { report, exit_code })
}

/// Outcome of a standalone stage command.
#[derive(Debug, Clone)]
pub struct StageOutcome {
    /// Human-readable per-subject lines.
    pub lines: Vec<String>,
    pub failures: Vec<SubjectFailure>,
    pub exit_code: i32,
}

fn stage_exit(ok_count: usize, failures: &[SubjectFailure]) -> i32 {
    if ok_count == 0 {
        EXIT_FATAL
    } else if failures.is_empty() {
        EXIT_OK
    } else {
        EXIT_PARTIAL
    }
}

/// Parse and validate every trace (and optionally the schedule),
/// reporting per-subject statistics without running the pipeline.
pub fn run_ingest_check(
    config: &RunConfig,
    check_schedule: bool,
) -> Result<StageOutcome, PipelineError> {
    let files = discover_trace_files(&config.traces_dir)?;
    let schedules = if check_schedule {
        let file = fs::File::open(&config.schedule_path).map_err(|source| {
            PipelineError::ScheduleRead {
                path: config.schedule_path.clone(),
                source,
            }
        })?;
        Some(parse_stimulus_schedule(std::io::BufReader::new(file))?)
    } else {
        None
    };

    let mut lines = Vec::new();
    let mut failures = Vec::new();
    let mut ok_count = 0;
    for (subject_id, path) in &files {
        match load_subject_events(subject_id, path, config) {
            Ok(loaded) => {
                ok_count += 1;
                let schedule_note = match &schedules {
                    Some(map) if !map.contains_key(subject_id) => " (no schedule entry)",
                    _ => "",
                };
                lines.push(format!(
                    "{subject_id}: {} frames, {} events, {} warnings{schedule_note}",
                    loaded.frames,
                    loaded.events.len(),
                    loaded.warning_count
                ));
            }
            Err(f) => {
                lines.push(format!("{subject_id}: FAILED at {}: {}", f.stage, f.error));
                failures.push(f);
            }
        }
    }
    let exit_code = stage_exit(ok_count, &failures);
    Ok(StageOutcome { lines, failures, exit_code })
}

/// Detect events for every trace and dump them as one CSV.
pub fn run_detect_dump(config: &RunConfig, out: &Path) -> Result<StageOutcome, PipelineError> {
    let files = discover_trace_files(&config.traces_dir)?;
    let mut lines = Vec::new();
    let mut failures = Vec::new();
    let mut buffer = Vec::new();
    let mut wrote_header = false;
    let mut ok_count = 0;
    for (subject_id, path) in &files {
        match load_subject_events(subject_id, path, config) {
            Ok(loaded) => {
                ok_count += 1;
                write_events_csv(&mut buffer, subject_id, &loaded.events, !wrote_header)
                    .map_err(|e| PipelineError::Io(std::io::Error::other(e.to_string())))?;
                wrote_header = true;
                lines.push(format!("{subject_id}: {} events", loaded.events.len()));
            }
            Err(f) => {
                lines.push(format!("{subject_id}: FAILED at {}: {}", f.stage, f.error));
                failures.push(f);
            }
        }
    }
    fs::write(out, buffer)?;
    let exit_code = stage_exit(ok_count, &failures);
    Ok(StageOutcome { lines, failures, exit_code })
}

/// Cluster every trace's events and dump assignments; optionally write
/// per-iteration convergence diagnostics.
pub fn run_cluster_dump(
    config: &RunConfig,
    out: &Path,
    diagnostics_out: Option<&Path>,
) -> Result<StageOutcome, PipelineError> {
    config.validate()?;
    let files = discover_trace_files(&config.traces_dir)?;
    let mut lines = Vec::new();
    let mut failures = Vec::new();
    let mut assignments = String::from(
        "subject_id,event_index,au_id,onset_s,apex_s,offset_s,exemplar_index\n",
    );
    let mut diagnostics = String::from("subject_id,iteration,exemplar_count,net_similarity\n");
    let mut ok_count = 0;

    for (subject_id, path) in &files {
        let loaded = match load_subject_events(subject_id, path, config) {
            Ok(l) => l,
            Err(f) => {
                lines.push(format!("{subject_id}: FAILED at {}: {}", f.stage, f.error));
                failures.push(f);
                continue;
            }
        };
        if loaded.events.is_empty() {
            ok_count += 1;
            lines.push(format!("{subject_id}: 0 events, 0 clusters"));
            continue;
        }
        let clustered = build_temporal_similarity(&loaded.events, config.preference)
            .and_then(|similarity| {
                let params = ApParams {
                    damping: config.damping,
                    max_iter: config.max_iter,
                    convergence_iter: config.convergence_iter,
                    record_history: diagnostics_out.is_some(),
                };
                affinity_propagation(&similarity, &params)
            });
        match clustered {
            Ok(clustering) => {
                ok_count += 1;
                for (index, event) in loaded.events.iter().enumerate() {
                    assignments.push_str(&format!(
                        "{},{},{},{},{},{},{}\n",
                        subject_id,
                        index,
                        event.au,
                        event.onset_time,
                        event.apex_time,
                        event.offset_time,
                        clustering.exemplar_of[index]
                    ));
                }
                for stat in &clustering.history {
                    diagnostics.push_str(&format!(
                        "{},{},{},{}\n",
                        subject_id, stat.iteration, stat.exemplar_count, stat.net_similarity
                    ));
                }
                lines.push(format!(
                    "{subject_id}: {} events, {} clusters, converged={}",
                    loaded.events.len(),
                    clustering.cluster_count(),
                    clustering.converged
                ));
            }
            Err(e) => {
                lines.push(format!("{subject_id}: FAILED at cluster: {e}"));
                failures.push(failure(subject_id, "cluster", e));
            }
        }
    }

    fs::write(out, assignments)?;
    if let Some(path) = diagnostics_out {
        fs::write(path, diagnostics)?;
    }
    let exit_code = stage_exit(ok_count, &failures);
    Ok(StageOutcome { lines, failures, exit_code })
}

/// Dump every subject's gestures with features under subject-dependent
/// normalization.
pub fn run_gesture_dump(config: &RunConfig, out: &Path) -> Result<StageOutcome, PipelineError> {
    config.validate()?;
    let schedule_file =
        fs::File::open(&config.schedule_path).map_err(|source| PipelineError::ScheduleRead {
            path: config.schedule_path.clone(),
            source,
        })?;
    let schedules = parse_stimulus_schedule(std::io::BufReader::new(schedule_file))?;
    let files = discover_trace_files(&config.traces_dir)?;

    let mut lines = Vec::new();
    let mut failures = Vec::new();
    let mut buffer = Vec::new();
    let mut wrote_header = false;
    let mut ok_count = 0;
    for (subject_id, path) in &files {
        match prepare_subject(subject_id, path, config, schedules.get(subject_id)) {
            Ok(subject) => {
                ok_count += 1;
                let mut gestures = subject.gestures;
                if !gestures.is_empty() {
                    let ctx = normalize_cohort(&gestures)
                        .expect("non-empty gesture list always normalizes");
                    featurize_all(&mut gestures, &ctx);
                }
                write_gestures_csv(&mut buffer, &gestures, !wrote_header)
                    .map_err(|e| PipelineError::Io(std::io::Error::other(e.to_string())))?;
                wrote_header = true;
                lines.push(format!("{subject_id}: {} gestures", gestures.len()));
            }
            Err(f) => {
                lines.push(format!("{subject_id}: FAILED at {}: {}", f.stage, f.error));
                failures.push(f);
            }
        }
    }
    fs::write(out, buffer)?;
    let exit_code = stage_exit(ok_count, &failures);
    Ok(StageOutcome { lines, failures, exit_code })
}

/// Write text to a path or stdout when the path is None.
pub fn write_text_output(path: Option<&Path>, text: &str) -> std::io::Result<()> {
    match path {
        Some(path) => fs::write(path, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    }
}
