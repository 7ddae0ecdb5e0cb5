//! Parsing and validation of AU intensity traces and stimulus schedules.
//!
//! Trace files are CSV as emitted by the upstream AU extractor: a header
//! row with `frame`, `timestamp`, `confidence`, `success` and one
//! `AU??_r` intensity column per AU (leading spaces in header cells are
//! tolerated). `AU??_c` classification columns and unknown columns are
//! ignored. Stimulus schedules are CSV with header
//! `subject_id,stimulus_index,time_s`.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::au::ActionUnit;

/// Default confidence floor below which a frame counts as invalid.
pub const DEFAULT_CONFIDENCE_FLOOR: f64 = 0.75;
/// Default minimum fraction of valid frames required by [`validate_trace`].
pub const DEFAULT_MIN_VALID_FRACTION: f64 = 0.5;

/// Errors raised while parsing or validating input files.
#[derive(Debug, Error)]
pub enum IngestError {
    /// A required column is absent from the header.
    #[error("missing column: {0}")]
    MissingColumn(String),
    /// The same column appears twice in the header.
    #[error("duplicate column: {0}")]
    DuplicateColumn(String),
    /// Timestamps do not strictly increase.
    #[error("non-monotonic timestamps at line {line}")]
    NonMonotonicTimestamps { line: u64 },
    /// A cell could not be parsed.
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    /// Too few frames survived the validity filter.
    #[error("too few valid frames: {valid} of {total} below fraction {min_fraction}")]
    TooFewValidFrames {
        valid: usize,
        total: usize,
        min_fraction: f64,
    },
    /// One subject lists the same stimulus index twice.
    #[error("duplicate stimulus index {index} for subject {subject_id}")]
    DuplicateStimulusIndex { subject_id: String, index: u32 },
    /// Stimulus times do not strictly increase within a subject.
    #[error("non-increasing stimulus times for subject {subject_id}")]
    NonIncreasingTimes { subject_id: String },
    /// Underlying I/O or CSV failure.
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Per-frame AU intensity matrix for one subject.
///
/// Invariants: `timestamps` strictly increase and match every channel's
/// length; `au_ids` are unique and stored in canonical order;
/// `channels[i]` holds the intensity series for `au_ids[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectTrace {
    pub subject_id: String,
    pub timestamps: Vec<f64>,
    pub au_ids: Vec<ActionUnit>,
    pub channels: Vec<Vec<f64>>,
    pub frame_valid: Vec<bool>,
}

impl SubjectTrace {
    /// Build a trace, checking structural invariants. Intensity range is
    /// not checked here: raw extractor output may exceed [0, 5] and is
    /// clamped by [`validate_trace`].
    pub fn new(
        subject_id: impl Into<String>,
        timestamps: Vec<f64>,
        au_ids: Vec<ActionUnit>,
        channels: Vec<Vec<f64>>,
        frame_valid: Vec<bool>,
    ) -> Result<Self, IngestError> {
        let frames = timestamps.len();
        for pair in timestamps.windows(2) {
            if pair[1] <= pair[0] {
                return Err(IngestError::NonMonotonicTimestamps { line: 0 });
            }
        }
        if frame_valid.len() != frames {
            return Err(IngestError::MalformedRow {
                line: 0,
                reason: "frame_valid length mismatch".into(),
            });
        }
        if channels.len() != au_ids.len() {
            return Err(IngestError::MalformedRow {
                line: 0,
                reason: "channel count does not match AU count".into(),
            });
        }
        for (au, ch) in au_ids.iter().zip(&channels) {
            if ch.len() != frames {
                return Err(IngestError::MalformedRow {
                    line: 0,
                    reason: format!("channel {au} length mismatch"),
                });
            }
        }
        for pair in au_ids.windows(2) {
            if pair[1] <= pair[0] {
                return Err(IngestError::DuplicateColumn(format!(
                    "{} out of order or repeated",
                    pair[1]
                )));
            }
        }
        Ok(Self {
            subject_id: subject_id.into(),
            timestamps,
            au_ids,
            channels,
            frame_valid,
        })
    }

    /// Number of frames in the trace.
    pub fn num_frames(&self) -> usize {
        self.timestamps.len()
    }

    /// Intensity series for the AU at canonical position `idx`.
    pub fn channel(&self, idx: usize) -> &[f64] {
        &self.channels[idx]
    }

    /// Fraction of frames flagged valid.
    pub fn valid_fraction(&self) -> f64 {
        if self.frame_valid.is_empty() {
            return 0.0;
        }
        let valid = self.frame_valid.iter().filter(|v| **v).count();
        valid as f64 / self.frame_valid.len() as f64
    }
}

/// A trace that passed [`validate_trace`]: intensities clamped to [0, 5]
/// and invalid frames filled by interpolation. The original validity
/// flags are retained for provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedTrace {
    trace: SubjectTrace,
}

impl ValidatedTrace {
    /// The cleaned underlying trace.
    pub fn trace(&self) -> &SubjectTrace {
        &self.trace
    }

    pub fn subject_id(&self) -> &str {
        &self.trace.subject_id
    }

    pub fn num_frames(&self) -> usize {
        self.trace.num_frames()
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.trace.timestamps
    }

    pub fn au_ids(&self) -> &[ActionUnit] {
        &self.trace.au_ids
    }

    pub fn channel(&self, idx: usize) -> &[f64] {
        self.trace.channel(idx)
    }
}

/// Warning emitted by [`validate_trace`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum IngestWarning {
    /// A cell outside [0, 5] was clamped.
    ClampedCell {
        frame: usize,
        au: ActionUnit,
        original: f64,
    },
    /// A run of invalid frames was filled by interpolation.
    InterpolatedSpan { start_frame: usize, end_frame: usize },
}

impl std::fmt::Display for IngestWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IngestWarning::ClampedCell { frame, au, original } => {
                write!(f, "clamped {au} at frame {frame} (was {original})")
            }
            IngestWarning::InterpolatedSpan { start_frame, end_frame } => {
                write!(f, "interpolated frames {start_frame}..={end_frame}")
            }
        }
    }
}

/// Ordered stimulus times for one subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusSchedule {
    pub subject_id: String,
    pub stimulus_times: Vec<f64>,
}

impl StimulusSchedule {
    /// Build a schedule, checking that times strictly increase and are
    /// non-negative.
    pub fn new(
        subject_id: impl Into<String>,
        stimulus_times: Vec<f64>,
    ) -> Result<Self, IngestError> {
        let subject_id = subject_id.into();
        if stimulus_times.first().is_some_and(|t| *t < 0.0) {
            return Err(IngestError::MalformedRow {
                line: 0,
                reason: format!("negative stimulus time for subject {subject_id}"),
            });
        }
        for pair in stimulus_times.windows(2) {
            if pair[1] <= pair[0] {
                return Err(IngestError::NonIncreasingTimes { subject_id });
            }
        }
        Ok(Self { subject_id, stimulus_times })
    }
}

enum Column {
    Frame,
    Timestamp,
    Confidence,
    Success,
    Intensity(ActionUnit),
    Ignored,
}

fn classify_header(name: &str) -> Column {
    match name {
        "frame" => Column::Frame,
        "timestamp" => Column::Timestamp,
        "confidence" => Column::Confidence,
        "success" => Column::Success,
        _ => match name.strip_suffix("_r").and_then(ActionUnit::from_code) {
            Some(au) => Column::Intensity(au),
            None => Column::Ignored,
        },
    }
}

fn parse_cell(field: &str, line: u64, column: &str) -> Result<f64, IngestError> {
    field.parse::<f64>().map_err(|_| IngestError::MalformedRow {
        line,
        reason: format!("cannot parse '{field}' in column {column}"),
    })
}

/// Parse an AU trace CSV into a [`SubjectTrace`].
///
/// A frame is valid when `success == 1` and `confidence >=
/// confidence_floor`; traces without `success`/`confidence` columns are
/// treated as fully valid. AU columns are reordered into canonical order
/// regardless of their order in the file.
pub fn parse_au_csv<R: Read>(
    reader: R,
    subject_id: &str,
    confidence_floor: f64,
) -> Result<SubjectTrace, IngestError> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(reader);

    let headers = csv_reader.headers()?.clone();
    let mut timestamp_col = None;
    let mut confidence_col = None;
    let mut success_col = None;
    let mut au_cols: Vec<(ActionUnit, usize)> = Vec::new();

    for (idx, name) in headers.iter().enumerate() {
        match classify_header(name) {
            Column::Timestamp => {
                if timestamp_col.replace(idx).is_some() {
                    return Err(IngestError::DuplicateColumn("timestamp".into()));
                }
            }
            Column::Confidence => {
                confidence_col = Some(idx);
            }
            Column::Success => {
                success_col = Some(idx);
            }
            Column::Intensity(au) => {
                if au_cols.iter().any(|(a, _)| *a == au) {
                    return Err(IngestError::DuplicateColumn(format!("{au}_r")));
                }
                au_cols.push((au, idx));
            }
            Column::Frame | Column::Ignored => {}
        }
    }

    let timestamp_col =
        timestamp_col.ok_or_else(|| IngestError::MissingColumn("timestamp".into()))?;
    if au_cols.is_empty() {
        return Err(IngestError::MissingColumn("AU??_r intensity columns".into()));
    }
    au_cols.sort_by_key(|(au, _)| *au);

    let mut timestamps = Vec::new();
    let mut frame_valid = Vec::new();
    let mut channels: Vec<Vec<f64>> = vec![Vec::new(); au_cols.len()];

    for record in csv_reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |idx: usize| -> &str { record.get(idx).unwrap_or("") };

        let t = parse_cell(field(timestamp_col), line, "timestamp")?;
        if let Some(prev) = timestamps.last() {
            if t <= *prev {
                return Err(IngestError::NonMonotonicTimestamps { line });
            }
        }
        let success = match success_col {
            Some(idx) => parse_cell(field(idx), line, "success")?,
            None => 1.0,
        };
        let confidence = match confidence_col {
            Some(idx) => parse_cell(field(idx), line, "confidence")?,
            None => 1.0,
        };
        timestamps.push(t);
        frame_valid.push(success == 1.0 && confidence >= confidence_floor);
        for (slot, (au, idx)) in au_cols.iter().enumerate() {
            let code = format!("{au}_r");
            channels[slot].push(parse_cell(field(*idx), line, &code)?);
        }
    }

    SubjectTrace::new(
        subject_id,
        timestamps,
        au_cols.into_iter().map(|(au, _)| au).collect(),
        channels,
        frame_valid,
    )
}

/// Clamp out-of-range intensities, fill invalid frames by linear
/// interpolation over time (hold-nearest at the trace edges), and reject
/// traces with too few valid frames.
pub fn validate_trace(
    trace: SubjectTrace,
    min_valid_fraction: f64,
) -> Result<(ValidatedTrace, Vec<IngestWarning>), IngestError> {
    let frames = trace.num_frames();
    let valid_count = trace.frame_valid.iter().filter(|v| **v).count();
    if (valid_count as f64) < min_valid_fraction * frames as f64 || frames == 0 {
        return Err(IngestError::TooFewValidFrames {
            valid: valid_count,
            total: frames,
            min_fraction: min_valid_fraction,
        });
    }

    let mut trace = trace;
    let mut warnings = Vec::new();

    for frame in 0..frames {
        for (slot, au) in trace.au_ids.clone().iter().enumerate() {
            let v = trace.channels[slot][frame];
            if !(0.0..=5.0).contains(&v) {
                warnings.push(IngestWarning::ClampedCell {
                    frame,
                    au: *au,
                    original: v,
                });
                trace.channels[slot][frame] = v.clamp(0.0, 5.0);
            }
        }
    }

    // Interpolate each maximal run of invalid frames between its valid
    // neighbors; runs touching a trace edge hold the nearest valid value.
    let mut frame = 0;
    while frame < frames {
        if trace.frame_valid[frame] {
            frame += 1;
            continue;
        }
        let start = frame;
        while frame < frames && !trace.frame_valid[frame] {
            frame += 1;
        }
        let end = frame - 1;
        let left = start.checked_sub(1);
        let right = if end + 1 < frames { Some(end + 1) } else { None };
        for slot in 0..trace.channels.len() {
            for i in start..=end {
                let filled = match (left, right) {
                    (Some(l), Some(r)) => {
                        let t0 = trace.timestamps[l];
                        let t1 = trace.timestamps[r];
                        let alpha = (trace.timestamps[i] - t0) / (t1 - t0);
                        let v0 = trace.channels[slot][l];
                        let v1 = trace.channels[slot][r];
                        v0 + alpha * (v1 - v0)
                    }
                    (Some(l), None) => trace.channels[slot][l],
                    (None, Some(r)) => trace.channels[slot][r],
                    (None, None) => unreachable!("rejected above: no valid frames"),
                };
                trace.channels[slot][i] = filled;
            }
        }
        warnings.push(IngestWarning::InterpolatedSpan {
            start_frame: start,
            end_frame: end,
        });
    }

    Ok((ValidatedTrace { trace }, warnings))
}

/// Write a trace back out in the extractor CSV layout. Valid frames get
/// `confidence=1,success=1`, invalid frames `confidence=0,success=0`, so
/// re-parsing reproduces the same structure for any confidence floor in
/// (0, 1].
pub fn write_au_csv<W: Write>(writer: &mut W, trace: &SubjectTrace) -> Result<(), IngestError> {
    write!(writer, "frame,timestamp,confidence,success")?;
    for au in &trace.au_ids {
        write!(writer, ",{au}_r")?;
    }
    writeln!(writer)?;
    for i in 0..trace.num_frames() {
        let (confidence, success) = if trace.frame_valid[i] { (1, 1) } else { (0, 0) };
        write!(writer, "{},{},{},{}", i + 1, trace.timestamps[i], confidence, success)?;
        for ch in &trace.channels {
            write!(writer, ",{}", ch[i])?;
        }
        writeln!(writer)?;
    }
    Ok(())
}

/// Parse a stimulus schedule CSV into per-subject schedules.
///
/// Rows are grouped by subject and ordered by `stimulus_index`; times
/// must strictly increase within each subject.
pub fn parse_stimulus_schedule<R: Read>(
    reader: R,
) -> Result<BTreeMap<String, StimulusSchedule>, IngestError> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(reader);

    let headers = csv_reader.headers()?.clone();
    let col = |name: &str| -> Result<usize, IngestError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn(name.into()))
    };
    let subject_col = col("subject_id")?;
    let index_col = col("stimulus_index")?;
    let time_col = col("time_s")?;

    let mut rows: BTreeMap<String, Vec<(u32, f64)>> = BTreeMap::new();
    for record in csv_reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let subject = record.get(subject_col).unwrap_or("").to_string();
        if subject.is_empty() {
            return Err(IngestError::MalformedRow {
                line,
                reason: "empty subject_id".into(),
            });
        }
        let index_field = record.get(index_col).unwrap_or("");
        let index: u32 = index_field.parse().map_err(|_| IngestError::MalformedRow {
            line,
            reason: format!("cannot parse '{index_field}' in column stimulus_index"),
        })?;
        let time = parse_cell(record.get(time_col).unwrap_or(""), line, "time_s")?;
        if time < 0.0 {
            return Err(IngestError::MalformedRow {
                line,
                reason: format!("negative time_s {time}"),
            });
        }
        rows.entry(subject).or_default().push((index, time));
    }

    let mut schedules = BTreeMap::new();
    for (subject_id, mut entries) in rows {
        entries.sort_by_key(|(index, _)| *index);
        for pair in entries.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(IngestError::DuplicateStimulusIndex {
                    subject_id,
                    index: pair[0].0,
                });
            }
        }
        let times: Vec<f64> = entries.iter().map(|(_, t)| *t).collect();
        let schedule = StimulusSchedule::new(subject_id.clone(), times)?;
        schedules.insert(subject_id, schedule);
    }
    Ok(schedules)
}

/// Write schedules in the `subject_id,stimulus_index,time_s` layout.
pub fn write_schedule_csv<W: Write>(
    writer: &mut W,
    schedules: &BTreeMap<String, StimulusSchedule>,
) -> Result<(), IngestError> {
    writeln!(writer, "subject_id,stimulus_index,time_s")?;
    for (subject_id, schedule) in schedules {
        for (i, t) in schedule.stimulus_times.iter().enumerate() {
            writeln!(writer, "{},{},{}", subject_id, i + 1, t)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<SubjectTrace, IngestError> {
        parse_au_csv(text.as_bytes(), "S01", DEFAULT_CONFIDENCE_FLOOR)
    }

    #[test]
    fn parses_basic_trace() {
        let text = "frame,timestamp,confidence,success,AU01_r,AU12_r\n\
                    1,0.000,0.98,1,0.0,1.5\n\
                    2,0.033,0.97,1,0.1,2.0\n";
        let trace = parse(text).unwrap();
        assert_eq!(trace.num_frames(), 2);
        assert_eq!(trace.au_ids, vec![ActionUnit::Au01, ActionUnit::Au12]);
        assert!(trace.frame_valid.iter().all(|v| *v));
        assert_eq!(trace.channel(1), &[1.5, 2.0]);
    }

    #[test]
    fn tolerates_openface_header_spaces() {
        let text = "frame, timestamp, confidence, success, AU01_r, AU12_r\n\
                    1, 0.000, 0.98, 1, 0.0, 1.5\n";
        let trace = parse(text).unwrap();
        assert_eq!(trace.au_ids.len(), 2);
        assert_eq!(trace.timestamps, vec![0.0]);
    }

    #[test]
    fn missing_au_columns_is_error() {
        let text = "frame,timestamp,confidence,success\n1,0.0,0.9,1\n";
        assert!(matches!(parse(text), Err(IngestError::MissingColumn(_))));
    }

    #[test]
    fn missing_timestamp_is_error() {
        let text = "frame,AU01_r\n1,0.5\n";
        assert!(matches!(parse(text), Err(IngestError::MissingColumn(_))));
    }

    #[test]
    fn success_zero_marks_frame_invalid_but_keeps_intensities() {
        let text = "frame,timestamp,confidence,success,AU01_r\n\
                    1,0.0,0.98,1,1.0\n\
                    2,0.1,0.98,0,4.2\n";
        let trace = parse(text).unwrap();
        assert_eq!(trace.frame_valid, vec![true, false]);
        assert_eq!(trace.channel(0), &[1.0, 4.2]);
    }

    #[test]
    fn low_confidence_marks_frame_invalid() {
        let text = "frame,timestamp,confidence,success,AU01_r\n\
                    1,0.0,0.5,1,1.0\n\
                    2,0.1,0.9,1,1.0\n";
        let trace = parse(text).unwrap();
        assert_eq!(trace.frame_valid, vec![false, true]);
    }

    #[test]
    fn classification_and_unknown_columns_are_ignored() {
        let text = "frame,timestamp,face_id,AU01_r,AU01_c,AU28_c\n\
                    1,0.0,0,1.0,1,0\n";
        let trace = parse(text).unwrap();
        assert_eq!(trace.au_ids, vec![ActionUnit::Au01]);
    }

    #[test]
    fn non_monotonic_timestamps_rejected() {
        let text = "frame,timestamp,AU01_r\n1,0.2,1.0\n2,0.1,1.0\n";
        assert!(matches!(
            parse(text),
            Err(IngestError::NonMonotonicTimestamps { line: 3 })
        ));
    }

    #[test]
    fn malformed_cell_reports_line() {
        let text = "frame,timestamp,AU01_r\n1,0.0,1.0\n2,0.1,oops\n";
        match parse(text) {
            Err(IngestError::MalformedRow { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected MalformedRow, got {other:?}"),
        }
    }

    #[test]
    fn au_columns_reordered_canonically() {
        let text = "frame,timestamp,AU12_r,AU01_r\n1,0.0,2.0,1.0\n";
        let trace = parse(text).unwrap();
        assert_eq!(trace.au_ids, vec![ActionUnit::Au01, ActionUnit::Au12]);
        assert_eq!(trace.channel(0), &[1.0]);
        assert_eq!(trace.channel(1), &[2.0]);
    }

    #[test]
    fn clamps_out_of_range_cell_with_warning() {
        let trace = SubjectTrace::new(
            "S01",
            vec![0.0, 0.1],
            vec![ActionUnit::Au01],
            vec![vec![5.3, 1.0]],
            vec![true, true],
        )
        .unwrap();
        let (validated, warnings) = validate_trace(trace, 0.5).unwrap();
        assert_eq!(validated.channel(0), &[5.0, 1.0]);
        assert_eq!(warnings.len(), 1);
        assert!(matches!(
            warnings[0],
            IngestWarning::ClampedCell { frame: 0, au: ActionUnit::Au01, .. }
        ));
    }

    #[test]
    fn interpolates_invalid_frame_linearly() {
        let trace = SubjectTrace::new(
            "S01",
            vec![0.0, 0.1, 0.2],
            vec![ActionUnit::Au01],
            vec![vec![1.0, 9.9, 3.0]],
            vec![true, false, true],
        )
        .unwrap();
        let (validated, warnings) = validate_trace(trace, 0.5).unwrap();
        assert!((validated.channel(0)[1] - 2.0).abs() < 1e-12);
        assert!(warnings
            .iter()
            .any(|w| matches!(w, IngestWarning::InterpolatedSpan { start_frame: 1, end_frame: 1 })));
    }

    #[test]
    fn holds_nearest_value_at_edges() {
        let trace = SubjectTrace::new(
            "S01",
            vec![0.0, 0.1, 0.2, 0.3],
            vec![ActionUnit::Au01],
            vec![vec![7.0, 2.0, 3.0, 0.0]],
            vec![false, true, true, false],
        )
        .unwrap();
        let (validated, _) = validate_trace(trace, 0.5).unwrap();
        assert_eq!(validated.channel(0), &[2.0, 2.0, 3.0, 3.0]);
    }

    #[test]
    fn all_invalid_frames_rejected() {
        let trace = SubjectTrace::new(
            "S01",
            vec![0.0, 0.1],
            vec![ActionUnit::Au01],
            vec![vec![1.0, 1.0]],
            vec![false, false],
        )
        .unwrap();
        assert!(matches!(
            validate_trace(trace, 0.5),
            Err(IngestError::TooFewValidFrames { valid: 0, total: 2, .. })
        ));
    }

    #[test]
    fn schedule_parses_and_orders_by_index() {
        let text = "subject_id,stimulus_index,time_s\nS01,2,25.0\nS01,1,10.0\nS01,3,41.0\n";
        let schedules = parse_stimulus_schedule(text.as_bytes()).unwrap();
        assert_eq!(schedules.len(), 1);
        assert_eq!(schedules["S01"].stimulus_times, vec![10.0, 25.0, 41.0]);
    }

    #[test]
    fn schedule_duplicate_index_rejected() {
        let text = "subject_id,stimulus_index,time_s\nS01,1,10.0\nS01,1,12.0\n";
        assert!(matches!(
            parse_stimulus_schedule(text.as_bytes()),
            Err(IngestError::DuplicateStimulusIndex { index: 1, .. })
        ));
    }

    #[test]
    fn schedule_non_increasing_times_rejected() {
        let text = "subject_id,stimulus_index,time_s\nS01,1,10.0\nS01,2,9.0\n";
        assert!(matches!(
            parse_stimulus_schedule(text.as_bytes()),
            Err(IngestError::NonIncreasingTimes { .. })
        ));
    }

    #[test]
    fn schedule_tolerates_crlf() {
        let text = "subject_id,stimulus_index,time_s\r\nS01,1,10.0\r\nS02,1,11.0\r\n";
        let schedules = parse_stimulus_schedule(text.as_bytes()).unwrap();
        assert_eq!(schedules.len(), 2);
    }

    #[test]
    fn validated_trace_round_trips_through_csv() {
        let trace = SubjectTrace::new(
            "S01",
            vec![0.0, 0.0333, 0.0667],
            vec![ActionUnit::Au01, ActionUnit::Au12],
            vec![vec![0.0, 0.17, 0.3], vec![1.5, 2.0333333333, 2.5]],
            vec![true, false, true],
        )
        .unwrap();
        let (validated, _) = validate_trace(trace, 0.5).unwrap();
        let mut buf = Vec::new();
        write_au_csv(&mut buf, validated.trace()).unwrap();
        let reparsed = parse_au_csv(buf.as_slice(), "S01", DEFAULT_CONFIDENCE_FLOOR).unwrap();
        assert_eq!(&reparsed, validated.trace());
    }
}
