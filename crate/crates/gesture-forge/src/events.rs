//! Segmentation of AU intensity channels into discrete events.
//!
//! Each channel is smoothed with a centered moving average, then cut into
//! maximal runs of frames at or above the activation threshold. A run
//! yields exactly one event: onset at its first frame, offset at its
//! last, apex at its maximum smoothed intensity (earliest frame on
//! ties). Runs shorter than the minimum duration are dropped.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::au::ActionUnit;
use crate::ingest::ValidatedTrace;

/// Errors from the smoothing/detection stage.
#[derive(Debug, Error)]
pub enum DetectError {
    #[error("smoothing window must be odd, got {0}")]
    EvenWindow(usize),
    #[error("smoothing window {window} exceeds sequence length {len}")]
    WindowTooLarge { window: usize, len: usize },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// One segmented activation of a single AU.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AUEvent {
    pub au: ActionUnit,
    pub onset_time: f64,
    pub apex_time: f64,
    pub offset_time: f64,
    pub onset_intensity: f64,
    pub apex_intensity: f64,
    pub offset_intensity: f64,
    /// Intensity rise per second from onset to apex (0 when apex is the
    /// onset frame).
    pub rise_rate: f64,
    /// Magnitude of the intensity decline per second from apex to offset
    /// (0 when apex is the offset frame).
    pub fall_rate: f64,
}

impl AUEvent {
    /// Event length in seconds.
    pub fn duration(&self) -> f64 {
        self.offset_time - self.onset_time
    }
}

/// Tunable thresholds for [`detect_events`].
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionParams {
    /// Smoothed intensity at or above this value counts as active.
    pub activation_threshold: f64,
    /// Runs shorter than this many frames are discarded.
    pub min_duration_frames: usize,
    /// Centered moving-average width in frames; must be odd.
    pub smoothing_window: usize,
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self {
            activation_threshold: 0.5,
            min_duration_frames: 3,
            smoothing_window: 5,
        }
    }
}

/// Centered moving average with shrunken windows at the edges: each
/// output is the mean of the input values inside the window clipped to
/// the sequence bounds, so output length equals input length.
pub fn smooth_series(values: &[f64], window: usize) -> Result<Vec<f64>, DetectError> {
    if window == 0 || window % 2 == 0 {
        return Err(DetectError::EvenWindow(window));
    }
    if window > values.len() {
        return Err(DetectError::WindowTooLarge { window, len: values.len() });
    }
    let half = window / 2;
    let mut out = Vec::with_capacity(values.len());
    for i in 0..values.len() {
        let lo = i.saturating_sub(half);
        let hi = (i + half).min(values.len() - 1);
        let sum: f64 = values[lo..=hi].iter().sum();
        out.push(sum / (hi - lo + 1) as f64);
    }
    Ok(out)
}

/// Segment every AU channel of a validated trace into events, sorted by
/// onset time then AU id.
///
/// The smoothing window is shrunk (to the largest odd value that fits)
/// for traces shorter than the configured window, so short clips still
/// segment rather than erroring.
pub fn detect_events(
    trace: &ValidatedTrace,
    params: &DetectionParams,
) -> Result<Vec<AUEvent>, DetectError> {
    if params.smoothing_window == 0 || params.smoothing_window % 2 == 0 {
        return Err(DetectError::EvenWindow(params.smoothing_window));
    }
    let frames = trace.num_frames();
    if frames == 0 {
        return Ok(Vec::new());
    }
    let window = effective_window(params.smoothing_window, frames);
    let timestamps = trace.timestamps();

    let mut events = Vec::new();
    for (idx, au) in trace.au_ids().iter().enumerate() {
        let smoothed = smooth_series(trace.channel(idx), window)?;
        detect_channel(&smoothed, timestamps, *au, params, &mut events);
    }
    events.sort_by(|a, b| {
        a.onset_time
            .total_cmp(&b.onset_time)
            .then_with(|| a.au.cmp(&b.au))
    });
    Ok(events)
}

fn effective_window(window: usize, frames: usize) -> usize {
    if window <= frames {
        window
    } else if frames % 2 == 1 {
        frames
    } else {
        frames - 1
    }
}

fn detect_channel(
    smoothed: &[f64],
    timestamps: &[f64],
    au: ActionUnit,
    params: &DetectionParams,
    events: &mut Vec<AUEvent>,
) {
    let threshold = params.activation_threshold;
    let mut i = 0;
    while i < smoothed.len() {
        if smoothed[i] < threshold {
            i += 1;
            continue;
        }
        let start = i;
        while i < smoothed.len() && smoothed[i] >= threshold {
            i += 1;
        }
        let end = i - 1;
        if end - start + 1 < params.min_duration_frames {
            continue;
        }
        // Earliest frame wins apex ties, hence strict >.
        let mut apex = start;
        for j in start + 1..=end {
            if smoothed[j] > smoothed[apex] {
                apex = j;
            }
        }
        let rise_rate = if apex > start {
            (smoothed[apex] - smoothed[start]) / (timestamps[apex] - timestamps[start])
        } else {
            0.0
        };
        let fall_rate = if end > apex {
            (smoothed[apex] - smoothed[end]) / (timestamps[end] - timestamps[apex])
        } else {
            0.0
        };
        events.push(AUEvent {
            au,
            onset_time: timestamps[start],
            apex_time: timestamps[apex],
            offset_time: timestamps[end],
            onset_intensity: smoothed[start],
            apex_intensity: smoothed[apex],
            offset_intensity: smoothed[end],
            rise_rate,
            fall_rate,
        });
    }
}

/// Dump events as CSV:
/// `subject_id,au_id,onset_s,apex_s,offset_s,onset_i,apex_i,offset_i,rise_rate,fall_rate`.
pub fn write_events_csv<W: Write>(
    writer: &mut W,
    subject_id: &str,
    events: &[AUEvent],
    include_header: bool,
) -> Result<(), DetectError> {
    if include_header {
        writeln!(
            writer,
            "subject_id,au_id,onset_s,apex_s,offset_s,onset_i,apex_i,offset_i,rise_rate,fall_rate"
        )?;
    }
    for e in events {
        writeln!(
            writer,
            "{},{},{},{},{},{},{},{},{},{}",
            subject_id,
            e.au,
            e.onset_time,
            e.apex_time,
            e.offset_time,
            e.onset_intensity,
            e.apex_intensity,
            e.offset_intensity,
            e.rise_rate,
            e.fall_rate
        )?;
    }
    Ok(())
}
