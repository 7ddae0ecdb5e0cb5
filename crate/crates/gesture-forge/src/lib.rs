//! # gesture-forge
//!
//! A batch toolkit that turns per-frame facial Action Unit intensity
//! traces into predictions about stimulus-locked responses:
//!
//! 1. **Ingest** — parse extractor CSV traces and stimulus schedules,
//!    clamp and interpolate bad frames ([`ingest`]).
//! 2. **Detect** — segment each AU channel into events with onset, apex,
//!    offset and rise/fall rates ([`events`]).
//! 3. **Cluster** — group events that start and peak close together in
//!    time via affinity propagation ([`cluster`]).
//! 4. **Assemble** — turn clusters into Facial Gestures with fixed
//!    85-dimensional feature vectors ([`gesture`]).
//! 5. **Predict** — align gestures to stimuli, average the early
//!    responses into a prototype, and rank the remaining gestures by
//!    distance to it, subject-dependent or subject-independent
//!    ([`predict`]).
//!
//! A seeded synthetic cohort generator ([`synth`]) provides ground-truth
//! data for testing, and [`pipeline`] wires the stages behind the
//! `gesture-forge` command-line tool.
//!
//! Start with the runnable examples:
//!
//! ```bash
//! cargo run --example parse_traces
//! cargo run --example detect_events
//! cargo run --example cluster_events
//! cargo run --example build_gestures
//! cargo run --example rank_responses
//! cargo run --example synth_cohort
//! cargo run --example sd_vs_si
//! ```

pub mod au;
pub mod cluster;
pub mod config;
pub mod events;
pub mod gesture;
pub mod ingest;
pub mod pipeline;
pub mod predict;
pub mod report;
pub mod synth;

pub use au::ActionUnit;
pub use cluster::{
    affinity_propagation, brute_force_optimal, build_temporal_similarity, net_similarity,
    ApParams, Clustering, SimilarityMatrix,
};
pub use config::{ModeSelection, RunConfig};
pub use events::{detect_events, smooth_series, AUEvent, DetectionParams};
pub use gesture::{
    assemble_gestures, featurize_all, featurize_gesture, normalize_cohort, FacialGesture,
    FeatureVector, NormalizationContext, FEATURES_PER_AU, FEATURE_LEN,
};
pub use ingest::{
    parse_au_csv, parse_stimulus_schedule, validate_trace, StimulusSchedule, SubjectTrace,
    ValidatedTrace,
};
pub use pipeline::run_evaluate;
pub use predict::{
    aggregate_metrics, align_stimuli, prototype_mean, rank_candidates, MetricsReport, Mode,
    SubjectResult,
};
pub use synth::{generate_cohort, generate_subject_trace, CohortConfig, SubjectProfile};
