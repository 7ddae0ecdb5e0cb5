//! Assembly of clustered AU events into Facial Gestures and their
//! fixed-length feature encoding.
//!
//! A gesture's feature vector has 85 entries: for each of the 17 AUs in
//! canonical order, `[presence, apex_intensity / 5, duration_norm,
//! rise_norm, fall_norm]`. Duration, rise and fall are min-max
//! normalized against a [`NormalizationContext`] built from a cohort of
//! gestures; absent AUs contribute five zeros. The layout is fixed so
//! serialized vectors stay comparable across runs.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::au::ActionUnit;
use crate::cluster::Clustering;
use crate::events::AUEvent;

/// Entries per AU slot in a feature vector.
pub const FEATURES_PER_AU: usize = 5;
/// Total feature vector length (17 AUs x 5 entries).
pub const FEATURE_LEN: usize = ActionUnit::ALL.len() * FEATURES_PER_AU;

/// Errors from gesture assembly and featurization.
#[derive(Debug, Error)]
pub enum GestureError {
    #[error("event count {events} does not match assignment length {assignments}")]
    MismatchedSizes { events: usize, assignments: usize },
    #[error("empty cohort: no gestures to normalize over")]
    EmptyCohort,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Fixed-length encoding of one gesture.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    /// The all-zero vector.
    pub fn zeros() -> Self {
        Self(vec![0.0; FEATURE_LEN])
    }

    /// Wrap raw values; callers must supply the canonical layout.
    pub fn from_values(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Euclidean distance to another vector of the same length.
    pub fn distance(&self, other: &FeatureVector) -> f64 {
        debug_assert_eq!(self.0.len(), other.0.len());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// A cluster of co-occurring AU events.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FacialGesture {
    /// Zero-based index in start-time order within the subject.
    pub gesture_id: usize,
    pub subject_id: String,
    pub member_events: Vec<AUEvent>,
    /// Earliest member onset.
    pub start_time: f64,
    /// Median of member apex times (midpoint for even counts).
    pub apex_time: f64,
    /// Latest member offset.
    pub end_time: f64,
    /// Filled by [`featurize_all`]; zeros until then.
    pub features: FeatureVector,
}

impl FacialGesture {
    /// The distinct AUs present among member events.
    pub fn member_aus(&self) -> Vec<ActionUnit> {
        let mut aus: Vec<ActionUnit> = self.member_events.iter().map(|e| e.au).collect();
        aus.sort_unstable();
        aus.dedup();
        aus
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct MinMax {
    min: f64,
    max: f64,
}

impl MinMax {
    fn observe(&mut self, v: f64, first: bool) {
        if first {
            self.min = v;
            self.max = v;
        } else {
            self.min = self.min.min(v);
            self.max = self.max.max(v);
        }
    }

    fn normalize(&self, v: f64) -> f64 {
        if self.max > self.min {
            ((v - self.min) / (self.max - self.min)).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }
}

/// Per-feature min/max ranges for duration, rise and fall, computed over
/// every member event of the gestures in scope. Build one per subject
/// for subject-dependent evaluation, or one over the pooled cohort for
/// subject-independent evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationContext {
    duration: MinMax,
    rise: MinMax,
    fall: MinMax,
}

impl NormalizationContext {
    /// Scan all member events of `gestures` for feature ranges.
    pub fn from_gestures(gestures: &[FacialGesture]) -> Result<Self, GestureError> {
        Self::from_gesture_iter(gestures.iter())
    }

    /// Like [`Self::from_gestures`] but over any gesture iterator, e.g.
    /// a pooled multi-subject cohort.
    pub fn from_gesture_iter<'a>(
        gestures: impl Iterator<Item = &'a FacialGesture>,
    ) -> Result<Self, GestureError> {
        let mut ctx = Self {
            duration: MinMax::default(),
            rise: MinMax::default(),
            fall: MinMax::default(),
        };
        let mut first = true;
        for gesture in gestures {
            for event in &gesture.member_events {
                ctx.duration.observe(event.duration(), first);
                ctx.rise.observe(event.rise_rate, first);
                ctx.fall.observe(event.fall_rate, first);
                first = false;
            }
        }
        if first {
            return Err(GestureError::EmptyCohort);
        }
        Ok(ctx)
    }
}

/// Alias for [`NormalizationContext::from_gestures`], named for the
/// pipeline stage it implements.
pub fn normalize_cohort(gestures: &[FacialGesture]) -> Result<NormalizationContext, GestureError> {
    NormalizationContext::from_gestures(gestures)
}

/// Group events by their clustering exemplar into gestures, sorted by
/// start time, with `gesture_id` equal to the position in that order.
pub fn assemble_gestures(
    subject_id: &str,
    events: &[AUEvent],
    clustering: &Clustering,
) -> Result<Vec<FacialGesture>, GestureError> {
    if events.len() != clustering.exemplar_of.len() {
        return Err(GestureError::MismatchedSizes {
            events: events.len(),
            assignments: clustering.exemplar_of.len(),
        });
    }

    let mut gestures = Vec::with_capacity(clustering.exemplars.len());
    for &exemplar in &clustering.exemplars {
        let members: Vec<AUEvent> = clustering
            .members_of(exemplar)
            .into_iter()
            .map(|i| events[i].clone())
            .collect();
        let start_time = members
            .iter()
            .map(|e| e.onset_time)
            .fold(f64::INFINITY, f64::min);
        let end_time = members
            .iter()
            .map(|e| e.offset_time)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut apexes: Vec<f64> = members.iter().map(|e| e.apex_time).collect();
        apexes.sort_by(f64::total_cmp);
        let mid = apexes.len() / 2;
        let apex_time = if apexes.len() % 2 == 1 {
            apexes[mid]
        } else {
            (apexes[mid - 1] + apexes[mid]) / 2.0
        };
        gestures.push((
            exemplar,
            FacialGesture {
                gesture_id: 0,
                subject_id: subject_id.to_string(),
                member_events: members,
                start_time,
                apex_time,
                end_time,
                features: FeatureVector::zeros(),
            },
        ));
    }

    gestures.sort_by(|(ea, a), (eb, b)| {
        a.start_time.total_cmp(&b.start_time).then(ea.cmp(eb))
    });
    Ok(gestures
        .into_iter()
        .enumerate()
        .map(|(id, (_, mut g))| {
            g.gesture_id = id;
            g
        })
        .collect())
}

/// Encode one gesture against a normalization context. When a gesture
/// holds several events of the same AU, the highest-apex event (earliest
/// onset on ties) fills that AU's slot.
pub fn featurize_gesture(gesture: &FacialGesture, ctx: &NormalizationContext) -> FeatureVector {
    let mut values = vec![0.0; FEATURE_LEN];
    for (slot, au) in ActionUnit::ALL.iter().enumerate() {
        let representative = gesture
            .member_events
            .iter()
            .filter(|e| e.au == *au)
            .max_by(|a, b| {
                a.apex_intensity
                    .total_cmp(&b.apex_intensity)
                    .then(b.onset_time.total_cmp(&a.onset_time))
            });
        let Some(event) = representative else { continue };
        let base = slot * FEATURES_PER_AU;
        values[base] = 1.0;
        values[base + 1] = (event.apex_intensity / 5.0).clamp(0.0, 1.0);
        values[base + 2] = ctx.duration.normalize(event.duration());
        values[base + 3] = ctx.rise.normalize(event.rise_rate);
        values[base + 4] = ctx.fall.normalize(event.fall_rate);
    }
    FeatureVector(values)
}

/// Featurize every gesture in place under one shared context.
pub fn featurize_all(gestures: &mut [FacialGesture], ctx: &NormalizationContext) {
    for gesture in gestures.iter_mut() {
        gesture.features = featurize_gesture(gesture, ctx);
    }
}

/// Dump gestures with their member AU list, times and feature values.
pub fn write_gestures_csv<W: Write>(
    writer: &mut W,
    gestures: &[FacialGesture],
    include_header: bool,
) -> Result<(), GestureError> {
    if include_header {
        write!(writer, "subject_id,gesture_id,member_aus,start_s,apex_s,end_s")?;
        for au in ActionUnit::ALL {
            for suffix in ["presence", "apex", "duration", "rise", "fall"] {
                write!(writer, ",{au}_{suffix}")?;
            }
        }
        writeln!(writer)?;
    }
    for g in gestures {
        let aus: Vec<String> = g.member_aus().iter().map(|a| a.to_string()).collect();
        write!(
            writer,
            "{},{},{},{},{},{}",
            g.subject_id,
            g.gesture_id,
            aus.join("|"),
            g.start_time,
            g.apex_time,
            g.end_time
        )?;
        for v in g.features.values() {
            write!(writer, ",{v}")?;
        }
        writeln!(writer)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::Clustering;

    fn event(au: ActionUnit, onset: f64, apex: f64, offset: f64, apex_i: f64) -> AUEvent {
        AUEvent {
            au,
            onset_time: onset,
            apex_time: apex,
            offset_time: offset,
            onset_intensity: 0.5,
            apex_intensity: apex_i,
            offset_intensity: 0.5,
            rise_rate: if apex > onset { (apex_i - 0.5) / (apex - onset) } else { 0.0 },
            fall_rate: if offset > apex { (apex_i - 0.5) / (offset - apex) } else { 0.0 },
        }
    }

    fn clustering(exemplar_of: Vec<usize>) -> Clustering {
        let mut exemplars: Vec<usize> = exemplar_of
            .iter()
            .copied()
            .filter(|&e| exemplar_of[e] == e)
            .collect();
        exemplars.sort_unstable();
        exemplars.dedup();
        Clustering {
            exemplar_of,
            exemplars,
            converged: true,
            iterations_run: 1,
            net_similarity: 0.0,
            history: Vec::new(),
        }
    }

    #[test]
    fn single_cluster_gesture_spans_members() {
        let events = vec![
            event(ActionUnit::Au01, 1.0, 1.3, 1.8, 2.0),
            event(ActionUnit::Au12, 1.1, 1.4, 2.0, 3.0),
            event(ActionUnit::Au04, 1.2, 1.5, 1.9, 1.5),
        ];
        let gestures = assemble_gestures("S01", &events, &clustering(vec![0, 0, 0])).unwrap();
        assert_eq!(gestures.len(), 1);
        let g = &gestures[0];
        assert_eq!(g.member_events.len(), 3);
        assert_eq!(g.start_time, 1.0);
        assert_eq!(g.end_time, 2.0);
        assert!((g.apex_time - 1.4).abs() < 1e-12);
    }

    #[test]
    fn singleton_clusters_sorted_by_onset() {
        let events = vec![
            event(ActionUnit::Au01, 5.0, 5.3, 5.8, 2.0),
            event(ActionUnit::Au12, 1.0, 1.4, 2.0, 3.0),
        ];
        let gestures = assemble_gestures("S01", &events, &clustering(vec![0, 1])).unwrap();
        assert_eq!(gestures.len(), 2);
        assert_eq!(gestures[0].start_time, 1.0);
        assert_eq!(gestures[0].gesture_id, 0);
        assert_eq!(gestures[1].start_time, 5.0);
        assert_eq!(gestures[1].gesture_id, 1);
    }

    #[test]
    fn start_time_is_min_onset_across_members() {
        let events = vec![
            event(ActionUnit::Au01, 1.0, 1.3, 1.8, 2.0),
            event(ActionUnit::Au12, 0.5, 1.4, 2.2, 3.0),
        ];
        let gestures = assemble_gestures("S01", &events, &clustering(vec![0, 0])).unwrap();
        assert_eq!(gestures[0].start_time, 0.5);
        assert_eq!(gestures[0].end_time, 2.2);
    }

    #[test]
    fn mismatched_sizes_rejected() {
        let events = vec![event(ActionUnit::Au01, 1.0, 1.3, 1.8, 2.0)];
        assert!(matches!(
            assemble_gestures("S01", &events, &clustering(vec![0, 1])),
            Err(GestureError::MismatchedSizes { .. })
        ));
    }

    #[test]
    fn featurize_fills_expected_slot() {
        let events = vec![
            event(ActionUnit::Au12, 1.0, 1.5, 2.0, 3.0),
            event(ActionUnit::Au12, 10.0, 10.2, 10.4, 3.0),
        ];
        let mut gestures =
            assemble_gestures("S01", &events, &clustering(vec![0, 1])).unwrap();
        let ctx = normalize_cohort(&gestures).unwrap();
        featurize_all(&mut gestures, &ctx);

        // First gesture's AU12 duration (1.0 s) is the cohort max.
        let slot = ActionUnit::Au12.canonical_index() * FEATURES_PER_AU;
        let v = gestures[0].features.values();
        assert_eq!(v[slot], 1.0);
        assert!((v[slot + 1] - 0.6).abs() < 1e-12);
        assert!((v[slot + 2] - 1.0).abs() < 1e-12);
        // Every other AU slot is all zero.
        for (i, value) in v.iter().enumerate() {
            if !(slot..slot + FEATURES_PER_AU).contains(&i) {
                assert_eq!(*value, 0.0, "entry {i} should be zero");
            }
        }
    }

    #[test]
    fn degenerate_range_normalizes_to_zero() {
        let events = vec![event(ActionUnit::Au12, 1.0, 1.5, 2.0, 3.0)];
        let mut gestures = assemble_gestures("S01", &events, &clustering(vec![0])).unwrap();
        let ctx = normalize_cohort(&gestures).unwrap();
        featurize_all(&mut gestures, &ctx);
        let slot = ActionUnit::Au12.canonical_index() * FEATURES_PER_AU;
        let v = gestures[0].features.values();
        assert_eq!(v[slot + 2], 0.0);
        assert_eq!(v[slot + 3], 0.0);
        assert_eq!(v[slot + 4], 0.0);
    }

    #[test]
    fn duplicate_au_resolved_by_higher_apex() {
        let weak = event(ActionUnit::Au12, 1.0, 1.5, 2.0, 2.0);
        let strong = event(ActionUnit::Au12, 1.2, 1.6, 2.1, 4.0);
        let events = vec![weak, strong];
        let mut gestures = assemble_gestures("S01", &events, &clustering(vec![0, 0])).unwrap();
        let ctx = normalize_cohort(&gestures).unwrap();
        featurize_all(&mut gestures, &ctx);
        let slot = ActionUnit::Au12.canonical_index() * FEATURES_PER_AU;
        assert!((gestures[0].features.values()[slot + 1] - 0.8).abs() < 1e-12);
        assert_eq!(gestures[0].member_events.len(), 2);
    }

    #[test]
    fn normalization_scopes_differ_across_subjects() {
        let short = vec![event(ActionUnit::Au12, 1.0, 1.2, 1.4, 3.0)];
        let long = vec![event(ActionUnit::Au12, 1.0, 2.0, 3.0, 3.0)];
        let subject_a = assemble_gestures("A", &short, &clustering(vec![0])).unwrap();
        let subject_b = assemble_gestures("B", &long, &clustering(vec![0])).unwrap();
        let sd_a = normalize_cohort(&subject_a).unwrap();
        let pooled: Vec<FacialGesture> =
            subject_a.iter().chain(&subject_b).cloned().collect();
        let si = normalize_cohort(&pooled).unwrap();
        assert_ne!(sd_a, si);
    }

    #[test]
    fn normalization_example_duration_midpoint() {
        let gestures = vec![
            assemble_gestures(
                "S01",
                &[event(ActionUnit::Au12, 0.0, 0.25, 0.5, 3.0)],
                &clustering(vec![0]),
            )
            .unwrap()
            .remove(0),
            assemble_gestures(
                "S01",
                &[event(ActionUnit::Au12, 2.0, 2.75, 3.5, 3.0)],
                &clustering(vec![0]),
            )
            .unwrap()
            .remove(0),
        ];
        let ctx = normalize_cohort(&gestures).unwrap();
        // Durations are {0.5, 1.5}; a 1.0 s duration sits at 0.5.
        assert!((ctx.duration.normalize(1.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empty_cohort_rejected() {
        assert!(matches!(
            normalize_cohort(&[]),
            Err(GestureError::EmptyCohort)
        ));
    }

    #[test]
    fn featurize_independent_of_member_order() {
        let a = event(ActionUnit::Au01, 1.0, 1.3, 1.8, 2.0);
        let b = event(ActionUnit::Au12, 1.1, 1.4, 2.0, 3.0);
        let mut forward =
            assemble_gestures("S01", &[a.clone(), b.clone()], &clustering(vec![0, 0])).unwrap();
        let mut reversed = assemble_gestures("S01", &[b, a], &clustering(vec![0, 0])).unwrap();
        let ctx = normalize_cohort(&forward).unwrap();
        featurize_all(&mut forward, &ctx);
        featurize_all(&mut reversed, &ctx);
        assert_eq!(forward[0].features, reversed[0].features);
    }

    #[test]
    fn gestures_csv_includes_feature_columns() {
        let events = vec![event(ActionUnit::Au12, 1.0, 1.5, 2.0, 3.0)];
        let mut gestures = assemble_gestures("S01", &events, &clustering(vec![0])).unwrap();
        let ctx = normalize_cohort(&gestures).unwrap();
        featurize_all(&mut gestures, &ctx);
        let mut buf = Vec::new();
        write_gestures_csv(&mut buf, &gestures, true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(header.split(',').count(), 6 + FEATURE_LEN);
        assert!(header.contains("AU12_presence"));
    }
}
