//! Stimulus alignment, prototype ranking, and aggregate metrics.
//!
//! For a schedule of m stimuli, the responses to stimuli 1..m-1 form the
//! training pair (the gestures whose feature vectors are averaged into a
//! prototype) and the response to stimulus m is the prediction target.
//! Candidates are all of the subject's gestures except the training
//! responses; the target's position in the distance-ranked candidate
//! list is its rank.

use serde::Serialize;
use thiserror::Error;

use crate::gesture::{FacialGesture, FeatureVector};
use crate::ingest::StimulusSchedule;

/// Default one-sided response window after each stimulus, in seconds.
pub const DEFAULT_RESPONSE_WINDOW: f64 = 2.0;

/// Evaluation mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Subject-dependent: prototype from the subject's own training
    /// responses.
    Sd,
    /// Subject-independent: prototype pooled over every subject's
    /// training responses.
    Si,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Sd => write!(f, "sd"),
            Mode::Si => write!(f, "si"),
        }
    }
}

/// Errors from ranking and aggregation.
#[derive(Debug, Error)]
pub enum PredictError {
    #[error("empty vector list")]
    EmptyList,
    #[error("vector length mismatch: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("no candidates to rank")]
    EmptyCandidates,
    #[error("no included subjects to aggregate")]
    NoIncludedSubjects,
}

/// Which gesture, if any, answered each stimulus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StimulusAlignment {
    /// One entry per stimulus: the matched gesture_id, or None.
    pub matched: Vec<Option<usize>>,
    pub response_window: f64,
}

impl StimulusAlignment {
    /// True when every stimulus found a response.
    pub fn is_complete(&self) -> bool {
        self.matched.iter().all(|m| m.is_some())
    }
}

/// Match gestures to stimuli. For each stimulus in order, candidates are
/// the still-unmatched gestures whose apex lies in
/// `[stimulus, stimulus + window]`; the earliest apex wins, lowest
/// gesture_id on exact ties. The window is one-sided: a gesture peaking
/// before the stimulus is never matched to it.
pub fn align_stimuli(
    gestures: &[FacialGesture],
    schedule: &StimulusSchedule,
    window: f64,
) -> StimulusAlignment {
    let mut taken = vec![false; gestures.len()];
    let mut matched = Vec::with_capacity(schedule.stimulus_times.len());
    for &stimulus in &schedule.stimulus_times {
        let mut best: Option<usize> = None;
        for (idx, gesture) in gestures.iter().enumerate() {
            if taken[idx]
                || gesture.apex_time < stimulus
                || gesture.apex_time > stimulus + window
            {
                continue;
            }
            best = match best {
                None => Some(idx),
                Some(current) => {
                    if gesture.apex_time < gestures[current].apex_time
                        || (gesture.apex_time == gestures[current].apex_time
                            && gesture.gesture_id < gestures[current].gesture_id)
                    {
                        Some(idx)
                    } else {
                        Some(current)
                    }
                }
            };
        }
        if let Some(idx) = best {
            taken[idx] = true;
            matched.push(Some(gestures[idx].gesture_id));
        } else {
            matched.push(None);
        }
    }
    StimulusAlignment { matched, response_window: window }
}

/// Coordinate-wise arithmetic mean of feature vectors.
pub fn prototype_mean(vectors: &[&FeatureVector]) -> Result<FeatureVector, PredictError> {
    let first = vectors.first().ok_or(PredictError::EmptyList)?;
    let len = first.len();
    for v in vectors {
        if v.len() != len {
            return Err(PredictError::LengthMismatch { a: len, b: v.len() });
        }
    }
    let mut sums = vec![0.0; len];
    for v in vectors {
        for (s, x) in sums.iter_mut().zip(v.values()) {
            *s += x;
        }
    }
    let n = vectors.len() as f64;
    Ok(FeatureVector::from_values(
        sums.into_iter().map(|s| s / n).collect(),
    ))
}

/// One entry of a ranked candidate list.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedCandidate {
    pub gesture_id: usize,
    pub distance: f64,
}

/// Order candidates by ascending Euclidean distance to the prototype;
/// ties break toward the earlier apex time, then the lower gesture_id.
pub fn rank_candidates(
    prototype: &FeatureVector,
    candidates: &[&FacialGesture],
) -> Result<Vec<RankedCandidate>, PredictError> {
    if candidates.is_empty() {
        return Err(PredictError::EmptyCandidates);
    }
    for c in candidates {
        if c.features.len() != prototype.len() {
            return Err(PredictError::LengthMismatch {
                a: prototype.len(),
                b: c.features.len(),
            });
        }
    }
    let mut scored: Vec<(&&FacialGesture, f64)> = candidates
        .iter()
        .map(|g| (g, prototype.distance(&g.features)))
        .collect();
    scored.sort_by(|(ga, da), (gb, db)| {
        da.total_cmp(db)
            .then_with(|| ga.apex_time.total_cmp(&gb.apex_time))
            .then_with(|| ga.gesture_id.cmp(&gb.gesture_id))
    });
    Ok(scored
        .into_iter()
        .map(|(g, distance)| RankedCandidate { gesture_id: g.gesture_id, distance })
        .collect())
}

/// Outcome of evaluating one subject in one mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubjectResult {
    pub subject_id: String,
    pub mode: Mode,
    pub excluded: bool,
    pub exclusion_reason: Option<String>,
    /// 1-based rank of the target response among the candidates.
    pub rank_of_gamma: Option<usize>,
    pub candidate_count: Option<usize>,
    pub ranked: Vec<RankedCandidate>,
}

impl SubjectResult {
    fn excluded(subject_id: &str, mode: Mode, reason: String) -> Self {
        Self {
            subject_id: subject_id.to_string(),
            mode,
            excluded: true,
            exclusion_reason: Some(reason),
            rank_of_gamma: None,
            candidate_count: None,
            ranked: Vec::new(),
        }
    }
}

fn exclusion_for(alignment: &StimulusAlignment) -> Option<String> {
    if alignment.matched.len() < 2 {
        return Some(format!(
            "needs at least 2 stimuli, schedule has {}",
            alignment.matched.len()
        ));
    }
    for (i, m) in alignment.matched.iter().enumerate() {
        if m.is_none() {
            return Some(format!("no significant facial response to stimulus {}", i + 1));
        }
    }
    None
}

fn rank_target(
    subject_id: &str,
    mode: Mode,
    gestures: &[FacialGesture],
    alignment: &StimulusAlignment,
    prototype: &FeatureVector,
) -> SubjectResult {
    let matched: Vec<usize> = alignment.matched.iter().map(|m| m.unwrap()).collect();
    let (target, training) = matched.split_last().unwrap();
    let candidates: Vec<&FacialGesture> = gestures
        .iter()
        .filter(|g| !training.contains(&g.gesture_id))
        .collect();
    let ranked = match rank_candidates(prototype, &candidates) {
        Ok(r) => r,
        Err(_) => {
            return SubjectResult::excluded(subject_id, mode, "no candidate gestures".into())
        }
    };
    let rank = ranked
        .iter()
        .position(|c| c.gesture_id == *target)
        .map(|p| p + 1)
        .expect("target response is always in the candidate set");
    SubjectResult {
        subject_id: subject_id.to_string(),
        mode,
        excluded: false,
        exclusion_reason: None,
        rank_of_gamma: Some(rank),
        candidate_count: Some(ranked.len()),
        ranked,
    }
}

/// Subject-dependent evaluation: prototype from the subject's own
/// training responses. Gestures must already be featurized under the
/// subject's own normalization scope.
pub fn evaluate_subject_sd(
    subject_id: &str,
    gestures: &[FacialGesture],
    alignment: &StimulusAlignment,
) -> SubjectResult {
    if let Some(reason) = exclusion_for(alignment) {
        return SubjectResult::excluded(subject_id, Mode::Sd, reason);
    }
    let matched: Vec<usize> = alignment.matched.iter().map(|m| m.unwrap()).collect();
    let (_, training) = matched.split_last().unwrap();
    let training_vectors: Vec<&FeatureVector> = gestures
        .iter()
        .filter(|g| training.contains(&g.gesture_id))
        .map(|g| &g.features)
        .collect();
    let prototype = prototype_mean(&training_vectors)
        .expect("training responses exist when alignment is complete");
    rank_target(subject_id, Mode::Sd, gestures, alignment, &prototype)
}

/// Subject-independent evaluation: ranks against a prototype pooled over
/// all subjects' training responses. Gestures and the pooled prototype
/// must share the pooled normalization scope.
pub fn evaluate_subject_si(
    subject_id: &str,
    gestures: &[FacialGesture],
    alignment: &StimulusAlignment,
    pooled_prototype: &FeatureVector,
) -> SubjectResult {
    if let Some(reason) = exclusion_for(alignment) {
        return SubjectResult::excluded(subject_id, Mode::Si, reason);
    }
    rank_target(subject_id, Mode::Si, gestures, alignment, pooled_prototype)
}

/// Collect every subject's training-response vectors into the pooled
/// prototype used by subject-independent evaluation. Subjects with an
/// incomplete alignment contribute nothing.
pub fn pooled_prototype(
    subjects: &[(&[FacialGesture], &StimulusAlignment)],
) -> Result<FeatureVector, PredictError> {
    let mut vectors: Vec<&FeatureVector> = Vec::new();
    for (gestures, alignment) in subjects {
        if exclusion_for(alignment).is_some() {
            continue;
        }
        let matched: Vec<usize> = alignment.matched.iter().map(|m| m.unwrap()).collect();
        let (_, training) = matched.split_last().unwrap();
        for g in gestures.iter() {
            if training.contains(&g.gesture_id) {
                vectors.push(&g.features);
            }
        }
    }
    prototype_mean(&vectors)
}

/// One extra Top-k cutoff and the fraction of subjects within it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopKStat {
    pub k: usize,
    pub pct: f64,
}

/// Aggregate rank statistics over the included subjects of one mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub mode: Mode,
    /// Percent of included subjects with rank <= 2.
    pub top2_pct: f64,
    /// Percent of included subjects with rank <= 10.
    pub top10_pct: f64,
    /// Percent with rank <= max(1, round(0.15 * candidate_count)),
    /// cut per subject.
    pub top15pct_pct: f64,
    /// Median rank (midpoint of the middle two for even counts).
    pub median_rank: f64,
    pub median_candidate_count: f64,
    pub included_subjects: usize,
    pub excluded_subjects: usize,
    /// Extra Top-k cutoffs requested via configuration.
    pub topk: Vec<TopKStat>,
}

fn median(sorted: &[f64]) -> f64 {
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    }
}

/// Reduce per-subject results to Top-k percentages and median rank.
/// Percentages are exact here; rounding happens only at display time.
pub fn aggregate_metrics(
    results: &[SubjectResult],
    mode: Mode,
    extra_topk: &[usize],
) -> Result<MetricsReport, PredictError> {
    let included: Vec<&SubjectResult> = results.iter().filter(|r| !r.excluded).collect();
    let excluded_subjects = results.len() - included.len();
    if included.is_empty() {
        return Err(PredictError::NoIncludedSubjects);
    }

    let n = included.len() as f64;
    let pct_with = |pred: &dyn Fn(&SubjectResult) -> bool| -> f64 {
        included.iter().filter(|r| pred(r)).count() as f64 / n * 100.0
    };
    let rank = |r: &SubjectResult| r.rank_of_gamma.unwrap();
    let count = |r: &SubjectResult| r.candidate_count.unwrap();

    let top2_pct = pct_with(&|r| rank(r) <= 2);
    let top10_pct = pct_with(&|r| rank(r) <= 10);
    let top15pct_pct = pct_with(&|r| {
        let cutoff = ((0.15 * count(r) as f64).round() as usize).max(1);
        rank(r) <= cutoff
    });

    let mut ranks: Vec<f64> = included.iter().map(|r| rank(r) as f64).collect();
    ranks.sort_by(f64::total_cmp);
    let mut counts: Vec<f64> = included.iter().map(|r| count(r) as f64).collect();
    counts.sort_by(f64::total_cmp);

    let topk = extra_topk
        .iter()
        .map(|&k| TopKStat { k, pct: pct_with(&|r| rank(r) <= k) })
        .collect();

    Ok(MetricsReport {
        mode,
        top2_pct,
        top10_pct,
        top15pct_pct,
        median_rank: median(&ranks),
        median_candidate_count: median(&counts),
        included_subjects: included.len(),
        excluded_subjects,
        topk,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::au::ActionUnit;
    use crate::events::AUEvent;
    use crate::gesture::{FEATURES_PER_AU, FEATURE_LEN};

    fn gesture(id: usize, apex_time: f64, features: Vec<f64>) -> FacialGesture {
        FacialGesture {
            gesture_id: id,
            subject_id: "S01".into(),
            member_events: vec![AUEvent {
                au: ActionUnit::Au12,
                onset_time: apex_time - 0.3,
                apex_time,
                offset_time: apex_time + 0.3,
                onset_intensity: 0.5,
                apex_intensity: 3.0,
                offset_intensity: 0.5,
                rise_rate: 1.0,
                fall_rate: 1.0,
            }],
            start_time: apex_time - 0.3,
            apex_time,
            end_time: apex_time + 0.3,
            features: FeatureVector::from_values(features),
        }
    }

    fn feat(seed: f64) -> Vec<f64> {
        (0..FEATURE_LEN).map(|i| (seed + i as f64 * 0.01) % 1.0).collect()
    }

    fn schedule(times: Vec<f64>) -> StimulusSchedule {
        StimulusSchedule::new("S01", times).unwrap()
    }

    #[test]
    fn align_picks_earliest_apex_in_window() {
        let gestures = vec![gesture(0, 10.5, feat(0.1)), gesture(1, 11.5, feat(0.2))];
        let alignment = align_stimuli(&gestures, &schedule(vec![10.0]), 2.0);
        assert_eq!(alignment.matched, vec![Some(0)]);
    }

    #[test]
    fn align_misses_when_nothing_in_window() {
        let gestures = vec![gesture(0, 12.5, feat(0.1))];
        let alignment = align_stimuli(&gestures, &schedule(vec![10.0]), 2.0);
        assert_eq!(alignment.matched, vec![None]);
        assert!(!alignment.is_complete());
    }

    #[test]
    fn align_window_is_one_sided() {
        let gestures = vec![gesture(0, 9.9, feat(0.1)), gesture(1, 10.6, feat(0.2))];
        let alignment = align_stimuli(&gestures, &schedule(vec![10.0]), 2.0);
        assert_eq!(alignment.matched, vec![Some(1)]);
    }

    #[test]
    fn align_never_reuses_a_gesture() {
        let gestures = vec![gesture(0, 10.5, feat(0.1))];
        let alignment = align_stimuli(&gestures, &schedule(vec![10.0, 10.2]), 2.0);
        assert_eq!(alignment.matched, vec![Some(0), None]);
    }

    #[test]
    fn prototype_of_identical_vectors_is_identity() {
        let v = FeatureVector::from_values(feat(0.3));
        let mean = prototype_mean(&[&v, &v]).unwrap();
        assert_eq!(mean, v);
    }

    #[test]
    fn prototype_of_zeros_and_ones_is_half() {
        let zeros = FeatureVector::from_values(vec![0.0; 4]);
        let ones = FeatureVector::from_values(vec![1.0; 4]);
        let mean = prototype_mean(&[&zeros, &ones]).unwrap();
        assert_eq!(mean.values(), &[0.5, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn prototype_rejects_empty_and_mismatched() {
        assert!(matches!(prototype_mean(&[]), Err(PredictError::EmptyList)));
        let a = FeatureVector::from_values(vec![0.0; 4]);
        let b = FeatureVector::from_values(vec![0.0; 5]);
        assert!(matches!(
            prototype_mean(&[&a, &b]),
            Err(PredictError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn rank_zero_distance_first() {
        let proto = FeatureVector::from_values(feat(0.3));
        let same = gesture(0, 5.0, feat(0.3));
        let far = gesture(1, 6.0, feat(0.9));
        let ranked = rank_candidates(&proto, &[&far, &same]).unwrap();
        assert_eq!(ranked[0].gesture_id, 0);
        assert!(ranked[0].distance < 1e-12);
        assert!(ranked[1].distance > 0.0);
    }

    #[test]
    fn rank_orders_near_before_far() {
        let proto = FeatureVector::from_values(vec![0.0; 4]);
        let near = gesture(0, 5.0, vec![1.0, 0.0, 0.0, 0.0]);
        let far = gesture(1, 6.0, vec![2.0, 0.0, 0.0, 0.0]);
        let ranked = rank_candidates(&proto, &[&far, &near]).unwrap();
        assert_eq!(ranked[0].gesture_id, 0);
        assert_eq!(ranked[1].gesture_id, 1);
    }

    #[test]
    fn rank_tie_breaks_by_apex_time() {
        let proto = FeatureVector::from_values(vec![0.0; 4]);
        let late = gesture(0, 7.0, vec![1.0, 0.0, 0.0, 0.0]);
        let early = gesture(1, 5.0, vec![0.0, 1.0, 0.0, 0.0]);
        let ranked = rank_candidates(&proto, &[&late, &early]).unwrap();
        assert_eq!(ranked[0].gesture_id, 1);
    }

    #[test]
    fn rank_rejects_empty_candidates() {
        let proto = FeatureVector::from_values(vec![0.0; 4]);
        assert!(matches!(
            rank_candidates(&proto, &[]),
            Err(PredictError::EmptyCandidates)
        ));
    }

    #[test]
    fn sd_noise_free_target_ranks_first() {
        // Target's vector equals the mean of the training pair exactly.
        let alpha = feat(0.2);
        let beta = feat(0.4);
        let gamma: Vec<f64> = alpha.iter().zip(&beta).map(|(a, b)| (a + b) / 2.0).collect();
        let gestures = vec![
            gesture(0, 10.5, alpha),
            gesture(1, 20.5, beta),
            gesture(2, 30.5, gamma),
            gesture(3, 5.0, feat(0.8)),
            gesture(4, 40.0, feat(0.05)),
        ];
        let alignment = align_stimuli(&gestures, &schedule(vec![10.0, 20.0, 30.0]), 2.0);
        assert!(alignment.is_complete());
        let result = evaluate_subject_sd("S01", &gestures, &alignment);
        assert_eq!(result.rank_of_gamma, Some(1));
        assert_eq!(result.candidate_count, Some(3));
    }

    #[test]
    fn sd_degenerate_three_gestures_rank_one() {
        let gestures = vec![
            gesture(0, 10.5, feat(0.2)),
            gesture(1, 20.5, feat(0.4)),
            gesture(2, 30.5, feat(0.6)),
        ];
        let alignment = align_stimuli(&gestures, &schedule(vec![10.0, 20.0, 30.0]), 2.0);
        let result = evaluate_subject_sd("S01", &gestures, &alignment);
        assert_eq!(result.candidate_count, Some(1));
        assert_eq!(result.rank_of_gamma, Some(1));
    }

    #[test]
    fn incomplete_alignment_yields_excluded_result() {
        let gestures = vec![gesture(0, 10.5, feat(0.2))];
        let alignment = align_stimuli(&gestures, &schedule(vec![10.0, 20.0, 30.0]), 2.0);
        let result = evaluate_subject_sd("S01", &gestures, &alignment);
        assert!(result.excluded);
        assert!(result
            .exclusion_reason
            .as_deref()
            .unwrap()
            .contains("stimulus 2"));
        assert_eq!(result.rank_of_gamma, None);
    }

    #[test]
    fn si_uses_pooled_prototype() {
        let gestures = vec![
            gesture(0, 10.5, feat(0.2)),
            gesture(1, 20.5, feat(0.4)),
            gesture(2, 30.5, feat(0.3)),
            gesture(3, 40.5, feat(0.9)),
        ];
        let alignment = align_stimuli(&gestures, &schedule(vec![10.0, 20.0, 30.0]), 2.0);
        let pooled =
            pooled_prototype(&[(&gestures, &alignment)]).unwrap();
        let result = evaluate_subject_si("S01", &gestures, &alignment, &pooled);
        assert!(!result.excluded);
        assert_eq!(result.candidate_count, Some(2));
    }

    #[test]
    fn aggregate_matches_hand_computed_example() {
        let mk = |rank: usize| SubjectResult {
            subject_id: format!("S{rank}"),
            mode: Mode::Sd,
            excluded: false,
            exclusion_reason: None,
            rank_of_gamma: Some(rank),
            candidate_count: Some(48),
            ranked: Vec::new(),
        };
        let results = vec![mk(1), mk(3), mk(20)];
        let metrics = aggregate_metrics(&results, Mode::Sd, &[]).unwrap();
        assert!((metrics.top2_pct - 100.0 / 3.0).abs() < 1e-9);
        assert!((metrics.top10_pct - 200.0 / 3.0).abs() < 1e-9);
        // Cutoff is max(1, round(0.15 * 48)) = 7, so ranks 1 and 3 qualify.
        assert!((metrics.top15pct_pct - 200.0 / 3.0).abs() < 1e-9);
        assert_eq!(metrics.median_rank, 3.0);
        assert_eq!(metrics.median_candidate_count, 48.0);
    }

    #[test]
    fn aggregate_single_subject_all_hundred() {
        let result = SubjectResult {
            subject_id: "S01".into(),
            mode: Mode::Si,
            excluded: false,
            exclusion_reason: None,
            rank_of_gamma: Some(1),
            candidate_count: Some(5),
            ranked: Vec::new(),
        };
        let metrics = aggregate_metrics(&[result], Mode::Si, &[]).unwrap();
        assert_eq!(metrics.top2_pct, 100.0);
        assert_eq!(metrics.top10_pct, 100.0);
        assert_eq!(metrics.top15pct_pct, 100.0);
        assert_eq!(metrics.median_rank, 1.0);
    }

    #[test]
    fn median_of_even_count_is_midpoint() {
        assert_eq!(median(&[4.0, 25.0]), 14.5);
        assert_eq!(median(&[1.0, 2.0, 3.0]), 2.0);
    }

    #[test]
    fn aggregate_without_included_subjects_errors() {
        let excluded = SubjectResult::excluded("S01", Mode::Sd, "no response".into());
        assert!(matches!(
            aggregate_metrics(&[excluded], Mode::Sd, &[]),
            Err(PredictError::NoIncludedSubjects)
        ));
    }

    #[test]
    fn cohort_shape_echo_nineteen_subjects_median_48() {
        let results: Vec<SubjectResult> = (0..19)
            .map(|i| SubjectResult {
                subject_id: format!("S{i:02}"),
                mode: Mode::Sd,
                excluded: false,
                exclusion_reason: None,
                rank_of_gamma: Some(i + 1),
                candidate_count: Some(48),
                ranked: Vec::new(),
            })
            .collect();
        let metrics = aggregate_metrics(&results, Mode::Sd, &[]).unwrap();
        assert_eq!(metrics.included_subjects, 19);
        assert_eq!(metrics.median_candidate_count, 48.0);
    }

    #[test]
    fn extra_topk_entries_reported() {
        let mk = |rank: usize| SubjectResult {
            subject_id: format!("S{rank}"),
            mode: Mode::Sd,
            excluded: false,
            exclusion_reason: None,
            rank_of_gamma: Some(rank),
            candidate_count: Some(48),
            ranked: Vec::new(),
        };
        let results = vec![mk(1), mk(5)];
        let metrics = aggregate_metrics(&results, Mode::Sd, &[1, 5]).unwrap();
        assert_eq!(metrics.topk.len(), 2);
        assert_eq!(metrics.topk[0].k, 1);
        assert_eq!(metrics.topk[0].pct, 50.0);
        assert_eq!(metrics.topk[1].pct, 100.0);
    }

    #[test]
    fn adding_farther_candidate_never_improves_rank() {
        let proto = FeatureVector::from_values(vec![0.0; 4]);
        let target = gesture(0, 5.0, vec![1.0, 0.0, 0.0, 0.0]);
        let near = gesture(1, 6.0, vec![0.5, 0.0, 0.0, 0.0]);
        let base = rank_candidates(&proto, &[&target, &near]).unwrap();
        let rank_before = base.iter().position(|c| c.gesture_id == 0).unwrap();
        let farther = gesture(2, 7.0, vec![9.0, 0.0, 0.0, 0.0]);
        let extended = rank_candidates(&proto, &[&target, &near, &farther]).unwrap();
        let rank_after = extended.iter().position(|c| c.gesture_id == 0).unwrap();
        assert_eq!(rank_before, rank_after);
        assert_eq!(extended.len(), base.len() + 1);
    }
}
