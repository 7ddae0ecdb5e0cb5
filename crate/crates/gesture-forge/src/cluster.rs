//! Exemplar-based clustering by affinity propagation.
//!
//! Points exchange two kinds of messages over a similarity matrix:
//! responsibilities r(i,k), how suited k is to serve as exemplar for i
//! given other candidates, and availabilities a(i,k), how appropriate it
//! would be for i to pick k given the support k gathers from other
//! points. Both are damped between iterations. Points whose self
//! responsibility plus self availability is positive become exemplars;
//! everyone else joins the most similar exemplar.
//!
//! All argmax choices resolve toward the lowest index so that a given
//! input always produces bit-identical output.

use std::io::Write;

use thiserror::Error;

use crate::events::AUEvent;

/// Errors from similarity construction and clustering.
#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("damping must satisfy 0.5 <= damping < 1.0, got {0}")]
    InvalidDamping(f64),
    #[error("empty input: no points to cluster")]
    EmptyInput,
    #[error("invalid assignment: point {point} names non-exemplar {target}")]
    InvalidAssignment { point: usize, target: usize },
    #[error("assignment length {got} does not match matrix size {expected}")]
    AssignmentLength { got: usize, expected: usize },
    #[error("exhaustive search supports at most {max} points, got {got}")]
    TooManyPoints { got: usize, max: usize },
    #[error("similarity contains a non-finite entry at ({row}, {col})")]
    NonFiniteSimilarity { row: usize, col: usize },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// A dense n-by-n similarity matrix; `get(i, k)` reads the suitability of
/// point k as the exemplar for point i. The diagonal holds each point's
/// preference for becoming an exemplar itself.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    /// Build from a row-major value buffer of length `n * n`.
    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self, ClusterError> {
        assert_eq!(values.len(), n * n, "similarity buffer must be n*n");
        for (idx, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(ClusterError::NonFiniteSimilarity { row: idx / n, col: idx % n });
            }
        }
        Ok(Self { n, values })
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.n + k]
    }

    /// The diagonal entry: point i's exemplar preference.
    pub fn preference(&self, i: usize) -> f64 {
        self.get(i, i)
    }

    /// Overwrite every diagonal entry with one shared preference.
    pub fn set_preference(&mut self, preference: f64) {
        for i in 0..self.n {
            self.values[i * self.n + i] = preference;
        }
    }

    /// Median of the off-diagonal entries (midpoint of the middle two for
    /// even counts); 0 for a single point.
    pub fn median_off_diagonal(&self) -> f64 {
        let mut off: Vec<f64> = Vec::with_capacity(self.n * self.n - self.n);
        for i in 0..self.n {
            for k in 0..self.n {
                if i != k {
                    off.push(self.get(i, k));
                }
            }
        }
        if off.is_empty() {
            return 0.0;
        }
        off.sort_by(f64::total_cmp);
        let mid = off.len() / 2;
        if off.len() % 2 == 1 {
            off[mid]
        } else {
            (off[mid - 1] + off[mid]) / 2.0
        }
    }
}

/// Similarity of two events by how close together they start and peak:
/// the negated sum of squared onset and apex time differences, in
/// seconds squared. The diagonal preference defaults to the median
/// off-diagonal similarity; pass `preference` to override it.
pub fn build_temporal_similarity(
    events: &[AUEvent],
    preference: Option<f64>,
) -> Result<SimilarityMatrix, ClusterError> {
    if events.is_empty() {
        return Err(ClusterError::EmptyInput);
    }
    let n = events.len();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            if i == k {
                continue;
            }
            let d_onset = events[i].onset_time - events[k].onset_time;
            let d_apex = events[i].apex_time - events[k].apex_time;
            values[i * n + k] = -(d_onset * d_onset + d_apex * d_apex);
        }
    }
    let mut matrix = SimilarityMatrix::from_values(n, values)?;
    let pref = preference.unwrap_or_else(|| matrix.median_off_diagonal());
    matrix.set_preference(pref);
    Ok(matrix)
}

/// Affinity propagation knobs. Defaults mirror the common reference
/// settings: damping 0.5, 200 iterations, 15-iteration stability window.
#[derive(Debug, Clone, PartialEq)]
pub struct ApParams {
    pub damping: f64,
    pub max_iter: usize,
    pub convergence_iter: usize,
    /// Record per-iteration exemplar count and net similarity; costs an
    /// extra assignment pass per iteration.
    pub record_history: bool,
}

impl Default for ApParams {
    fn default() -> Self {
        Self {
            damping: 0.5,
            max_iter: 200,
            convergence_iter: 15,
            record_history: false,
        }
    }
}

/// One diagnostic sample of the message-passing loop.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationStat {
    pub iteration: usize,
    pub exemplar_count: usize,
    /// Net similarity of the current assignment; NaN while no exemplar
    /// has emerged.
    pub net_similarity: f64,
}

/// Result of a clustering run.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// For each point, the index of its exemplar (exemplars point to
    /// themselves).
    pub exemplar_of: Vec<usize>,
    /// Sorted unique exemplar indices.
    pub exemplars: Vec<usize>,
    pub converged: bool,
    pub iterations_run: usize,
    pub net_similarity: f64,
    /// Per-iteration diagnostics; empty unless requested.
    pub history: Vec<IterationStat>,
}

impl Clustering {
    /// Number of clusters.
    pub fn cluster_count(&self) -> usize {
        self.exemplars.len()
    }

    /// Indices of the points assigned to `exemplar`.
    pub fn members_of(&self, exemplar: usize) -> Vec<usize> {
        self.exemplar_of
            .iter()
            .enumerate()
            .filter_map(|(i, e)| (*e == exemplar).then_some(i))
            .collect()
    }
}

/// Sum of each point's similarity to its exemplar; exemplars contribute
/// their diagonal preference. Rejects assignments where a point names a
/// target that is not its own exemplar.
pub fn net_similarity(
    matrix: &SimilarityMatrix,
    exemplar_of: &[usize],
) -> Result<f64, ClusterError> {
    if exemplar_of.len() != matrix.len() {
        return Err(ClusterError::AssignmentLength {
            got: exemplar_of.len(),
            expected: matrix.len(),
        });
    }
    for (point, &target) in exemplar_of.iter().enumerate() {
        if exemplar_of[target] != target {
            return Err(ClusterError::InvalidAssignment { point, target });
        }
    }
    Ok(exemplar_of
        .iter()
        .enumerate()
        .map(|(i, &e)| matrix.get(i, e))
        .sum())
}

/// Run affinity propagation over a similarity matrix.
///
/// Stops once the exemplar set has been stable for
/// `convergence_iter` consecutive iterations, or at `max_iter` with
/// `converged = false`. If no exemplar ever emerges, the point with the
/// highest preference (lowest index on ties) becomes the sole exemplar.
pub fn affinity_propagation(
    matrix: &SimilarityMatrix,
    params: &ApParams,
) -> Result<Clustering, ClusterError> {
    if !(0.5..1.0).contains(&params.damping) {
        return Err(ClusterError::InvalidDamping(params.damping));
    }
    let n = matrix.len();
    if n == 0 {
        return Err(ClusterError::EmptyInput);
    }
    if n == 1 {
        return Ok(Clustering {
            exemplar_of: vec![0],
            exemplars: vec![0],
            converged: true,
            iterations_run: 0,
            net_similarity: matrix.preference(0),
            history: Vec::new(),
        });
    }

    let damping = params.damping;
    let keep = 1.0 - damping;
    let mut responsibility = vec![0.0; n * n];
    let mut availability = vec![0.0; n * n];
    let mut history = Vec::new();

    let mut prev_indicator = vec![false; n];
    let mut stable_streak = 0usize;
    let mut iterations_run = 0;
    let mut converged = false;

    for iteration in 0..params.max_iter {
        iterations_run = iteration + 1;

        // Responsibilities: r(i,k) <- s(i,k) - max_{k' != k} [a(i,k') + s(i,k')].
        for i in 0..n {
            let row = i * n;
            let mut best = f64::NEG_INFINITY;
            let mut best_idx = 0;
            let mut second = f64::NEG_INFINITY;
            for k in 0..n {
                let v = availability[row + k] + matrix.get(i, k);
                if v > best {
                    second = best;
                    best = v;
                    best_idx = k;
                } else if v > second {
                    second = v;
                }
            }
            for k in 0..n {
                let competing = if k == best_idx { second } else { best };
                let raw = matrix.get(i, k) - competing;
                responsibility[row + k] = damping * responsibility[row + k] + keep * raw;
            }
        }

        // Availabilities: a(i,k) <- min(0, r(k,k) + sum_{i' not in {i,k}} max(0, r(i',k)));
        // a(k,k) <- sum_{i' != k} max(0, r(i',k)).
        for k in 0..n {
            let mut positive_sum = 0.0;
            for i in 0..n {
                if i != k {
                    positive_sum += responsibility[i * n + k].max(0.0);
                }
            }
            let self_resp = responsibility[k * n + k];
            for i in 0..n {
                let raw = if i == k {
                    positive_sum
                } else {
                    let without_i = positive_sum - responsibility[i * n + k].max(0.0);
                    (self_resp + without_i).min(0.0)
                };
                availability[i * n + k] = damping * availability[i * n + k] + keep * raw;
            }
        }

        let indicator: Vec<bool> = (0..n)
            .map(|k| responsibility[k * n + k] + availability[k * n + k] > 0.0)
            .collect();

        if params.record_history {
            let exemplars = indicator_to_exemplars(&indicator);
            let (count, net) = if exemplars.is_empty() {
                (0, f64::NAN)
            } else {
                let assignment = assign_to_exemplars(matrix, &exemplars);
                let net = net_similarity(matrix, &assignment)?;
                (exemplars.len(), net)
            };
            history.push(IterationStat {
                iteration: iterations_run,
                exemplar_count: count,
                net_similarity: net,
            });
        }

        if indicator == prev_indicator {
            stable_streak += 1;
            if stable_streak >= params.convergence_iter {
                converged = true;
                break;
            }
        } else {
            stable_streak = 1;
            prev_indicator = indicator;
        }
    }

    let mut exemplars = indicator_to_exemplars(&prev_indicator);
    if exemplars.is_empty() {
        // No exemplar emerged: fall back to the highest-preference point.
        let mut best = 0;
        for k in 1..n {
            if matrix.preference(k) > matrix.preference(best) {
                best = k;
            }
        }
        exemplars = vec![best];
    }
    let exemplar_of = assign_to_exemplars(matrix, &exemplars);
    let net = net_similarity(matrix, &exemplar_of)?;
    Ok(Clustering {
        exemplar_of,
        exemplars,
        converged,
        iterations_run,
        net_similarity: net,
        history,
    })
}

fn indicator_to_exemplars(indicator: &[bool]) -> Vec<usize> {
    indicator
        .iter()
        .enumerate()
        .filter_map(|(k, is_exemplar)| is_exemplar.then_some(k))
        .collect()
}

/// Assign every point to its most similar exemplar (lowest index on
/// ties); exemplars assign to themselves.
fn assign_to_exemplars(matrix: &SimilarityMatrix, exemplars: &[usize]) -> Vec<usize> {
    let n = matrix.len();
    let mut assignment = Vec::with_capacity(n);
    for i in 0..n {
        if exemplars.contains(&i) {
            assignment.push(i);
            continue;
        }
        let mut best = exemplars[0];
        for &e in &exemplars[1..] {
            if matrix.get(i, e) > matrix.get(i, best) {
                best = e;
            }
        }
        assignment.push(best);
    }
    assignment
}

/// Exhaustive search over every nonempty exemplar subset, maximizing net
/// similarity. Only feasible for small inputs; limited to 20 points.
pub fn brute_force_optimal(matrix: &SimilarityMatrix) -> Result<Clustering, ClusterError> {
    const MAX_POINTS: usize = 20;
    let n = matrix.len();
    if n == 0 {
        return Err(ClusterError::EmptyInput);
    }
    if n > MAX_POINTS {
        return Err(ClusterError::TooManyPoints { got: n, max: MAX_POINTS });
    }

    let mut best_net = f64::NEG_INFINITY;
    let mut best_exemplars = Vec::new();
    for mask in 1u32..(1u32 << n) {
        let exemplars: Vec<usize> = (0..n).filter(|&k| mask & (1 << k) != 0).collect();
        let mut net = 0.0;
        for i in 0..n {
            if exemplars.contains(&i) {
                net += matrix.preference(i);
            } else {
                let mut best = f64::NEG_INFINITY;
                for &e in &exemplars {
                    let s = matrix.get(i, e);
                    if s > best {
                        best = s;
                    }
                }
                net += best;
            }
        }
        if net > best_net {
            best_net = net;
            best_exemplars = exemplars;
        }
    }

    let exemplar_of = assign_to_exemplars(matrix, &best_exemplars);
    Ok(Clustering {
        exemplar_of,
        exemplars: best_exemplars,
        converged: true,
        iterations_run: 0,
        net_similarity: best_net,
        history: Vec::new(),
    })
}

/// Dump per-iteration diagnostics as CSV for convergence plots.
pub fn write_convergence_csv<W: Write>(
    writer: &mut W,
    history: &[IterationStat],
) -> Result<(), ClusterError> {
    writeln!(writer, "iteration,exemplar_count,net_similarity")?;
    for stat in history {
        writeln!(
            writer,
            "{},{},{}",
            stat.iteration, stat.exemplar_count, stat.net_similarity
        )?;
    }
    Ok(())
}
