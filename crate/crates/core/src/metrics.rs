//! Utility-loss metrics comparing an anonymized log against its original,
//! plus diagnostics of the learned event distance and of how concentrated
//! each activity's followers are.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::embedding::EmbeddingModel;
use crate::error::{Error, Result};
use crate::eventlog::{ActivityId, EventLog, Trace};

/// How often one activity (indirectly) follows or precedes another across
/// the traces that contain the first one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelationLabel {
    Always,
    Sometimes,
    Never,
}

/// Directly-follows counts of one log, keyed by activity labels so matrices
/// from independently parsed logs stay comparable.
#[derive(Debug, Clone, Default)]
pub struct DFMatrix {
    counts: HashMap<(String, String), u64>,
    total: u64,
}

impl DFMatrix {
    pub fn build(log: &EventLog) -> Self {
        let mut counts: HashMap<(String, String), u64> = HashMap::new();
        let mut total = 0;
        for trace in &log.traces {
            for pair in trace.events.windows(2) {
                let a = log.activities.label(pair[0].activity).to_string();
                let b = log.activities.label(pair[1].activity).to_string();
                *counts.entry((a, b)).or_default() += 1;
                total += 1;
            }
        }
        Self { counts, total }
    }

    pub fn count(&self, a: &str, b: &str) -> u64 {
        self.counts
            .get(&(a.to_string(), b.to_string()))
            .copied()
            .unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn relations(&self) -> impl Iterator<Item = (&(String, String), u64)> {
        self.counts.iter().map(|(k, &v)| (k, v))
    }
}

/// All utility and diagnostic figures for one anonymization run.
#[derive(Debug, Clone)]
pub struct MetricReport {
    pub behavioural_appropriateness: f64,
    /// Percentage in [0, 100].
    pub truly_sampled_score: f64,
    pub total_duration_error: f64,
    /// The original log had zero total duration; the error is absolute.
    pub duration_error_is_absolute: bool,
    pub event_distance_avg: Option<f64>,
    pub event_distance_stdev: Option<f64>,
    /// x → median share (percentage) of each activity's top-x followers.
    pub top_x_follower_share: BTreeMap<usize, f64>,
}

/// Eventually-follows pairs of one trace: (a, b) is present when some b
/// occurs at a strictly later position than some a.
fn eventually_follows_pairs(trace: &Trace) -> HashSet<(ActivityId, ActivityId)> {
    let mut pairs = HashSet::new();
    let mut seen_after: HashSet<ActivityId> = HashSet::new();
    for event in trace.events.iter().rev() {
        for &later in &seen_after {
            pairs.insert((event.activity, later));
        }
        seen_after.insert(event.activity);
    }
    pairs
}

/// Per-log relation statistics over a fixed label universe: how many traces
/// contain each activity, and how many of those realize each eventually-
/// follows pair. `None` entries mark universe activities absent from the log.
struct RelationStats {
    /// traces containing activity i (universe index), or None if absent from
    /// the log's vocabulary entirely.
    containing: Vec<Option<u64>>,
    follows: HashMap<(usize, usize), u64>,
}

impl RelationStats {
    fn build(log: &EventLog, universe: &[String]) -> Self {
        let to_universe: HashMap<ActivityId, usize> = universe
            .iter()
            .enumerate()
            .filter_map(|(u, label)| log.activities.id_of(label).map(|id| (id, u)))
            .collect();
        let mut containing = vec![0u64; universe.len()];
        let mut present = vec![false; universe.len()];
        for (_, &u) in &to_universe {
            present[u] = true;
        }
        let mut follows: HashMap<(usize, usize), u64> = HashMap::new();
        for trace in &log.traces {
            let mut in_trace: HashSet<usize> = HashSet::new();
            for event in &trace.events {
                if let Some(&u) = to_universe.get(&event.activity) {
                    in_trace.insert(u);
                }
            }
            for &u in &in_trace {
                containing[u] += 1;
            }
            for (a, b) in eventually_follows_pairs(trace) {
                if let (Some(&ua), Some(&ub)) = (to_universe.get(&a), to_universe.get(&b)) {
                    *follows.entry((ua, ub)).or_default() += 1;
                }
            }
        }
        let containing = containing
            .into_iter()
            .zip(present)
            .map(|(n, p)| if p { Some(n) } else { None })
            .collect();
        Self { containing, follows }
    }

    /// Label of "b eventually follows a" over traces containing a; `None`
    /// when a never occurs (including absence from the vocabulary).
    fn follows_label(&self, a: usize, b: usize) -> Option<RelationLabel> {
        let n = self.containing[a]?;
        if n == 0 {
            return None;
        }
        let hits = self.follows.get(&(a, b)).copied().unwrap_or(0);
        Some(if hits == n {
            RelationLabel::Always
        } else if hits == 0 {
            RelationLabel::Never
        } else {
            RelationLabel::Sometimes
        })
    }

    /// Label of "b eventually precedes a": some b strictly earlier than
    /// some a, over traces containing a.
    fn precedes_label(&self, a: usize, b: usize) -> Option<RelationLabel> {
        let n = self.containing[a]?;
        if n == 0 {
            return None;
        }
        let hits = self.follows.get(&(b, a)).copied().unwrap_or(0);
        Some(if hits == n {
            RelationLabel::Always
        } else if hits == 0 {
            RelationLabel::Never
        } else {
            RelationLabel::Sometimes
        })
    }
}

/// Share of indirect follows/precedes relations whose {always, sometimes,
/// never} label survives anonymization, over the original log's activity
/// universe. 1 means every relation label matches.
///
/// An activity absent from the anonymized log has no labels; its pairs only
/// match when the original label is absence-based too.
pub fn behavioural_appropriateness(original: &EventLog, anonymized: &EventLog) -> Result<f64> {
    if original.traces.is_empty() {
        return Err(Error::EmptyLog);
    }
    let universe = original.activities.labels().to_vec();
    if universe.len() < 2 {
        // A single activity admits no ordered pairs; nothing can disagree.
        return Ok(1.0);
    }
    let orig = RelationStats::build(original, &universe);
    let anon = RelationStats::build(anonymized, &universe);
    let mut matches = 0u64;
    for a in 0..universe.len() {
        for b in 0..universe.len() {
            if a == b {
                continue;
            }
            if orig.follows_label(a, b) == anon.follows_label(a, b) {
                matches += 1;
            }
            if orig.precedes_label(a, b) == anon.precedes_label(a, b) {
                matches += 1;
            }
        }
    }
    let pairs = (universe.len() * (universe.len() - 1)) as f64;
    Ok(matches as f64 / (2.0 * pairs))
}

/// Percentage of the original log's directly-follows relations whose
/// frequency survives anonymization once the anonymized counts are rescaled
/// to the original log's size; `epsilon` is the relative tolerance.
///
/// Relations whose rescaled expectation falls below one observation are
/// counted as sampled when the anonymized log has at most one.
pub fn truly_sampled_score(
    original: &EventLog,
    anonymized: &EventLog,
    epsilon: f64,
) -> Result<f64> {
    if epsilon < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be nonnegative, got {epsilon}"
        )));
    }
    let orig = DFMatrix::build(original);
    if orig.total() == 0 {
        return Err(Error::NoDirectlyFollows);
    }
    let anon = DFMatrix::build(anonymized);
    let scale = anon.total() as f64 / orig.total() as f64;
    let mut sampled = 0u64;
    let mut relations = 0u64;
    for ((a, b), count) in orig.relations() {
        relations += 1;
        let expected = scale * count as f64;
        let observed = anon.count(a, b);
        let ok = if expected < 1.0 {
            observed <= 1
        } else {
            (observed as f64 - expected).abs() <= epsilon * expected
        };
        if ok {
            sampled += 1;
        }
    }
    Ok(100.0 * sampled as f64 / relations as f64)
}

/// Change in summed event durations, relative to the original total. When
/// the original total is zero the error is returned as an absolute value,
/// flagged by the second component.
pub fn total_duration_error(original: &EventLog, anonymized: &EventLog) -> (f64, bool) {
    let orig = log_duration(original);
    let anon = log_duration(anonymized);
    if orig == 0.0 {
        (anon, true)
    } else {
        ((anon - orig).abs() / orig, false)
    }
}

fn log_duration(log: &EventLog) -> f64 {
    if log.durations_annotated() {
        return log.total_duration_secs();
    }
    log.traces
        .iter()
        .filter(|t| t.len() > 1)
        .map(|t| {
            let span = t.events[t.len() - 1]
                .timestamp
                .signed_duration_since(t.events[0].timestamp);
            (span.num_milliseconds() as f64 / 1000.0).max(0.0)
        })
        .sum()
}

/// Mean and population standard deviation of the event distance over all
/// unordered pairs of distinct vocabulary activities.
pub fn event_distance_stats(model: &EmbeddingModel) -> Result<(f64, f64)> {
    let n = model.vocab().len();
    if n < 2 {
        return Err(Error::SingletonVocab);
    }
    let mut distances = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            distances.push(model.event_distance(&model.vocab()[i], &model.vocab()[j])?);
        }
    }
    let count = distances.len() as f64;
    let avg = distances.iter().sum::<f64>() / count;
    let variance = distances.iter().map(|d| (d - avg).powi(2)).sum::<f64>() / count;
    Ok((avg, variance.sqrt()))
}

/// For each requested x: the median, over activities with at least one
/// directly-follows successor, of the share their x most frequent successors
/// take of all their successor observations. Percentages.
pub fn top_x_follower_share(log: &EventLog, xs: &[usize]) -> Result<BTreeMap<usize, f64>> {
    let matrix = DFMatrix::build(log);
    if matrix.total() == 0 {
        return Err(Error::NoDirectlyFollows);
    }
    let mut successors: HashMap<&str, Vec<u64>> = HashMap::new();
    for ((a, _), count) in matrix.relations() {
        successors.entry(a).or_default().push(count);
    }
    let shares_per_activity: Vec<Vec<f64>> = {
        // Sort activities for a deterministic median over ties.
        let mut keys: Vec<&&str> = successors.keys().collect();
        keys.sort();
        keys.iter()
            .map(|&&a| {
                let mut counts = successors[a].clone();
                counts.sort_unstable_by(|x, y| y.cmp(x));
                let total: u64 = counts.iter().sum();
                xs.iter()
                    .map(|&x| {
                        let top: u64 = counts.iter().take(x).sum();
                        100.0 * top as f64 / total as f64
                    })
                    .collect()
            })
            .collect()
    };
    let mut result = BTreeMap::new();
    for (xi, &x) in xs.iter().enumerate() {
        let mut shares: Vec<f64> = shares_per_activity.iter().map(|s| s[xi]).collect();
        shares.sort_by(|a, b| a.partial_cmp(b).expect("shares are finite"));
        result.insert(x, median_of_sorted(&shares));
    }
    Ok(result)
}

fn median_of_sorted(values: &[f64]) -> f64 {
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    }
}

/// Computes every metric of [`MetricReport`] in one pass. The embedding
/// diagnostics are filled only when a model is supplied.
pub fn evaluate(
    original: &EventLog,
    anonymized: &EventLog,
    model: Option<&EmbeddingModel>,
    epsilon: f64,
    xs: &[usize],
) -> Result<MetricReport> {
    let (total_duration_error, duration_error_is_absolute) =
        total_duration_error(original, anonymized);
    let (event_distance_avg, event_distance_stdev) = match model {
        Some(m) => {
            let (avg, stdev) = event_distance_stats(m)?;
            (Some(avg), Some(stdev))
        }
        None => (None, None),
    };
    Ok(MetricReport {
        behavioural_appropriateness: behavioural_appropriateness(original, anonymized)?,
        truly_sampled_score: truly_sampled_score(original, anonymized, epsilon)?,
        total_duration_error,
        duration_error_is_absolute,
        event_distance_avg,
        event_distance_stdev,
        top_x_follower_share: top_x_follower_share(original, xs)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eventlog::fixtures::{table1_columns, table1_log};
    use crate::eventlog::parse_csv;

    fn log_of(rows: &[(&str, &str, u32)]) -> EventLog {
        let mut csv = String::from("case,activity,timestamp\n");
        for (c, a, minute) in rows {
            csv.push_str(&format!(
                "{c},{a},2024-01-01 {:02}:{:02}\n",
                8 + minute / 60,
                minute % 60
            ));
        }
        parse_csv(csv.as_bytes(), &table1_columns())
            .unwrap()
            .with_durations()
    }

    #[test]
    fn df_matrix_counts_consecutive_pairs_and_self_loops() {
        let log = log_of(&[
            ("1", "A", 0),
            ("1", "A", 1),
            ("1", "B", 2),
            ("2", "A", 0),
            ("2", "B", 1),
        ]);
        let matrix = DFMatrix::build(&log);
        assert_eq!(matrix.count("A", "A"), 1);
        assert_eq!(matrix.count("A", "B"), 2);
        assert_eq!(matrix.count("B", "A"), 0);
        assert_eq!(matrix.total(), 3);
    }

    #[test]
    fn appropriateness_of_identical_logs_is_one() {
        let log = table1_log();
        assert_eq!(behavioural_appropriateness(&log, &log).unwrap(), 1.0);
    }

    #[test]
    fn appropriateness_of_fully_disagreeing_logs_is_zero() {
        let original = log_of(&[("1", "A", 0), ("1", "B", 1)]);
        let reversed = log_of(&[("1", "B", 0), ("1", "A", 1)]);
        assert_eq!(behavioural_appropriateness(&original, &reversed).unwrap(), 0.0);
    }

    #[test]
    fn appropriateness_of_the_dropped_branch_example() {
        // Original {<A,B>, <A,C>} vs anonymized {<A,B>}: by exhaustive label
        // enumeration, 2 of 6 follows labels and 4 of 6 precedes labels
        // match (C's pairs are absence-mismatches), giving 6/12.
        let original = log_of(&[("1", "A", 0), ("1", "B", 1), ("2", "A", 0), ("2", "C", 1)]);
        let anonymized = log_of(&[("1", "A", 0), ("1", "B", 1)]);
        assert_eq!(
            behavioural_appropriateness(&original, &anonymized).unwrap(),
            0.5
        );
    }

    #[test]
    fn appropriateness_requires_a_nonempty_original() {
        let empty = EventLog::from_traces(Vec::new(), Default::default()).unwrap();
        let log = table1_log();
        assert!(matches!(
            behavioural_appropriateness(&empty, &log),
            Err(Error::EmptyLog)
        ));
    }

    #[test]
    fn sampling_score_of_identical_logs_is_hundred() {
        let log = table1_log();
        assert_eq!(truly_sampled_score(&log, &log, 0.1).unwrap(), 100.0);
    }

    #[test]
    fn sampling_score_with_every_relation_missing_is_zero() {
        let original = log_of(&[("1", "A", 0), ("1", "B", 1), ("1", "C", 2)]);
        let anonymized = log_of(&[("1", "D", 0), ("1", "E", 1), ("1", "F", 2)]);
        assert_eq!(truly_sampled_score(&original, &anonymized, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn sampling_score_of_the_halved_log_example() {
        // Original counts {(A,B): 10, (B,C): 10}, anonymized {(A,B): 10}.
        // The scale factor is 0.5, so both relations expect 5 observations:
        // (A,B) has 10 and (B,C) has 0, both outside the 10% band - 0%.
        let mut rows = Vec::new();
        for i in 0..10 {
            let case = format!("c{i}");
            rows.push((case.clone(), "A".to_string(), 0));
            rows.push((case.clone(), "B".to_string(), 1));
            rows.push((case, "C".to_string(), 2));
        }
        let mut csv = String::from("case,activity,timestamp\n");
        for (c, a, minute) in &rows {
            csv.push_str(&format!("{c},{a},2024-01-01 08:{minute:02}\n"));
        }
        let original = parse_csv(csv.as_bytes(), &table1_columns()).unwrap();
        let mut csv = String::from("case,activity,timestamp\n");
        for i in 0..10 {
            csv.push_str(&format!("c{i},A,2024-01-01 08:00\n"));
            csv.push_str(&format!("c{i},B,2024-01-01 08:01\n"));
        }
        let anonymized = parse_csv(csv.as_bytes(), &table1_columns()).unwrap();
        assert_eq!(truly_sampled_score(&original, &anonymized, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn sampling_score_is_invariant_under_uniform_duplication() {
        let original = table1_log();
        let mut csv = String::from("case,activity,timestamp\n");
        for copy in 0..3 {
            for line in crate::eventlog::fixtures::TABLE1_CSV.lines().skip(1) {
                let (case, rest) = line.split_once(',').unwrap();
                csv.push_str(&format!("{case}_{copy},{rest}\n"));
            }
        }
        let tripled = parse_csv(csv.as_bytes(), &table1_columns()).unwrap();
        assert_eq!(truly_sampled_score(&original, &tripled, 0.1).unwrap(), 100.0);
    }

    #[test]
    fn sampling_score_small_expectation_rule() {
        // Original: (A,B) once, (C,D) nine times. With two anonymized
        // relations the scale is 0.2: (A,B) expects 0.2 < 1 and its single
        // observation passes; (C,D) expects 1.8 and its single observation
        // misses the band - 50%.
        let mut rows = vec![("r1", "A", 0), ("r1", "B", 1)];
        let cases = ["c1", "c2", "c3", "c4", "c5", "c6", "c7", "c8", "c9"];
        for case in cases {
            rows.push((case, "C", 0));
            rows.push((case, "D", 1));
        }
        let original = log_of(&rows);
        let anonymized = log_of(&[("r1", "A", 0), ("r1", "B", 1), ("c1", "C", 0), ("c1", "D", 1)]);
        assert_eq!(truly_sampled_score(&original, &anonymized, 0.1).unwrap(), 50.0);

        // Two observations of a sub-one expectation overshoot the rule.
        let doubled = log_of(&[
            ("r1", "A", 0), ("r1", "B", 1),
            ("r2", "A", 0), ("r2", "B", 1),
            ("c1", "C", 0), ("c1", "D", 1),
        ]);
        assert_eq!(truly_sampled_score(&original, &doubled, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn sampling_score_needs_directly_follows_pairs() {
        let singletons = log_of(&[("1", "A", 0), ("2", "B", 0)]);
        let log = table1_log();
        assert!(matches!(
            truly_sampled_score(&singletons, &log, 0.1),
            Err(Error::NoDirectlyFollows)
        ));
    }

    #[test]
    fn duration_error_examples() {
        let log = table1_log().with_durations();
        assert_eq!(total_duration_error(&log, &log), (0.0, false));

        // Truncating every trace to its first event removes all duration.
        let first_only = log_of(&[("1", "A", 0), ("2", "B", 0), ("3", "C", 0)]);
        assert_eq!(total_duration_error(&log, &first_only), (1.0, false));

        // Removing the last loan event (46 minutes) from the 509-minute
        // total: 2760 / 30540.
        let mut csv = String::new();
        for line in crate::eventlog::fixtures::TABLE1_CSV.lines().take(12) {
            csv.push_str(line);
            csv.push('\n');
        }
        let trimmed = parse_csv(csv.as_bytes(), &table1_columns())
            .unwrap()
            .with_durations();
        let (error, absolute) = total_duration_error(&log, &trimmed);
        assert!(!absolute);
        assert!((error - 2760.0 / 30540.0).abs() < 1e-12);
    }

    #[test]
    fn zero_duration_original_falls_back_to_absolute_error() {
        let flat = log_of(&[("1", "A", 0), ("1", "B", 0)]);
        let slow = log_of(&[("1", "A", 0), ("1", "B", 5)]);
        assert_eq!(total_duration_error(&flat, &slow), (300.0, true));
    }

    #[test]
    fn event_distance_stats_examples() {
        use crate::embedding::EmbeddingModel;
        let orthogonal = EmbeddingModel::from_parts(
            vec!["a".into(), "b".into()],
            2,
            vec![1.0, 0.0, 0.0, 1.0],
            vec![0.0; 4],
            false,
        );
        assert_eq!(event_distance_stats(&orthogonal).unwrap(), (1.0, 0.0));

        // Three unit vectors with pairwise cosines 0.5, 0.0, -0.5, i.e.
        // distances {0.5, 1.0, 1.5}: mean 1, stdev sqrt(1/6).
        let third = 1.0 / 3.0f64;
        let trio = EmbeddingModel::from_parts(
            vec!["a".into(), "b".into(), "c".into()],
            3,
            vec![
                1.0, 0.0, 0.0,
                0.5, 0.75f64.sqrt(), 0.0,
                0.0, -third.sqrt(), (2.0 * third).sqrt(),
            ],
            vec![0.0; 9],
            false,
        );
        let (avg, stdev) = event_distance_stats(&trio).unwrap();
        assert!((avg - 1.0).abs() < 1e-12, "avg = {avg}");
        assert!((stdev - (1.0f64 / 6.0).sqrt()).abs() < 1e-12, "stdev = {stdev}");
    }

    #[test]
    fn event_distance_stats_rejects_singleton_vocab() {
        use crate::embedding::EmbeddingModel;
        let single = EmbeddingModel::from_parts(
            vec!["only".into()],
            2,
            vec![1.0, 0.0],
            vec![0.0, 0.0],
            false,
        );
        assert!(matches!(
            event_distance_stats(&single),
            Err(Error::SingletonVocab)
        ));
    }

    #[test]
    fn follower_share_of_single_successor_chains_is_total() {
        let log = log_of(&[("1", "A", 0), ("1", "B", 1), ("1", "C", 2)]);
        let shares = top_x_follower_share(&log, &[1]).unwrap();
        assert_eq!(shares[&1], 100.0);
    }

    #[test]
    fn follower_share_of_a_three_to_one_split() {
        let log = log_of(&[
            ("1", "A", 0), ("1", "B", 1),
            ("2", "A", 0), ("2", "B", 1),
            ("3", "A", 0), ("3", "B", 1),
            ("4", "A", 0), ("4", "C", 1),
        ]);
        let shares = top_x_follower_share(&log, &[1, 2]).unwrap();
        assert_eq!(shares[&1], 75.0);
        assert_eq!(shares[&2], 100.0);
    }

    #[test]
    fn follower_share_median_averages_the_middle_pair() {
        // A: {B: 3, C: 2} -> 60%; B: {C: 4, A: 1} -> 80%; median 70%.
        let log = log_of(&[
            ("1", "A", 0), ("1", "B", 1), ("1", "C", 2),
            ("2", "A", 0), ("2", "B", 1), ("2", "C", 2),
            ("3", "A", 0), ("3", "B", 1), ("3", "C", 2),
            ("4", "B", 0), ("4", "C", 1),
            ("5", "A", 0), ("5", "C", 1),
            ("6", "A", 0), ("6", "C", 1),
            ("7", "B", 0), ("7", "A", 1),
        ]);
        let shares = top_x_follower_share(&log, &[1]).unwrap();
        assert_eq!(shares[&1], 70.0);
    }

    #[test]
    fn follower_share_is_nondecreasing_and_saturates() {
        let log = table1_log();
        let xs = [1, 2, 3, 4, 8];
        let shares = top_x_follower_share(&log, &xs).unwrap();
        let mut previous = 0.0;
        for x in xs {
            assert!(shares[&x] >= previous);
            previous = shares[&x];
        }
        assert_eq!(shares[&8], 100.0);
    }

    #[test]
    fn evaluate_is_identity_calibrated() {
        let log = table1_log().with_durations();
        let report = evaluate(&log, &log, None, 0.1, &[1, 2, 3]).unwrap();
        assert_eq!(report.behavioural_appropriateness, 1.0);
        assert_eq!(report.truly_sampled_score, 100.0);
        assert_eq!(report.total_duration_error, 0.0);
        assert!(!report.duration_error_is_absolute);
        assert!(report.event_distance_avg.is_none());
        assert_eq!(report.top_x_follower_share.len(), 3);
    }
}
