//! Fixtures and generators for the acceptance suite, built strictly on the
//! crate's public API.

use std::collections::HashSet;
use std::path::PathBuf;

use chrono::{DateTime, Duration, FixedOffset};
use logsan::embedding::EmbeddingModel;
use logsan::eventlog::{ActivityTable, Event, EventLog, Trace};
use logsan::pretsa::{build_prefix_tree, violates, PrivacyParams};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Three loan-handling cases: one shared first activity, then three distinct
/// continuations with known inter-event gaps.
pub const LOANS_CSV: &str = "\
case,activity,timestamp
Case1,Check Loan Req.,2024-01-02T09:05:00.000+00:00
Case1,Negotiate rate,2024-01-02T10:04:00.000+00:00
Case1,Set up contract,2024-01-02T10:45:00.000+00:00
Case1,Inform client,2024-01-02T14:08:00.000+00:00
Case2,Check Loan Req.,2024-01-03T11:14:00.000+00:00
Case2,Calculate rate,2024-01-03T11:22:00.000+00:00
Case2,Set up contract,2024-01-03T12:02:00.000+00:00
Case2,Mail contract,2024-01-03T13:27:00.000+00:00
Case3,Check Loan Req.,2024-01-04T08:11:00.000+00:00
Case3,Report fraud,2024-01-04T08:34:00.000+00:00
Case3,Block account,2024-01-04T08:38:00.000+00:00
Case3,Inform client,2024-01-04T09:24:00.000+00:00
";

pub fn base_time() -> DateTime<FixedOffset> {
    DateTime::parse_from_rfc3339("2024-01-01T08:00:00+00:00").unwrap()
}

fn random_trace(
    rng: &mut ChaCha8Rng,
    case_id: String,
    sequence: &[logsan::eventlog::ActivityId],
) -> Trace {
    let mut ts = base_time() + Duration::seconds(rng.gen_range(0..86_400));
    let events = sequence
        .iter()
        .map(|&activity| {
            let event = Event {
                activity,
                timestamp: ts,
                duration_secs: 0.0,
            };
            ts += Duration::seconds(rng.gen_range(1..3600));
            event
        })
        .collect();
    Trace { case_id, events }
}

/// Uniformly random log: every trace draws its own activity sequence.
pub fn random_log(
    rng: &mut ChaCha8Rng,
    traces: usize,
    alphabet: usize,
    min_len: usize,
    max_len: usize,
) -> EventLog {
    let mut table = ActivityTable::new();
    let ids: Vec<_> = (0..alphabet)
        .map(|i| table.intern(&format!("act{i:02}")))
        .collect();
    let all = (0..traces)
        .map(|t| {
            let len = rng.gen_range(min_len..=max_len);
            let sequence: Vec<_> = (0..len).map(|_| ids[rng.gen_range(0..alphabet)]).collect();
            random_trace(rng, format!("case{t:04}"), &sequence)
        })
        .collect();
    EventLog::from_traces(all, table).unwrap().with_durations()
}

/// Log whose traces are sampled from a fixed pool of variant sequences, so
/// variants repeat the way they do in real process logs.
pub fn clustered_log(
    rng: &mut ChaCha8Rng,
    traces: usize,
    variants: usize,
    alphabet: usize,
    min_len: usize,
    max_len: usize,
) -> EventLog {
    let mut table = ActivityTable::new();
    let ids: Vec<_> = (0..alphabet)
        .map(|i| table.intern(&format!("act{i:02}")))
        .collect();
    let pool: Vec<Vec<_>> = (0..variants)
        .map(|_| {
            let len = rng.gen_range(min_len..=max_len);
            (0..len).map(|_| ids[rng.gen_range(0..alphabet)]).collect()
        })
        .collect();
    let all = (0..traces)
        .map(|t| {
            let sequence = &pool[rng.gen_range(0..pool.len())];
            random_trace(rng, format!("case{t:04}"), sequence)
        })
        .collect();
    EventLog::from_traces(all, table).unwrap().with_durations()
}

/// Builds a log straight from label sequences, one trace per sequence, with
/// an evenly spaced synthetic clock.
pub fn log_from_sequences(sequences: &[Vec<&str>]) -> EventLog {
    let mut table = ActivityTable::new();
    let traces = sequences
        .iter()
        .enumerate()
        .map(|(i, sequence)| Trace {
            case_id: format!("c{i}"),
            events: sequence
                .iter()
                .enumerate()
                .map(|(pos, label)| Event {
                    activity: table.intern(label),
                    timestamp: base_time()
                        + Duration::seconds((i * 1000 + pos * 10) as i64),
                    duration_secs: 0.0,
                })
                .collect(),
        })
        .collect();
    EventLog::from_traces(traces, table).unwrap().with_durations()
}

/// Two interchangeable middle activities behind one start and before one end
/// activity, alternating across traces.
pub fn two_branch_log(per_branch: usize) -> EventLog {
    let mut table = ActivityTable::new();
    let start = table.intern("Receive request");
    let manual = table.intern("Manual review");
    let automated = table.intern("Automated review");
    let end = table.intern("Send decision");
    let traces = (0..2 * per_branch)
        .map(|i| {
            let middle = if i % 2 == 0 { manual } else { automated };
            let first = base_time() + Duration::seconds(i as i64 * 600);
            Trace {
                case_id: format!("case{i:04}"),
                events: [start, middle, end]
                    .iter()
                    .enumerate()
                    .map(|(pos, &activity)| Event {
                        activity,
                        timestamp: first + Duration::seconds(pos as i64 * 300),
                        duration_secs: 0.0,
                    })
                    .collect(),
            }
        })
        .collect();
    EventLog::from_traces(traces, table).unwrap().with_durations()
}

/// Builds a model with prescribed vectors through the public text format
/// (the input and context sections both receive `vectors`).
pub fn model_from_vectors(labels: &[String], dimension: usize, vectors: &[Vec<f64>]) -> EmbeddingModel {
    assert_eq!(labels.len(), vectors.len());
    let mut text = format!(
        "logsan-actvec v1\ndimension {dimension}\nactivities {}\naverage_with_context false\n",
        labels.len()
    );
    for (label, vector) in labels.iter().zip(vectors) {
        assert_eq!(vector.len(), dimension);
        let nums: Vec<String> = vector.iter().map(|x| x.to_string()).collect();
        text.push_str(&format!("{label}\t{}\t{}\n", nums.join(" "), nums.join(" ")));
    }
    EmbeddingModel::from_bytes(text.as_bytes()).unwrap()
}

/// One-trace log visiting every label once, so a distance table can be built
/// over exactly this vocabulary.
pub fn vocab_log(labels: &[String]) -> EventLog {
    let mut table = ActivityTable::new();
    let events = labels
        .iter()
        .enumerate()
        .map(|(i, label)| Event {
            activity: table.intern(label),
            timestamp: base_time() + Duration::seconds(i as i64),
            duration_secs: 0.0,
        })
        .collect();
    let trace = Trace {
        case_id: "all".into(),
        events,
    };
    EventLog::from_traces(vec![trace], table).unwrap().with_durations()
}

fn label_sequence<'a>(log: &'a EventLog, sequence: &[logsan::eventlog::ActivityId]) -> Vec<&'a str> {
    sequence.iter().map(|&a| log.activities.label(a)).collect()
}

/// Asserts the anonymization postconditions on a nonempty output: every
/// variant has at least k traces, no variant is new, and no prefix-tree node
/// of the output violates k-anonymity or t-closeness.
pub fn assert_compliant(original: &EventLog, anonymized: &EventLog, params: &PrivacyParams) {
    if anonymized.traces.is_empty() {
        return;
    }
    let input_variants: HashSet<Vec<&str>> = original
        .variants()
        .iter()
        .map(|v| label_sequence(original, &v.sequence))
        .collect();
    for variant in anonymized.variants() {
        assert!(
            variant.count >= params.k(),
            "variant has {} traces, below k = {}",
            variant.count,
            params.k()
        );
        assert!(
            input_variants.contains(&label_sequence(anonymized, &variant.sequence)),
            "output contains a variant absent from the input: {:?}",
            label_sequence(anonymized, &variant.sequence)
        );
    }
    let tree = build_prefix_tree(anonymized);
    let overall = tree.overall_distributions();
    let mut stack = tree.children(tree.root());
    while let Some(node) = stack.pop() {
        assert!(
            !violates(&tree, node, params, &overall),
            "anonymized output still contains a violating prefix at depth {}",
            tree.depth(node)
        );
        stack.extend(tree.children(node));
    }
}

/// Well-known public event logs, located by case-insensitive substring of the
/// file name inside `LOGSAN_DATA_DIR` (searched two levels deep).
pub struct Datasets {
    pub sepsis: Option<PathBuf>,
    pub coselog: Option<PathBuf>,
    pub bpic: Option<PathBuf>,
}

pub fn find_datasets() -> Datasets {
    let mut found = Datasets {
        sepsis: None,
        coselog: None,
        bpic: None,
    };
    let Some(dir) = std::env::var_os("LOGSAN_DATA_DIR") else {
        return found;
    };
    let mut queue = vec![(PathBuf::from(dir), 0usize)];
    while let Some((path, depth)) = queue.pop() {
        let Ok(entries) = std::fs::read_dir(&path) else {
            continue;
        };
        for entry in entries.flatten() {
            let path = entry.path();
            if path.is_dir() && depth < 2 {
                queue.push((path, depth + 1));
                continue;
            }
            let name = entry.file_name().to_string_lossy().to_lowercase();
            if !name.ends_with(".xes") {
                continue;
            }
            if name.contains("sepsis") {
                found.sepsis.get_or_insert(path);
            } else if name.contains("coselog") || name.contains("receipt") {
                found.coselog.get_or_insert(path);
            } else if name.contains("bpic") {
                found.bpic.get_or_insert(path);
            }
        }
    }
    found
}

pub fn read_xes_log(path: &std::path::Path) -> EventLog {
    let bytes = std::fs::read(path).unwrap();
    logsan::eventlog::parse_xes(&bytes).unwrap().with_durations()
}
