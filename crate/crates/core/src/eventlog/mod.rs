//! In-memory event log model: traces of timestamped activity executions,
//! variant extraction, duration derivation and descriptive statistics.

mod csv;
mod xes;

pub use csv::{parse_csv, write_csv, CsvColumns};
pub use xes::{parse_xes, write_xes};

#[cfg(test)]
pub(crate) use csv::tests as fixtures;

use std::collections::HashMap;
use std::fmt;

use chrono::{DateTime, FixedOffset};

use crate::error::{Error, Result};

/// Dense per-log activity identifier, assigned in order of first appearance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActivityId(pub u32);

impl ActivityId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// An activity label together with its dense index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Activity {
    pub label: String,
    pub index: usize,
}

/// Bijection between activity labels and dense indices for one log.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ActivityTable {
    labels: Vec<String>,
    by_label: HashMap<String, ActivityId>,
}

impl ActivityTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id for `label`, interning it if unseen.
    pub fn intern(&mut self, label: &str) -> ActivityId {
        if let Some(&id) = self.by_label.get(label) {
            return id;
        }
        let id = ActivityId(self.labels.len() as u32);
        self.labels.push(label.to_string());
        self.by_label.insert(label.to_string(), id);
        id
    }

    pub fn id_of(&self, label: &str) -> Option<ActivityId> {
        self.by_label.get(label).copied()
    }

    pub fn label(&self, id: ActivityId) -> &str {
        &self.labels[id.index()]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ActivityId> {
        (0..self.labels.len() as u32).map(ActivityId)
    }

    pub fn entries(&self) -> impl Iterator<Item = Activity> + '_ {
        self.labels.iter().enumerate().map(|(i, l)| Activity {
            label: l.clone(),
            index: i,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// One activity execution inside a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub activity: ActivityId,
    pub timestamp: DateTime<FixedOffset>,
    /// Gap to the preceding event in seconds; 0 for the first event.
    /// Meaningful only once durations are annotated on the log.
    pub duration_secs: f64,
}

/// Timestamp-ordered events sharing one case identifier.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub case_id: String,
    pub events: Vec<Event>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// The activity projection of the trace.
    pub fn activity_sequence(&self) -> Vec<ActivityId> {
        self.events.iter().map(|e| e.activity).collect()
    }
}

/// A finite set of traces plus the activity table derived at load time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub traces: Vec<Trace>,
    pub activities: ActivityTable,
    durations_annotated: bool,
}

/// An equivalence class of traces with identical activity sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variant {
    pub sequence: Vec<ActivityId>,
    pub count: usize,
}

/// Descriptive statistics of a log.
#[derive(Debug, Clone, PartialEq)]
pub struct LogStats {
    pub cases: usize,
    pub variants: usize,
    pub avg_cases_per_variant: f64,
    pub max_cases_per_variant: usize,
}

impl fmt::Display for LogStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Average is rounded to one decimal at display time only.
        write!(
            f,
            "cases={} variants={} avg_cases_per_variant={:.1} max_cases_per_variant={}",
            self.cases, self.variants, self.avg_cases_per_variant, self.max_cases_per_variant
        )
    }
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn durations_annotated(&self) -> bool {
        self.durations_annotated
    }

    /// Builds a log from raw traces, enforcing case-id uniqueness and sorting
    /// events by timestamp (stable, so ties keep input order).
    pub fn from_traces(mut traces: Vec<Trace>, activities: ActivityTable) -> Result<Self> {
        let mut seen = HashMap::new();
        for (i, trace) in traces.iter().enumerate() {
            if let Some(_prev) = seen.insert(trace.case_id.clone(), i) {
                return Err(Error::DuplicateCase(trace.case_id.clone()));
            }
        }
        for trace in &mut traces {
            trace.events.sort_by_key(|e| e.timestamp);
        }
        Ok(Self {
            traces,
            activities,
            durations_annotated: false,
        })
    }

    /// Derives per-event durations: the gap to the preceding event of the
    /// trace in seconds, 0 for the first event. Idempotent.
    pub fn annotate_durations(&mut self) {
        for trace in &mut self.traces {
            let mut prev: Option<DateTime<FixedOffset>> = None;
            for event in &mut trace.events {
                event.duration_secs = match prev {
                    None => 0.0,
                    Some(p) => {
                        let ms = event.timestamp.signed_duration_since(p).num_milliseconds();
                        (ms as f64 / 1000.0).max(0.0)
                    }
                };
                prev = Some(event.timestamp);
            }
        }
        self.durations_annotated = true;
    }

    /// Consuming variant of [`annotate_durations`](Self::annotate_durations).
    pub fn with_durations(mut self) -> Self {
        self.annotate_durations();
        self
    }

    /// Marks externally assigned durations as authoritative.
    pub(crate) fn set_durations_annotated(&mut self) {
        self.durations_annotated = true;
    }

    /// Groups traces into variants, sorted by descending count with a stable
    /// tie-break on the label-lexicographic order of the sequence.
    pub fn variants(&self) -> Vec<Variant> {
        let mut groups: HashMap<Vec<ActivityId>, usize> = HashMap::new();
        for trace in &self.traces {
            *groups.entry(trace.activity_sequence()).or_insert(0) += 1;
        }
        let mut variants: Vec<Variant> = groups
            .into_iter()
            .map(|(sequence, count)| Variant { sequence, count })
            .collect();
        variants.sort_by(|a, b| {
            b.count
                .cmp(&a.count)
                .then_with(|| self.label_sequence(&a.sequence).cmp(&self.label_sequence(&b.sequence)))
        });
        variants
    }

    fn label_sequence(&self, sequence: &[ActivityId]) -> Vec<&str> {
        sequence.iter().map(|&a| self.activities.label(a)).collect()
    }

    /// Renders a sequence as its labels for reports and error messages.
    pub fn render_sequence(&self, sequence: &[ActivityId], separator: &str) -> String {
        self.label_sequence(sequence).join(separator)
    }

    pub fn stats(&self) -> Result<LogStats> {
        if self.traces.is_empty() {
            return Err(Error::EmptyLog);
        }
        let variants = self.variants();
        let cases = self.traces.len();
        let max = variants.iter().map(|v| v.count).max().unwrap_or(0);
        Ok(LogStats {
            cases,
            variants: variants.len(),
            avg_cases_per_variant: cases as f64 / variants.len() as f64,
            max_cases_per_variant: max,
        })
    }

    /// Sum of all event durations in seconds. Requires annotated durations.
    pub fn total_duration_secs(&self) -> f64 {
        self.traces
            .iter()
            .flat_map(|t| t.events.iter())
            .map(|e| e.duration_secs)
            .sum()
    }

    pub fn event_count(&self) -> usize {
        self.traces.iter().map(|t| t.len()).sum()
    }
}
