//! Trace-level distance measures used to pick merge targets: a Levenshtein
//! baseline and an asymmetric embedding-based measure that prefers merging a
//! shorter trace into a longer target.

use crate::embedding::EventDistanceTable;
use crate::error::{Error, Result};
use crate::eventlog::{ActivityId, Trace};

/// Per-event penalties for the asymmetric trace distance.
///
/// `rho_a` prices adding an event to the source, `rho_r` removing one.
/// Removal is costlier (`rho_r > rho_a > 1`), so merging a shorter trace into
/// a longer target is preferred over truncating a longer trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Penalties {
    rho_a: f64,
    rho_r: f64,
}

impl Penalties {
    pub fn new(rho_a: f64, rho_r: f64) -> Result<Self> {
        if !(rho_a > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "event-addition penalty must exceed 1, got {rho_a}"
            )));
        }
        if !(rho_r > rho_a) {
            return Err(Error::InvalidParameter(format!(
                "event-removal penalty must exceed the addition penalty \
                 ({rho_r} vs {rho_a})"
            )));
        }
        Ok(Self { rho_a, rho_r })
    }

    pub fn rho_a(&self) -> f64 {
        self.rho_a
    }

    pub fn rho_r(&self) -> f64 {
        self.rho_r
    }
}

impl Default for Penalties {
    fn default() -> Self {
        Self {
            rho_a: 2.0,
            rho_r: 3.0,
        }
    }
}

/// Which trace distance drives merge-target selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeasureKind {
    Levenshtein,
    Embedding,
}

impl MeasureKind {
    pub const ALL: [MeasureKind; 2] = [MeasureKind::Levenshtein, MeasureKind::Embedding];

    pub fn name(&self) -> &'static str {
        match self {
            MeasureKind::Levenshtein => "levenshtein",
            MeasureKind::Embedding => "embedding",
        }
    }
}

impl std::str::FromStr for MeasureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "levenshtein" => Ok(MeasureKind::Levenshtein),
            "embedding" => Ok(MeasureKind::Embedding),
            other => Err(Error::InvalidParameter(format!(
                "unknown distance measure '{other}' (expected 'levenshtein' or 'embedding')"
            ))),
        }
    }
}

impl std::fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A concrete measure ready to score candidate merge targets.
#[derive(Debug, Clone, Copy)]
pub enum DistanceMeasure<'a> {
    Levenshtein,
    Embedding {
        table: &'a EventDistanceTable,
        penalties: Penalties,
    },
}

impl DistanceMeasure<'_> {
    pub fn kind(&self) -> MeasureKind {
        match self {
            DistanceMeasure::Levenshtein => MeasureKind::Levenshtein,
            DistanceMeasure::Embedding { .. } => MeasureKind::Embedding,
        }
    }

    /// Distance of merging `source` into `target`.
    pub fn distance(&self, target: &[ActivityId], source: &[ActivityId]) -> f64 {
        match self {
            DistanceMeasure::Levenshtein => levenshtein(target, source) as f64,
            DistanceMeasure::Embedding { table, penalties } => {
                embedding_trace_distance(target, source, table, penalties)
            }
        }
    }
}

/// Unit-cost edit distance (insert/delete/substitute) between the activity
/// projections of two traces. Timestamps and durations play no role.
pub fn levenshtein(t1: &[ActivityId], t2: &[ActivityId]) -> usize {
    if t1.is_empty() {
        return t2.len();
    }
    if t2.is_empty() {
        return t1.len();
    }
    // Single-row dynamic programming over the shorter sequence.
    let (short, long) = if t1.len() <= t2.len() { (t1, t2) } else { (t2, t1) };
    let mut row: Vec<usize> = (0..=short.len()).collect();
    for (i, &a) in long.iter().enumerate() {
        let mut diagonal = row[0];
        row[0] = i + 1;
        for (j, &b) in short.iter().enumerate() {
            let substitution = diagonal + usize::from(a != b);
            diagonal = row[j + 1];
            row[j + 1] = substitution.min(row[j] + 1).min(diagonal + 1);
        }
    }
    row[short.len()]
}

/// Convenience wrapper over whole traces.
pub fn levenshtein_traces(t1: &Trace, t2: &Trace) -> usize {
    levenshtein(&t1.activity_sequence(), &t2.activity_sequence())
}

/// Asymmetric embedding distance of merging `source` into `target`.
///
/// Shared positions contribute their event distances; the length gap is
/// priced per event, at `rho_a` when the target is longer (events would be
/// added to the source) and `rho_r` when it is shorter (events removed).
pub fn embedding_trace_distance(
    target: &[ActivityId],
    source: &[ActivityId],
    table: &EventDistanceTable,
    penalties: &Penalties,
) -> f64 {
    let shared = target.len().min(source.len());
    let mut distance: f64 = (0..shared)
        .map(|i| table.get(target[i], source[i]))
        .sum();
    if target.len() > source.len() {
        distance += (target.len() - source.len()) as f64 * penalties.rho_a;
    } else if target.len() < source.len() {
        distance += (source.len() - target.len()) as f64 * penalties.rho_r;
    }
    distance
}

/// A candidate merge target: a variant's activity sequence and its current
/// trace count (used only to break distance ties).
#[derive(Debug, Clone, Copy)]
pub struct Candidate<'a> {
    pub sequence: &'a [ActivityId],
    pub count: usize,
}

/// Index of the candidate closest to `source` under `measure`
/// (candidate-as-target for the asymmetric measure).
///
/// Ties go to the candidate with the higher count (a more frequent target
/// reaches the privacy threshold sooner), then to the earliest in input
/// order.
pub fn nearest_candidate(
    source: &[ActivityId],
    candidates: &[Candidate<'_>],
    measure: &DistanceMeasure<'_>,
) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, candidate) in candidates.iter().enumerate() {
        let d = measure.distance(candidate.sequence, source);
        let better = match best {
            None => true,
            Some((b, bd)) => d < bd || (d == bd && candidate.count > candidates[b].count),
        };
        if better {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i).ok_or(Error::NoCandidates)
}

/// Trace-level variant of [`nearest_candidate`]; all candidates count once.
pub fn nearest_trace<'a>(
    source: &Trace,
    candidates: &'a [&Trace],
    measure: &DistanceMeasure<'_>,
) -> Result<&'a Trace> {
    let sequences: Vec<Vec<ActivityId>> =
        candidates.iter().map(|t| t.activity_sequence()).collect();
    let wrapped: Vec<Candidate<'_>> = sequences
        .iter()
        .map(|seq| Candidate {
            sequence: seq,
            count: 1,
        })
        .collect();
    let idx = nearest_candidate(&source.activity_sequence(), &wrapped, measure)?;
    Ok(candidates[idx])
}
