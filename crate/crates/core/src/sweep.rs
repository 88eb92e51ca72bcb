//! Experiment sweep: anonymize one log under a grid of privacy settings with
//! both distance measures, evaluate utility loss per setting, and emit
//! deterministic CSV reports.

use rayon::prelude::*;

use crate::distance::{DistanceMeasure, MeasureKind, Penalties};
use crate::embedding::{train_act2vec, EventDistanceTable, TrainConfig};
use crate::error::{Error, Result};
use crate::eventlog::EventLog;
use crate::metrics;
use crate::pretsa::{anonymize, PrivacyParams};

/// Grid and shared parameters of one sweep.
///
/// The defaults reproduce the evaluation grid: k doubling from 2 to 256 and
/// five t thresholds, giving 40 settings per measure.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    /// Name stamped into every row (usually the input file stem).
    pub log_name: String,
    pub k_values: Vec<usize>,
    pub t_values: Vec<f64>,
    pub measures: Vec<MeasureKind>,
    /// Embedding hyperparameters; its seed is replaced by `seed`.
    pub train: TrainConfig,
    pub penalties: Penalties,
    /// Seed for embedding training (the only randomness in a sweep).
    pub seed: u64,
    /// Relative tolerance of the sampling-preservation score.
    pub epsilon: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            log_name: "log".into(),
            k_values: vec![2, 4, 8, 16, 32, 64, 128, 256],
            t_values: vec![0.1, 0.25, 0.5, 0.75, 1.0],
            measures: MeasureKind::ALL.to_vec(),
            train: TrainConfig::default(),
            penalties: Penalties::default(),
            seed: TrainConfig::default().seed,
            epsilon: 0.1,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_values.is_empty() || self.t_values.is_empty() || self.measures.is_empty() {
            return Err(Error::InvalidParameter(
                "sweep needs at least one k, one t and one measure".into(),
            ));
        }
        for &k in &self.k_values {
            PrivacyParams::new(k, 1.0)?;
        }
        for &t in &self.t_values {
            PrivacyParams::new(1, t)?;
        }
        if self.epsilon < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be nonnegative, got {}",
                self.epsilon
            )));
        }
        self.train.validate()
    }
}

/// Outcome of one (measure, k, t) setting.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub log_name: String,
    pub measure: MeasureKind,
    pub k: usize,
    pub t_close: f64,
    pub behavioural_appropriateness: Option<f64>,
    pub truly_sampled_score: Option<f64>,
    pub total_duration_error: Option<f64>,
    pub merges: usize,
    pub truncated: usize,
    pub dropped: usize,
    /// Empty on clean runs; otherwise a deterministic diagnostic (setting
    /// failures are recorded here instead of aborting the sweep).
    pub note: String,
    /// Runtime of the setting; excluded from the deterministic CSV.
    pub wall_time_secs: f64,
}

/// Runs the full grid over `log`.
///
/// The embedding model is trained once (on the original log only) and shared
/// by every setting; rows come back in (measure, k, t) order and are fully
/// deterministic for a fixed seed — wall times are the only nondeterministic
/// field, which is why they stay out of [`write_sweep_csv`].
pub fn run_sweep(log: &EventLog, config: &SweepConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let table = if config.measures.contains(&MeasureKind::Embedding) {
        let train = TrainConfig {
            seed: config.seed,
            ..config.train.clone()
        };
        let started = std::time::Instant::now();
        let model = train_act2vec(log, &train)?;
        log::info!(
            "trained embedding model at {} in {:.2} s ({} activities, dimension {})",
            chrono::Utc::now().to_rfc3339(),
            started.elapsed().as_secs_f64(),
            model.vocab().len(),
            model.dimension()
        );
        Some(EventDistanceTable::build(&model, log)?)
    } else {
        None
    };

    let settings: Vec<(MeasureKind, usize, f64)> = config
        .measures
        .iter()
        .flat_map(|&m| {
            config.k_values.iter().flat_map(move |&k| {
                config.t_values.iter().map(move |&t| (m, k, t))
            })
        })
        .collect();

    let rows: Vec<SweepRow> = settings
        .par_iter()
        .map(|&(kind, k, t_close)| {
            run_setting(log, config, table.as_ref(), kind, k, t_close)
        })
        .collect();
    Ok(rows)
}

fn run_setting(
    log: &EventLog,
    config: &SweepConfig,
    table: Option<&EventDistanceTable>,
    kind: MeasureKind,
    k: usize,
    t_close: f64,
) -> SweepRow {
    let started = std::time::Instant::now();
    let mut row = SweepRow {
        log_name: config.log_name.clone(),
        measure: kind,
        k,
        t_close,
        behavioural_appropriateness: None,
        truly_sampled_score: None,
        total_duration_error: None,
        merges: 0,
        truncated: 0,
        dropped: 0,
        note: String::new(),
        wall_time_secs: 0.0,
    };
    let result = (|| -> Result<()> {
        let params = PrivacyParams::new(k, t_close)?;
        let measure = match kind {
            MeasureKind::Levenshtein => DistanceMeasure::Levenshtein,
            MeasureKind::Embedding => DistanceMeasure::Embedding {
                table: table.expect("table trained when the embedding measure is requested"),
                penalties: config.penalties,
            },
        };
        let (anonymized, report) = anonymize(log, &params, &measure)?;
        row.merges = report.merges.len();
        row.truncated = report.truncated;
        row.dropped = report.dropped;
        if report.input_smaller_than_k {
            row.note = "input smaller than k".into();
        } else if anonymized.traces.is_empty() {
            row.note = "empty output".into();
        }
        row.behavioural_appropriateness =
            Some(metrics::behavioural_appropriateness(log, &anonymized)?);
        row.truly_sampled_score =
            Some(metrics::truly_sampled_score(log, &anonymized, config.epsilon)?);
        let (duration_error, _) = metrics::total_duration_error(log, &anonymized);
        row.total_duration_error = Some(duration_error);
        Ok(())
    })();
    if let Err(e) = result {
        row.note = format!("failed: {e}");
    }
    row.wall_time_secs = started.elapsed().as_secs_f64();
    row
}

fn format_opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

/// Deterministic result CSV: identical inputs and seed give identical bytes.
pub fn write_sweep_csv(rows: &[SweepRow]) -> Vec<u8> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record([
            "log",
            "measure",
            "k",
            "t_close",
            "behavioural_appropriateness",
            "truly_sampled_score",
            "total_duration_error",
            "merges",
            "truncated",
            "dropped",
            "note",
        ])
        .expect("write to Vec cannot fail");
    for row in rows {
        writer
            .write_record([
                row.log_name.clone(),
                row.measure.name().to_string(),
                row.k.to_string(),
                row.t_close.to_string(),
                format_opt(row.behavioural_appropriateness),
                format_opt(row.truly_sampled_score),
                format_opt(row.total_duration_error),
                row.merges.to_string(),
                row.truncated.to_string(),
                row.dropped.to_string(),
                row.note.clone(),
            ])
            .expect("write to Vec cannot fail");
    }
    writer.into_inner().expect("write to Vec cannot fail")
}

/// Per-setting wall times, kept separate so the result CSV stays
/// byte-reproducible.
pub fn write_timings_csv(rows: &[SweepRow]) -> Vec<u8> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["log", "measure", "k", "t_close", "wall_time_secs"])
        .expect("write to Vec cannot fail");
    for row in rows {
        writer
            .write_record([
                row.log_name.clone(),
                row.measure.name().to_string(),
                row.k.to_string(),
                row.t_close.to_string(),
                format!("{:.3}", row.wall_time_secs),
            ])
            .expect("write to Vec cannot fail");
    }
    writer.into_inner().expect("write to Vec cannot fail")
}

/// Head-to-head sampling-preservation comparison of the two measures at one
/// (k, t) setting.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub k: usize,
    pub t_close: f64,
    pub sampled_embedding: Option<f64>,
    pub sampled_levenshtein: Option<f64>,
    /// Embedding preserved at least as many relations as the baseline.
    pub embedding_at_least_as_good: Option<bool>,
}

/// Pairs embedding and Levenshtein rows per (k, t). Settings missing either
/// measure are skipped.
pub fn comparison_rows(rows: &[SweepRow]) -> Vec<ComparisonRow> {
    let find = |kind: MeasureKind, k: usize, t: f64| {
        rows.iter()
            .find(|r| r.measure == kind && r.k == k && r.t_close == t)
    };
    let mut seen: Vec<(usize, f64)> = Vec::new();
    for row in rows {
        if !seen.contains(&(row.k, row.t_close)) {
            seen.push((row.k, row.t_close));
        }
    }
    seen.into_iter()
        .filter_map(|(k, t)| {
            let embedding = find(MeasureKind::Embedding, k, t)?;
            let levenshtein = find(MeasureKind::Levenshtein, k, t)?;
            let verdict = match (
                embedding.truly_sampled_score,
                levenshtein.truly_sampled_score,
            ) {
                (Some(e), Some(l)) => Some(e >= l),
                _ => None,
            };
            Some(ComparisonRow {
                k,
                t_close: t,
                sampled_embedding: embedding.truly_sampled_score,
                sampled_levenshtein: levenshtein.truly_sampled_score,
                embedding_at_least_as_good: verdict,
            })
        })
        .collect()
}

pub fn write_comparison_csv(rows: &[ComparisonRow]) -> Vec<u8> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record([
            "k",
            "t_close",
            "truly_sampled_embedding",
            "truly_sampled_levenshtein",
            "embedding_at_least_as_good",
        ])
        .expect("write to Vec cannot fail");
    for row in rows {
        writer
            .write_record([
                row.k.to_string(),
                row.t_close.to_string(),
                format_opt(row.sampled_embedding),
                format_opt(row.sampled_levenshtein),
                row.embedding_at_least_as_good
                    .map(|b| b.to_string())
                    .unwrap_or_default(),
            ])
            .expect("write to Vec cannot fail");
    }
    writer.into_inner().expect("write to Vec cannot fail")
}
