//! Activity embeddings learned from trace context (skip-gram with negative
//! sampling over activity sequences) and the cosine-based event distance.
//!
//! Training is sequential over seeded, shuffled pairs, so a given
//! `(log, config)` always produces bitwise-identical vectors.

mod model;

pub use model::EmbeddingModel;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eventlog::{ActivityId, EventLog};

/// Hyperparameters for [`train_act2vec`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Embedding dimension.
    pub dimension: usize,
    /// Context window: positions within `window` of the center form pairs.
    pub window: usize,
    /// Negative samples drawn per positive pair.
    pub negative_samples: usize,
    /// Passes over the shuffled pair list.
    pub epochs: usize,
    /// Initial learning rate, linearly decayed to `min_learning_rate`.
    pub learning_rate: f64,
    pub min_learning_rate: f64,
    /// Seed for initialization, shuffling and negative sampling.
    pub seed: u64,
    /// Use the average of input and context vectors as the activity vector
    /// instead of the input vector alone.
    pub average_with_context: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dimension: 16,
            window: 2,
            negative_samples: 5,
            epochs: 50,
            learning_rate: 0.025,
            min_learning_rate: 0.0001,
            seed: 42,
            average_with_context: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 || self.dimension > 1024 {
            return Err(Error::InvalidParameter(format!(
                "dimension must be in 1..=1024, got {}",
                self.dimension
            )));
        }
        if self.window == 0 {
            return Err(Error::InvalidParameter("window must be positive".into()));
        }
        if self.negative_samples == 0 {
            return Err(Error::InvalidParameter(
                "negative_samples must be positive".into(),
            ));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidParameter("epochs must be positive".into()));
        }
        if self.learning_rate <= 0.0 || self.min_learning_rate <= 0.0 {
            return Err(Error::InvalidParameter(
                "learning rates must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Positive skip-gram pairs: for each position `i` of each trace, every
/// position `j` with `0 < |i - j| <= window` contributes `(seq[i], seq[j])`.
pub fn training_pairs(log: &EventLog, window: usize) -> Vec<(ActivityId, ActivityId)> {
    let mut pairs = Vec::new();
    for trace in &log.traces {
        let seq = trace.activity_sequence();
        for i in 0..seq.len() {
            let lo = i.saturating_sub(window);
            let hi = (i + window).min(seq.len() - 1);
            for j in lo..=hi {
                if j != i {
                    pairs.push((seq[i], seq[j]));
                }
            }
        }
    }
    pairs
}

/// Cumulative unigram distribution raised to the 3/4 power.
struct NegativeTable {
    cumulative: Vec<f64>,
}

impl NegativeTable {
    fn new(counts: &[u64]) -> Self {
        let mut cumulative = Vec::with_capacity(counts.len());
        let mut acc = 0.0;
        for &c in counts {
            acc += (c as f64).powf(0.75);
            cumulative.push(acc);
        }
        Self { cumulative }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let total = *self.cumulative.last().unwrap();
        let u = rng.gen::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= u)
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Learns activity vectors from the log's trace contexts.
///
/// Deterministic given `(log, config)`: initialization, epoch shuffles and
/// negative draws all come from one seeded generator.
pub fn train_act2vec(log: &EventLog, config: &TrainConfig) -> Result<EmbeddingModel> {
    config.validate()?;
    if log.traces.is_empty() {
        return Err(Error::EmptyLog);
    }
    let vocab_size = log.activities.len();
    if vocab_size == 1 {
        log::warn!(
            "training on a single activity type: vectors are degenerate \
             (negatives are drawn from that same type)"
        );
    }

    let mut counts = vec![0u64; vocab_size];
    for trace in &log.traces {
        for event in &trace.events {
            counts[event.activity.index()] += 1;
        }
    }

    let dim = config.dimension;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // word2vec-style init: input rows uniform in [-0.5/dim, 0.5/dim),
    // context rows zero.
    let mut input = vec![0.0f64; vocab_size * dim];
    for v in input.iter_mut() {
        *v = (rng.gen::<f64>() - 0.5) / dim as f64;
    }
    let mut context = vec![0.0f64; vocab_size * dim];

    let mut pairs = training_pairs(log, config.window);
    let negatives = NegativeTable::new(&counts);
    let total_steps = (pairs.len() * config.epochs).max(1) as f64;
    let mut step = 0usize;
    let mut gradient = vec![0.0f64; dim];

    for _epoch in 0..config.epochs {
        pairs.shuffle(&mut rng);
        for &(center, positive) in &pairs {
            let progress = step as f64 / total_steps;
            let lr = (config.learning_rate
                + (config.min_learning_rate - config.learning_rate) * progress)
                .max(config.min_learning_rate);
            step += 1;

            let c = center.index() * dim;
            gradient.iter_mut().for_each(|g| *g = 0.0);
            for sample in 0..=config.negative_samples {
                let (target, label) = if sample == 0 {
                    (positive.index(), 1.0)
                } else {
                    let neg = negatives.sample(&mut rng);
                    if neg == positive.index() {
                        continue;
                    }
                    (neg, 0.0)
                };
                let t = target * dim;
                let dot: f64 = (0..dim).map(|k| input[c + k] * context[t + k]).sum();
                let g = (sigmoid(dot) - label) * lr;
                for k in 0..dim {
                    gradient[k] += g * context[t + k];
                    context[t + k] -= g * input[c + k];
                }
            }
            for k in 0..dim {
                input[c + k] -= gradient[k];
            }
        }
    }

    // Activities that never formed a pair keep their random init; guard the
    // nonzero contract anyway.
    for row in 0..vocab_size {
        if input[row * dim..(row + 1) * dim].iter().all(|&v| v == 0.0) {
            input[row * dim] = 1e-8;
        }
    }

    Ok(EmbeddingModel::from_parts(
        log.activities.labels().to_vec(),
        dim,
        input,
        context,
        config.average_with_context,
    ))
}

/// Cosine similarity of two equal-dimension vectors, clamped to [-1, 1].
pub fn cosine(v1: &[f64], v2: &[f64]) -> Result<f64> {
    if v1.len() != v2.len() {
        return Err(Error::DimensionMismatch(v1.len(), v2.len()));
    }
    let dot: f64 = v1.iter().zip(v2).map(|(a, b)| a * b).sum();
    let n1 = v1.iter().map(|a| a * a).sum::<f64>().sqrt();
    let n2 = v2.iter().map(|a| a * a).sum::<f64>().sqrt();
    if n1 == 0.0 || n2 == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot / (n1 * n2)).clamp(-1.0, 1.0))
}

/// Precomputed `|A| x |A|` event distance table for one log's activities.
///
/// The event distance depends only on the activities, so it is cached once
/// and shared by all trace distance computations.
#[derive(Debug, Clone)]
pub struct EventDistanceTable {
    size: usize,
    distances: Vec<f64>,
}

impl EventDistanceTable {
    /// Builds the table for every activity of `log`, resolving labels in the
    /// model vocabulary.
    pub fn build(model: &EmbeddingModel, log: &EventLog) -> Result<Self> {
        let size = log.activities.len();
        let rows: Vec<usize> = log
            .activities
            .labels()
            .iter()
            .map(|label| model.row_of(label))
            .collect::<Result<_>>()?;
        let mut distances = vec![0.0; size * size];
        for i in 0..size {
            for j in (i + 1)..size {
                let d = model.event_distance_rows(rows[i], rows[j])?;
                distances[i * size + j] = d;
                distances[j * size + i] = d;
            }
        }
        Ok(Self { size, distances })
    }

    /// Builds a table directly from row-major values (for synthetic
    /// distance fixtures).
    #[cfg(test)]
    pub(crate) fn from_values(size: usize, distances: Vec<f64>) -> Self {
        assert_eq!(distances.len(), size * size);
        Self { size, distances }
    }

    pub fn get(&self, a: ActivityId, b: ActivityId) -> f64 {
        self.distances[a.index() * self.size + b.index()]
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }
}
