//! Trained embedding model: per-activity vectors, the cosine event distance,
//! and a versioned text persistence format.

use std::collections::HashMap;

use crate::embedding::cosine;
use crate::error::{Error, Result};

const FORMAT_HEADER: &str = "logsan-actvec v1";

/// Activity vectors produced by training, addressable by label.
///
/// Each activity has an input and a context vector (both row-major,
/// `vocab * dimension`). The activity vector used for distances is the input
/// vector, or the elementwise average of the two when the model was trained
/// with `average_with_context`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    vocab: Vec<String>,
    by_label: HashMap<String, usize>,
    dimension: usize,
    input: Vec<f64>,
    context: Vec<f64>,
    average_with_context: bool,
}

impl EmbeddingModel {
    pub(crate) fn from_parts(
        vocab: Vec<String>,
        dimension: usize,
        input: Vec<f64>,
        context: Vec<f64>,
        average_with_context: bool,
    ) -> Self {
        let by_label = vocab
            .iter()
            .enumerate()
            .map(|(i, label)| (label.clone(), i))
            .collect();
        Self {
            vocab,
            by_label,
            dimension,
            input,
            context,
            average_with_context,
        }
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn input_vectors(&self) -> &[f64] {
        &self.input
    }

    pub fn context_vectors(&self) -> &[f64] {
        &self.context
    }

    pub fn averages_with_context(&self) -> bool {
        self.average_with_context
    }

    /// Row index of `label`, or [`Error::UnknownActivity`].
    pub fn row_of(&self, label: &str) -> Result<usize> {
        self.by_label
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownActivity(label.to_string()))
    }

    /// The activity vector for a vocabulary row.
    pub fn activity_vector(&self, row: usize) -> Vec<f64> {
        let d = self.dimension;
        let input = &self.input[row * d..(row + 1) * d];
        if self.average_with_context {
            let context = &self.context[row * d..(row + 1) * d];
            input
                .iter()
                .zip(context)
                .map(|(i, c)| (i + c) / 2.0)
                .collect()
        } else {
            input.to_vec()
        }
    }

    /// `1 - cosine(actvec(a1), actvec(a2))`, in `[0, 2]`; exactly 0 for the
    /// same activity.
    pub fn event_distance(&self, a1: &str, a2: &str) -> Result<f64> {
        self.event_distance_rows(self.row_of(a1)?, self.row_of(a2)?)
    }

    pub(crate) fn event_distance_rows(&self, r1: usize, r2: usize) -> Result<f64> {
        if r1 == r2 {
            return Ok(0.0);
        }
        let v1 = self.activity_vector(r1);
        let v2 = self.activity_vector(r2);
        Ok(1.0 - cosine(&v1, &v2)?)
    }

    /// Serializes the model to its versioned text format. `Display` for `f64`
    /// prints a shortest round-trip representation, so loading reproduces the
    /// exact vectors.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = String::new();
        out.push_str(FORMAT_HEADER);
        out.push('\n');
        out.push_str(&format!("dimension {}\n", self.dimension));
        out.push_str(&format!("activities {}\n", self.vocab.len()));
        out.push_str(&format!(
            "average_with_context {}\n",
            self.average_with_context
        ));
        let d = self.dimension;
        for (row, label) in self.vocab.iter().enumerate() {
            out.push_str(&escape_label(label));
            for section in [&self.input, &self.context] {
                out.push('\t');
                let values: Vec<String> = section[row * d..(row + 1) * d]
                    .iter()
                    .map(|v| v.to_string())
                    .collect();
                out.push_str(&values.join(" "));
            }
            out.push('\n');
        }
        out.into_bytes()
    }

    /// Parses a model previously written by [`EmbeddingModel::to_bytes`].
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let text = std::str::from_utf8(bytes)
            .map_err(|_| Error::ModelFormat("model file is not valid UTF-8".into()))?;
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        if header != FORMAT_HEADER {
            return Err(Error::ModelFormat(format!(
                "expected header '{FORMAT_HEADER}', got '{header}'"
            )));
        }
        let dimension: usize = parse_header_field(lines.next(), "dimension")?;
        let activities: usize = parse_header_field(lines.next(), "activities")?;
        let average_with_context: bool =
            parse_header_field(lines.next(), "average_with_context")?;
        if dimension == 0 {
            return Err(Error::ModelFormat("dimension must be positive".into()));
        }

        let mut vocab = Vec::with_capacity(activities);
        let mut input = Vec::with_capacity(activities * dimension);
        let mut context = Vec::with_capacity(activities * dimension);
        for (i, line) in lines.enumerate() {
            let mut fields = line.split('\t');
            let label = fields
                .next()
                .ok_or_else(|| Error::ModelFormat(format!("row {i}: missing label")))?;
            vocab.push(unescape_label(label));
            for (section, name) in [(&mut input, "input"), (&mut context, "context")] {
                let field = fields.next().ok_or_else(|| {
                    Error::ModelFormat(format!("row {i}: missing {name} vector"))
                })?;
                let before = section.len();
                for value in field.split(' ') {
                    let parsed: f64 = value.parse().map_err(|_| {
                        Error::ModelFormat(format!("row {i}: bad float '{value}'"))
                    })?;
                    section.push(parsed);
                }
                if section.len() - before != dimension {
                    return Err(Error::ModelFormat(format!(
                        "row {i}: {name} vector has {} values, expected {dimension}",
                        section.len() - before
                    )));
                }
            }
        }
        if vocab.len() != activities {
            return Err(Error::ModelFormat(format!(
                "expected {activities} rows, got {}",
                vocab.len()
            )));
        }
        Ok(Self::from_parts(
            vocab,
            dimension,
            input,
            context,
            average_with_context,
        ))
    }

    /// Writes `label,v_1,...,v_d` rows (activity vectors) for inspection in
    /// spreadsheet tools. Not a load format; use [`EmbeddingModel::to_bytes`].
    pub fn export_csv(&self) -> Vec<u8> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["activity".to_string()];
        header.extend((1..=self.dimension).map(|i| format!("v{i}")));
        writer.write_record(&header).expect("write to Vec cannot fail");
        for (row, label) in self.vocab.iter().enumerate() {
            let mut record = vec![label.clone()];
            record.extend(self.activity_vector(row).iter().map(|v| v.to_string()));
            writer.write_record(&record).expect("write to Vec cannot fail");
        }
        writer.into_inner().expect("write to Vec cannot fail")
    }
}

fn parse_header_field<T: std::str::FromStr>(line: Option<&str>, key: &str) -> Result<T> {
    let line = line.ok_or_else(|| Error::ModelFormat(format!("missing '{key}' line")))?;
    let value = line
        .strip_prefix(key)
        .map(str::trim)
        .ok_or_else(|| Error::ModelFormat(format!("expected '{key} <value>', got '{line}'")))?;
    value
        .parse()
        .map_err(|_| Error::ModelFormat(format!("bad value for '{key}': '{value}'")))
}

fn escape_label(label: &str) -> String {
    label
        .replace('\\', "\\\\")
        .replace('\t', "\\t")
        .replace('\n', "\\n")
        .replace('\r', "\\r")
}

fn unescape_label(escaped: &str) -> String {
    let mut out = String::with_capacity(escaped.len());
    let mut chars = escaped.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}
