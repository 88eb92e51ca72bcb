//! Privacy-preserving event log anonymization.
//!
//! The crate groups similar traces of a business-process event log until
//! every trace variant has at least `k` members and the per-group duration
//! distributions stay within `t` of the overall population (k-anonymity and
//! t-closeness). Merge targets are picked either by Levenshtein distance or
//! by an asymmetric distance over learned activity embeddings.

pub mod distance;
pub mod embedding;
pub mod error;
pub mod eventlog;
pub mod metrics;
pub mod pretsa;
pub mod sweep;

pub use error::{Error, Result};
