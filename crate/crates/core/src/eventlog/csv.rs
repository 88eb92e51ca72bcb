//! CSV ingestion and serialization: header row, configurable column names,
//! chrono (strftime-style) timestamp formats.

use chrono::{DateTime, FixedOffset, NaiveDateTime};
use csv::{ReaderBuilder, WriterBuilder};

use super::{ActivityTable, Event, EventLog, Trace};
use crate::error::{Error, Result};

/// Column mapping and timestamp format for CSV logs.
///
/// The format string follows chrono's strftime mini-language
/// (e.g. `%Y-%m-%d %H:%M:%S`). Formats without a UTC offset are read as UTC.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvColumns {
    pub case: String,
    pub activity: String,
    pub timestamp: String,
    pub timestamp_format: String,
}

impl Default for CsvColumns {
    fn default() -> Self {
        Self {
            case: "case".into(),
            activity: "activity".into(),
            timestamp: "timestamp".into(),
            timestamp_format: "%Y-%m-%dT%H:%M:%S%.3f%:z".into(),
        }
    }
}

fn parse_timestamp(value: &str, format: &str, row: usize) -> Result<DateTime<FixedOffset>> {
    if let Ok(ts) = DateTime::parse_from_str(value, format) {
        return Ok(ts);
    }
    if let Ok(naive) = NaiveDateTime::parse_from_str(value, format) {
        return Ok(naive.and_utc().fixed_offset());
    }
    Err(Error::Timestamp {
        row,
        value: value.to_string(),
        format: format.to_string(),
    })
}

/// Parses a CSV log: rows grouped by case (first-appearance order), events
/// sorted by timestamp within each case.
pub fn parse_csv(bytes: &[u8], columns: &CsvColumns) -> Result<EventLog> {
    let mut reader = ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let headers = reader
        .headers()
        .map_err(|e| Error::CsvRow {
            row: 1,
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let case_col = col(&columns.case)?;
    let activity_col = col(&columns.activity)?;
    let timestamp_col = col(&columns.timestamp)?;

    let mut activities = ActivityTable::new();
    let mut traces: Vec<Trace> = Vec::new();
    let mut trace_of_case: std::collections::HashMap<String, usize> =
        std::collections::HashMap::new();

    for record in reader.records() {
        let record = record.map_err(|e| Error::CsvRow {
            row: e
                .position()
                .map(|p| p.line() as usize)
                .unwrap_or(0),
            message: e.to_string(),
        })?;
        let row = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = |idx: usize| -> Result<&str> {
            record.get(idx).ok_or(Error::CsvRow {
                row,
                message: format!("missing field {idx}"),
            })
        };
        let case_id = field(case_col)?.to_string();
        let activity = activities.intern(field(activity_col)?);
        let timestamp = parse_timestamp(field(timestamp_col)?, &columns.timestamp_format, row)?;

        let idx = *trace_of_case.entry(case_id.clone()).or_insert_with(|| {
            traces.push(Trace {
                case_id,
                events: Vec::new(),
            });
            traces.len() - 1
        });
        traces[idx].events.push(Event {
            activity,
            timestamp,
            duration_secs: 0.0,
        });
    }

    EventLog::from_traces(traces, activities)
}

/// Serializes a log back to CSV with the given column mapping.
pub fn write_csv(log: &EventLog, columns: &CsvColumns) -> Result<Vec<u8>> {
    let mut writer = WriterBuilder::new().from_writer(Vec::new());
    writer
        .write_record([&columns.case, &columns.activity, &columns.timestamp])
        .map_err(|e| Error::CsvRow {
            row: 1,
            message: e.to_string(),
        })?;
    for trace in &log.traces {
        for event in &trace.events {
            let ts = event
                .timestamp
                .format(&columns.timestamp_format)
                .to_string();
            writer
                .write_record([
                    trace.case_id.as_str(),
                    log.activities.label(event.activity),
                    ts.as_str(),
                ])
                .map_err(|e| Error::CsvRow {
                    row: 0,
                    message: e.to_string(),
                })?;
        }
    }
    writer
        .into_inner()
        .map_err(|e| Error::CsvRow {
            row: 0,
            message: e.to_string(),
        })
}
