//! XES (XML event log) ingestion and serialization.
//!
//! Only the core attributes `concept:name` and `time:timestamp` are
//! interpreted; everything else, including nested attributes, is ignored.

use chrono::{DateTime, FixedOffset, NaiveDateTime, SecondsFormat};
use quick_xml::events::{BytesDecl, BytesEnd, BytesStart, Event as XmlEvent};
use quick_xml::{Reader, Writer};

use super::{ActivityTable, Event, EventLog, Trace};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Elem {
    Log,
    Trace,
    Event,
    Other,
}

#[derive(Default)]
struct PendingEvent {
    activity: Option<String>,
    timestamp: Option<DateTime<FixedOffset>>,
}

fn line_of(bytes: &[u8], pos: usize) -> usize {
    bytes[..pos.min(bytes.len())]
        .iter()
        .filter(|&&b| b == b'\n')
        .count()
        + 1
}

fn parse_xes_timestamp(value: &str) -> Option<DateTime<FixedOffset>> {
    if let Ok(ts) = DateTime::parse_from_rfc3339(value) {
        return Some(ts);
    }
    // Timestamps without a zone designator are read as UTC.
    NaiveDateTime::parse_from_str(value, "%Y-%m-%dT%H:%M:%S%.f")
        .ok()
        .map(|n| n.and_utc().fixed_offset())
}

const ATTRIBUTE_TAGS: [&[u8]; 6] = [b"string", b"date", b"int", b"float", b"boolean", b"id"];

/// Parses an XES document into an event log.
///
/// One trace per `<trace>` element, events sorted by timestamp. Traces need
/// a `concept:name`; events need `concept:name` and `time:timestamp`.
pub fn parse_xes(bytes: &[u8]) -> Result<EventLog> {
    let mut reader = Reader::from_reader(bytes);
    reader.trim_text(true);

    let mut stack: Vec<Elem> = Vec::new();
    let mut activities = ActivityTable::new();
    let mut traces: Vec<Trace> = Vec::new();

    let mut case_id: Option<String> = None;
    let mut pending_events: Vec<PendingEvent> = Vec::new();
    let mut buf = Vec::new();

    loop {
        let xml_event = reader.read_event_into(&mut buf).map_err(|e| Error::Xml {
            line: line_of(bytes, reader.buffer_position()),
            message: e.to_string(),
        })?;
        match xml_event {
            XmlEvent::Start(ref start) => {
                let elem = classify(start.name().as_ref(), stack.last().copied());
                if elem == Elem::Other && is_attribute_tag(start.name().as_ref()) {
                    read_attribute(start, stack.last().copied(), &mut case_id, &mut pending_events);
                }
                match elem {
                    Elem::Trace => {
                        case_id = None;
                        pending_events.clear();
                    }
                    Elem::Event => pending_events.push(PendingEvent::default()),
                    _ => {}
                }
                stack.push(elem);
            }
            XmlEvent::Empty(ref start) => {
                if is_attribute_tag(start.name().as_ref()) {
                    read_attribute(start, stack.last().copied(), &mut case_id, &mut pending_events);
                }
            }
            XmlEvent::End(_) => {
                if let Some(Elem::Trace) = stack.pop() {
                    finish_trace(
                        case_id.take(),
                        std::mem::take(&mut pending_events),
                        &mut activities,
                        &mut traces,
                    )?;
                }
            }
            XmlEvent::Eof => break,
            _ => {}
        }
        buf.clear();
    }

    EventLog::from_traces(traces, activities)
}

fn classify(name: &[u8], parent: Option<Elem>) -> Elem {
    match (name, parent) {
        (b"log", None) => Elem::Log,
        (b"trace", Some(Elem::Log)) => Elem::Trace,
        (b"event", Some(Elem::Trace)) => Elem::Event,
        _ => Elem::Other,
    }
}

fn is_attribute_tag(name: &[u8]) -> bool {
    ATTRIBUTE_TAGS.contains(&name)
}

fn read_attribute(
    start: &BytesStart,
    parent: Option<Elem>,
    case_id: &mut Option<String>,
    pending_events: &mut Vec<PendingEvent>,
) {
    // Attributes nested below other attributes have a parent of Other and
    // are skipped here.
    if parent != Some(Elem::Trace) && parent != Some(Elem::Event) {
        return;
    }
    let mut key = None;
    let mut value = None;
    for attr in start.attributes().flatten() {
        match attr.key.as_ref() {
            b"key" => key = attr.unescape_value().ok().map(|v| v.into_owned()),
            b"value" => value = attr.unescape_value().ok().map(|v| v.into_owned()),
            _ => {}
        }
    }
    let (Some(key), Some(value)) = (key, value) else {
        return;
    };
    match parent {
        Some(Elem::Trace) => {
            if key == "concept:name" {
                *case_id = Some(value);
            }
        }
        Some(Elem::Event) => {
            if let Some(event) = pending_events.last_mut() {
                match key.as_str() {
                    "concept:name" => event.activity = Some(value),
                    "time:timestamp" => event.timestamp = parse_xes_timestamp(&value),
                    _ => {}
                }
            }
        }
        _ => {}
    }
}

fn finish_trace(
    case_id: Option<String>,
    pending_events: Vec<PendingEvent>,
    activities: &mut ActivityTable,
    traces: &mut Vec<Trace>,
) -> Result<()> {
    let case_id = case_id.unwrap_or_else(|| format!("<trace #{}>", traces.len() + 1));
    if pending_events.is_empty() {
        log::warn!("skipping empty trace {case_id:?}");
        return Ok(());
    }
    let mut events = Vec::with_capacity(pending_events.len());
    for pending in pending_events {
        let activity = pending.activity.ok_or_else(|| Error::EventAttribute {
            case_id: case_id.clone(),
            what: "concept:name".into(),
        })?;
        let timestamp = pending.timestamp.ok_or_else(|| Error::EventAttribute {
            case_id: case_id.clone(),
            what: "time:timestamp".into(),
        })?;
        events.push(Event {
            activity: activities.intern(&activity),
            timestamp,
            duration_secs: 0.0,
        });
    }
    traces.push(Trace { case_id, events });
    Ok(())
}

/// Serializes a log to XES with the core concept/time attributes.
pub fn write_xes(log: &EventLog) -> Result<Vec<u8>> {
    let mut writer = Writer::new_with_indent(Vec::new(), b' ', 2);
    let xml = |e: quick_xml::Error| Error::Xml {
        line: 0,
        message: e.to_string(),
    };

    writer
        .write_event(XmlEvent::Decl(BytesDecl::new("1.0", Some("UTF-8"), None)))
        .map_err(xml)?;
    let mut root = BytesStart::new("log");
    root.push_attribute(("xes.version", "1.0"));
    root.push_attribute(("xes.features", ""));
    writer.write_event(XmlEvent::Start(root)).map_err(xml)?;
    for (name, prefix, uri) in [
        ("Concept", "concept", "http://www.xes-standard.org/concept.xesext"),
        ("Time", "time", "http://www.xes-standard.org/time.xesext"),
    ] {
        let mut ext = BytesStart::new("extension");
        ext.push_attribute(("name", name));
        ext.push_attribute(("prefix", prefix));
        ext.push_attribute(("uri", uri));
        writer.write_event(XmlEvent::Empty(ext)).map_err(xml)?;
    }

    for trace in &log.traces {
        writer
            .write_event(XmlEvent::Start(BytesStart::new("trace")))
            .map_err(xml)?;
        write_string_attr(&mut writer, "concept:name", &trace.case_id).map_err(xml)?;
        for event in &trace.events {
            writer
                .write_event(XmlEvent::Start(BytesStart::new("event")))
                .map_err(xml)?;
            write_string_attr(&mut writer, "concept:name", log.activities.label(event.activity))
                .map_err(xml)?;
            let ts = event
                .timestamp
                .to_rfc3339_opts(SecondsFormat::Millis, false);
            let mut date = BytesStart::new("date");
            date.push_attribute(("key", "time:timestamp"));
            date.push_attribute(("value", ts.as_str()));
            writer.write_event(XmlEvent::Empty(date)).map_err(xml)?;
            writer
                .write_event(XmlEvent::End(BytesEnd::new("event")))
                .map_err(xml)?;
        }
        writer
            .write_event(XmlEvent::End(BytesEnd::new("trace")))
            .map_err(xml)?;
    }
    writer
        .write_event(XmlEvent::End(BytesEnd::new("log")))
        .map_err(xml)?;
    Ok(writer.into_inner())
}

fn write_string_attr(
    writer: &mut Writer<Vec<u8>>,
    key: &str,
    value: &str,
) -> std::result::Result<(), quick_xml::Error> {
    let mut elem = BytesStart::new("string");
    elem.push_attribute(("key", key));
    elem.push_attribute(("value", value));
    writer.write_event(XmlEvent::Empty(elem))
}
