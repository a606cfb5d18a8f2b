//! JSON Lines opinion files.
//!
//! One record per line:
//!
//! ```json
//! {"case_id":"test-0001","annotator_id":"user-0042","timestamp":1200,"split":"test","lines":[[31.5,22.0,33.1,100.0]]}
//! ```
//!
//! Coordinates are `[x1, y1, x2, y2]` in `[0, 100]`; either endpoint may come
//! first. Blank lines are ignored.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::consensus::{Opinion, Split};
use crate::error::{Error, Result};
use crate::geometry::{LineSegment, COORD_MAX, COORD_MIN};

const FIELDS: [&str; 5] = ["case_id", "annotator_id", "timestamp", "split", "lines"];

#[derive(Serialize)]
struct OpinionRecord<'a> {
    case_id: &'a str,
    annotator_id: &'a str,
    timestamp: i64,
    split: Split,
    lines: Vec<[f64; 4]>,
}

fn record_err(line: usize, field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Record {
        line,
        field: field.into(),
        message: message.into(),
    }
}

fn required<'a>(obj: &'a Map<String, Value>, line: usize, field: &str) -> Result<&'a Value> {
    obj.get(field).ok_or_else(|| record_err(line, field, "missing"))
}

fn non_empty_str(obj: &Map<String, Value>, line: usize, field: &str) -> Result<String> {
    match required(obj, line, field)? {
        Value::String(s) if !s.is_empty() => Ok(s.clone()),
        Value::String(_) => Err(record_err(line, field, "must not be empty")),
        other => Err(record_err(line, field, format!("expected a string, got {other}"))),
    }
}

fn parse_lines(value: &Value, line: usize) -> Result<Vec<LineSegment>> {
    let Value::Array(items) = value else {
        return Err(record_err(line, "lines", "expected an array of [x1, y1, x2, y2]"));
    };
    let mut out = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let coords = match item {
            Value::Array(c) if c.len() == 4 => c,
            _ => return Err(record_err(line, format!("lines[{i}]"), "expected exactly 4 numbers")),
        };
        let mut v = [0.0; 4];
        for (j, c) in coords.iter().enumerate() {
            let field = format!("lines[{i}][{j}]");
            let x = c.as_f64().ok_or_else(|| record_err(line, &field, format!("expected a number, got {c}")))?;
            if !(COORD_MIN..=COORD_MAX).contains(&x) {
                return Err(record_err(line, &field, format!("coordinate {x} outside [0, 100]")));
            }
            v[j] = x;
        }
        out.push(LineSegment::from_coords(v[0], v[1], v[2], v[3]));
    }
    Ok(out)
}

fn parse_record(text: &str, line: usize, strict: bool, warned: &mut BTreeSet<String>) -> Result<Opinion> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| record_err(line, "<record>", format!("malformed JSON at column {}: {e}", e.column())))?;
    let Value::Object(obj) = value else {
        return Err(record_err(line, "<record>", "expected a JSON object"));
    };
    for key in obj.keys() {
        if FIELDS.contains(&key.as_str()) {
            continue;
        }
        if strict {
            return Err(record_err(line, key, "unknown field"));
        }
        if warned.insert(key.clone()) {
            log::warn!("line {line}: ignoring unknown field `{key}`");
        }
    }
    let case_id = non_empty_str(&obj, line, "case_id")?;
    let annotator_id = non_empty_str(&obj, line, "annotator_id")?;
    let ts = required(&obj, line, "timestamp")?;
    let timestamp = ts
        .as_i64()
        .ok_or_else(|| record_err(line, "timestamp", format!("expected integer milliseconds, got {ts}")))?;
    let split = match required(&obj, line, "split")? {
        Value::String(s) => s.parse::<Split>().map_err(|_| record_err(line, "split", format!("expected \"train\" or \"test\", got \"{s}\"")))?,
        other => return Err(record_err(line, "split", format!("expected a string, got {other}"))),
    };
    let lines = parse_lines(required(&obj, line, "lines")?, line)?;
    Ok(Opinion {
        case_id,
        annotator_id,
        lines,
        timestamp,
        split,
    })
}

/// Reads opinion records. With `strict`, unknown fields are errors;
/// otherwise each distinct unknown field is warned about once.
pub fn parse_opinions<R: BufRead>(reader: R, strict: bool) -> Result<Vec<Opinion>> {
    let mut out = Vec::new();
    let mut warned = BTreeSet::new();
    for (i, text) in reader.lines().enumerate() {
        let text = text?;
        if text.trim().is_empty() {
            continue;
        }
        out.push(parse_record(&text, i + 1, strict, &mut warned)?);
    }
    Ok(out)
}

pub fn parse_opinions_str(text: &str, strict: bool) -> Result<Vec<Opinion>> {
    parse_opinions(text.as_bytes(), strict)
}

pub fn read_opinions(path: &Path, strict: bool) -> Result<Vec<Opinion>> {
    let file = File::open(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    parse_opinions(BufReader::new(file), strict).map_err(|e| match e {
        Error::Record { line, field, message } => Error::Record {
            line,
            field,
            message: format!("{message} (in {})", path.display()),
        },
        other => other,
    })
}

/// One opinion as a single JSON line, without the trailing newline.
pub fn opinion_to_json(o: &Opinion) -> Result<String> {
    let rec = OpinionRecord {
        case_id: &o.case_id,
        annotator_id: &o.annotator_id,
        timestamp: o.timestamp,
        split: o.split,
        lines: o.lines.iter().map(LineSegment::coords).collect(),
    };
    Ok(serde_json::to_string(&rec)?)
}

pub fn write_opinions<W: Write>(mut w: W, opinions: &[Opinion]) -> Result<()> {
    for o in opinions {
        writeln!(w, "{}", opinion_to_json(o)?)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_opinions(path: &Path, opinions: &[Opinion]) -> Result<()> {
    write_opinions(BufWriter::new(File::create(path)?), opinions)
}
