//! `.clip.jsonl` reading and writing.
//!
//! Line 1 is a header object
//! `{"session_id": str, "label": str, "frame_duration_s": num, "meta": {..}}`,
//! every following line one frame `{"index": int, "t": num, "points": [[x,y,z,v,i], ..]}`.
//! Floats are written with 17 significant digits so a write/read cycle is
//! bit exact.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::pointcloud::{ActivityLabel, Clip, Frame, Point, BACKGROUND_LABEL, TIMESTAMP_TOLERANCE};

pub const CLIP_EXTENSION: &str = "clip.jsonl";

#[derive(Debug, Error)]
pub enum ClipIoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("I/O error: {0}")]
    Stream(#[from] std::io::Error),
    #[error("line {line}: parse error: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: invalid {field}: {message}")]
    Validation { line: usize, field: String, message: String },
}

impl ClipIoError {
    fn with_path(self, path: &Path) -> Self {
        match self {
            ClipIoError::Stream(source) => ClipIoError::Io { path: path.to_owned(), source },
            other => other,
        }
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_clip<W: Write>(clip: &Clip, sink: W) -> Result<(), ClipIoError> {
    let mut out = BufWriter::new(sink);
    let meta = serde_json::to_string(&clip.meta).expect("json values always serialize");
    writeln!(
        out,
        "{{\"session_id\":{},\"label\":{},\"frame_duration_s\":{},\"meta\":{}}}",
        serde_json::Value::String(clip.session_id.clone()),
        serde_json::Value::String(clip.label_str().to_owned()),
        fmt_f64(clip.frame_duration),
        meta
    )?;
    let mut line = String::new();
    for frame in &clip.frames {
        line.clear();
        line.push_str(&format!("{{\"index\":{},\"t\":{},\"points\":[", frame.index, fmt_f64(frame.timestamp)));
        for (k, p) in frame.points.iter().enumerate() {
            if k > 0 {
                line.push(',');
            }
            line.push('[');
            for (j, v) in p.as_array().into_iter().enumerate() {
                if j > 0 {
                    line.push(',');
                }
                line.push_str(&fmt_f64(v));
            }
            line.push(']');
        }
        line.push_str("]}");
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHeader {
    session_id: String,
    label: String,
    frame_duration_s: f64,
    #[serde(default)]
    meta: BTreeMap<String, serde_json::Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFrame {
    index: u64,
    t: serde_json::Value,
    points: Vec<Vec<serde_json::Value>>,
}

fn number(value: &serde_json::Value, line: usize, field: &str) -> Result<f64, ClipIoError> {
    match value {
        serde_json::Value::Number(n) => n.as_f64().ok_or_else(|| ClipIoError::Validation {
            line,
            field: field.to_owned(),
            message: format!("{n} is not representable as a float"),
        }),
        serde_json::Value::String(s) => Err(ClipIoError::Validation {
            line,
            field: field.to_owned(),
            message: format!("non-finite or non-numeric value {s:?}"),
        }),
        other => Err(ClipIoError::Validation {
            line,
            field: field.to_owned(),
            message: format!("expected a number, got {other}"),
        }),
    }
}

pub fn read_clip<R: BufRead>(source: R) -> Result<Clip, ClipIoError> {
    let mut lines = source.lines().enumerate();
    let (_, first) = lines.next().ok_or(ClipIoError::Parse { line: 1, message: "missing header line".into() })?;
    let header: RawHeader =
        serde_json::from_str(&first?).map_err(|e| ClipIoError::Parse { line: 1, message: e.to_string() })?;
    if !(header.frame_duration_s > 0.0) || !header.frame_duration_s.is_finite() {
        return Err(ClipIoError::Validation {
            line: 1,
            field: "frame_duration_s".into(),
            message: format!("must be positive, got {}", header.frame_duration_s),
        });
    }
    let label = if header.label == BACKGROUND_LABEL {
        None
    } else {
        Some(header.label.parse::<ActivityLabel>().map_err(|e| ClipIoError::Validation {
            line: 1,
            field: "label".into(),
            message: e.to_string(),
        })?)
    };

    let mut frames = Vec::new();
    for (i, text) in lines {
        let line = i + 1;
        let text = text?;
        if text.trim().is_empty() {
            return Err(ClipIoError::Parse { line, message: "empty line".into() });
        }
        let raw: RawFrame =
            serde_json::from_str(&text).map_err(|e| ClipIoError::Parse { line, message: e.to_string() })?;
        let expected = frames.len();
        if raw.index != expected as u64 {
            return Err(ClipIoError::Validation {
                line,
                field: "index".into(),
                message: format!("non-contiguous frame index {}, expected {expected}", raw.index),
            });
        }
        let t = number(&raw.t, line, "t")?;
        if !((t - expected as f64 * header.frame_duration_s).abs() <= TIMESTAMP_TOLERANCE) {
            return Err(ClipIoError::Validation {
                line,
                field: "t".into(),
                message: format!("timestamp {t} does not equal index x frame duration"),
            });
        }
        let mut points = Vec::with_capacity(raw.points.len());
        for (k, values) in raw.points.iter().enumerate() {
            if values.len() != 5 {
                return Err(ClipIoError::Parse {
                    line,
                    message: format!("point {k} has {} fields, expected 5", values.len()),
                });
            }
            let mut arr = [0.0; 5];
            for (j, v) in values.iter().enumerate() {
                arr[j] = number(v, line, Point::FIELDS[j])?;
            }
            let p = Point::from_array(arr);
            if let Some(field) = p.invalid_field() {
                return Err(ClipIoError::Validation {
                    line,
                    field: field.into(),
                    message: format!("point {k} has invalid {field}"),
                });
            }
            points.push(p);
        }
        frames.push(Frame::new(expected, t, points));
    }

    Ok(Clip {
        session_id: header.session_id,
        label,
        frame_duration: header.frame_duration_s,
        frames,
        meta: header.meta,
    })
}

pub fn write_clip_file(clip: &Clip, path: &Path) -> Result<(), ClipIoError> {
    let file = File::create(path).map_err(|source| ClipIoError::Io { path: path.to_owned(), source })?;
    write_clip(clip, file).map_err(|e| e.with_path(path))
}

pub fn read_clip_file(path: &Path) -> Result<Clip, ClipIoError> {
    let file = File::open(path).map_err(|source| ClipIoError::Io { path: path.to_owned(), source })?;
    read_clip(BufReader::new(file)).map_err(|e| e.with_path(path))
}
