//! Radar point clouds and labeled recordings.
//!
//! Coordinates are in the radar frame: `y` along boresight (range), `x`
//! lateral (azimuth), `z` vertical relative to the radar mount.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on `timestamp = index * frame_duration`.
pub const TIMESTAMP_TOLERANCE: f64 = 1e-9;

/// One radar return.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Radial velocity (m/s).
    pub velocity: f64,
    pub intensity: f64,
}

impl Point {
    pub const FIELDS: [&'static str; 5] = ["x", "y", "z", "velocity", "intensity"];

    pub fn new(x: f64, y: f64, z: f64, velocity: f64, intensity: f64) -> Self {
        Self { x, y, z, velocity, intensity }
    }

    pub fn at(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z, velocity: 0.0, intensity: 1.0 }
    }

    pub fn position(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.x, self.y, self.z, self.velocity, self.intensity]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self::new(a[0], a[1], a[2], a[3], a[4])
    }

    pub fn distance_sq(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        dx * dx + dy * dy + dz * dz
    }

    /// Name of the first field breaking the point invariants, if any.
    pub fn invalid_field(&self) -> Option<&'static str> {
        let values = self.as_array();
        for (name, v) in Self::FIELDS.iter().zip(values) {
            if !v.is_finite() {
                return Some(name);
            }
        }
        if self.intensity < 0.0 {
            return Some("intensity");
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Frame {
    pub index: usize,
    /// Seconds from clip start.
    pub timestamp: f64,
    pub points: Vec<Point>,
}

impl Frame {
    pub fn new(index: usize, timestamp: f64, points: Vec<Point>) -> Self {
        Self { index, timestamp, points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Same frame with a different point set.
    pub fn with_points(&self, points: Vec<Point>) -> Self {
        Self { index: self.index, timestamp: self.timestamp, points }
    }
}

/// The five recorded activities and postures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivityLabel {
    Eating,
    Lying,
    Sitting,
    Standing,
    Walking,
}

impl ActivityLabel {
    pub const ALL: [ActivityLabel; 5] = [
        ActivityLabel::Eating,
        ActivityLabel::Lying,
        ActivityLabel::Sitting,
        ActivityLabel::Standing,
        ActivityLabel::Walking,
    ];
    pub const COUNT: usize = 5;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ActivityLabel::Eating => "eating",
            ActivityLabel::Lying => "lying",
            ActivityLabel::Sitting => "sitting",
            ActivityLabel::Standing => "standing",
            ActivityLabel::Walking => "walking",
        }
    }
}

impl fmt::Display for ActivityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown activity label {0:?}")]
pub struct UnknownLabel(pub String);

impl FromStr for ActivityLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|l| l.as_str() == s).ok_or_else(|| UnknownLabel(s.to_owned()))
    }
}

/// Label string used for empty-scene recordings.
pub const BACKGROUND_LABEL: &str = "background";

/// A labeled recording session.
#[derive(Debug, Clone, PartialEq)]
pub struct Clip {
    pub session_id: String,
    /// `None` marks an empty-scene background recording.
    pub label: Option<ActivityLabel>,
    pub frame_duration: f64,
    pub frames: Vec<Frame>,
    pub meta: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClipInvariantError {
    #[error("frame {frame}: non-contiguous frame index {index}, expected {frame}")]
    NonContiguousIndex { frame: usize, index: usize },
    #[error("frame {frame}: timestamp {timestamp} does not match index x frame duration")]
    Timestamp { frame: usize, timestamp: f64 },
    #[error("frame {frame}, point {point}: invalid field {field}")]
    InvalidPoint { frame: usize, point: usize, field: &'static str },
    #[error("frame duration must be positive and finite, got {0}")]
    FrameDuration(f64),
}

impl Clip {
    pub fn is_background(&self) -> bool {
        self.label.is_none()
    }

    pub fn label_str(&self) -> &'static str {
        self.label.map_or(BACKGROUND_LABEL, ActivityLabel::as_str)
    }

    pub fn total_points(&self) -> usize {
        self.frames.iter().map(Frame::len).sum()
    }

    /// Every point of every frame, in order.
    pub fn pooled_points(&self) -> Vec<Point> {
        self.frames.iter().flat_map(|f| f.points.iter().copied()).collect()
    }

    pub fn validate(&self) -> Result<(), ClipInvariantError> {
        if !(self.frame_duration > 0.0) || !self.frame_duration.is_finite() {
            return Err(ClipInvariantError::FrameDuration(self.frame_duration));
        }
        for (i, frame) in self.frames.iter().enumerate() {
            check_frame(frame, i, self.frame_duration)?;
        }
        Ok(())
    }
}

pub(crate) fn check_frame(frame: &Frame, position: usize, frame_duration: f64) -> Result<(), ClipInvariantError> {
    if frame.index != position {
        return Err(ClipInvariantError::NonContiguousIndex { frame: position, index: frame.index });
    }
    let expected = frame.index as f64 * frame_duration;
    if !((frame.timestamp - expected).abs() <= TIMESTAMP_TOLERANCE) {
        return Err(ClipInvariantError::Timestamp { frame: position, timestamp: frame.timestamp });
    }
    for (j, p) in frame.points.iter().enumerate() {
        if let Some(field) = p.invalid_field() {
            return Err(ClipInvariantError::InvalidPoint { frame: position, point: j, field });
        }
    }
    Ok(())
}

/// Axis-aligned box; `None` bounds mean nothing has been added.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct BoundingBox {
    pub min: Option<[f64; 3]>,
    pub max: Option<[f64; 3]>,
}

impl BoundingBox {
    pub fn is_empty(&self) -> bool {
        self.min.is_none()
    }

    pub fn include(&mut self, p: &Point) {
        let pos = p.position();
        match (&mut self.min, &mut self.max) {
            (Some(lo), Some(hi)) => {
                for k in 0..3 {
                    lo[k] = lo[k].min(pos[k]);
                    hi[k] = hi[k].max(pos[k]);
                }
            }
            _ => {
                self.min = Some(pos);
                self.max = Some(pos);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClipStats {
    pub frame_count: usize,
    pub total_points: usize,
    pub min_points_per_frame: usize,
    pub mean_points_per_frame: f64,
    pub max_points_per_frame: usize,
    pub bounding_box: BoundingBox,
}

pub fn clip_stats(clip: &Clip) -> ClipStats {
    let mut bbox = BoundingBox::default();
    let mut total = 0usize;
    let mut min = usize::MAX;
    let mut max = 0usize;
    for frame in &clip.frames {
        let n = frame.len();
        total += n;
        min = min.min(n);
        max = max.max(n);
        for p in &frame.points {
            bbox.include(p);
        }
    }
    let frames = clip.frames.len();
    ClipStats {
        frame_count: frames,
        total_points: total,
        min_points_per_frame: if frames == 0 { 0 } else { min },
        mean_points_per_frame: if frames == 0 { 0.0 } else { total as f64 / frames as f64 },
        max_points_per_frame: max,
        bounding_box: bbox,
    }
}
