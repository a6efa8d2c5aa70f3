//! Deterministic synthetic recordings of a dog performing the five
//! activities, plus empty-scene background recordings.
//!
//! Every random draw comes from a ChaCha stream selected by
//! `(clip seed, frame, purpose)`, so frames can be generated in any order
//! and the output is a pure function of the configs and the seed.

mod body;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::pointcloud::{ActivityLabel, Clip, Frame, Point};
use crate::preprocess::{AxisRange, VoxelBounds};
use crate::radar::{frames_per_clip, range_resolution, validate_config, RadarConfig};

use body::{pose, Group, Motion};

pub const GENERATOR_VERSION: &str = concat!("raypet-synth/", env!("CARGO_PKG_VERSION"));

/// Meta key listing generator-injected outliers as `[frame, point]` pairs.
pub const META_OUTLIERS: &str = "outlier_points";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid synthesis config: {}", .0.join("; "))]
    Config(Vec<String>),
}

/// Fraction of body returns drawn from each part group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartWeights {
    pub torso: f64,
    pub head: f64,
    pub legs: f64,
    pub tail: f64,
}

impl PartWeights {
    fn as_array(&self) -> [f64; 4] {
        [self.torso, self.head, self.legs, self.tail]
    }
}

impl Default for PartWeights {
    fn default() -> Self {
        Self { torso: 0.45, head: 0.2, legs: 0.3, tail: 0.05 }
    }
}

/// Default [`AnimalModel::fade_prob`].
pub const DEFAULT_FADE_PROB: f64 = 0.4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnimalModel {
    /// Nose to rump (m).
    pub length: f64,
    pub shoulder_height: f64,
    /// Overall size multiplier.
    pub scale: f64,
    pub part_weights: PartWeights,
    /// Probability that a body part returns nothing in a frame. Living
    /// targets fluctuate from frame to frame, unlike fixed reflectors.
    pub fade_prob: f64,
}

impl Default for AnimalModel {
    fn default() -> Self {
        Self {
            length: 1.10,
            shoulder_height: 0.75,
            scale: 1.0,
            part_weights: PartWeights::default(),
            fade_prob: DEFAULT_FADE_PROB,
        }
    }
}

impl AnimalModel {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (name, x) in [("length", self.length), ("shoulder_height", self.shoulder_height), ("scale", self.scale)] {
            if !(x > 0.0) || !x.is_finite() {
                v.push(format!("animal.{name} must be positive, got {x}"));
            }
        }
        if !(0.0..1.0).contains(&self.fade_prob) {
            v.push(format!("animal.fade_prob must be in [0, 1), got {}", self.fade_prob));
        }
        let w = self.part_weights.as_array();
        if w.iter().any(|&x| !(x >= 0.0)) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            v.push(format!("animal.part_weights must be non-negative and sum to 1, got {w:?}"));
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    /// Fixed scene reflectors present in every frame.
    #[serde(with = "point_list")]
    pub static_clutter_points: Vec<Point>,
    /// Expected uniformly scattered outliers per frame.
    pub outlier_rate: f64,
    /// Per-axis Gaussian position noise (m), truncated at 3 sigma.
    pub jitter_sigma: f64,
    /// Probability that a body return is lost.
    pub dropout_prob: f64,
    /// Expected tail-wag returns per frame.
    pub tail_wag_rate: f64,
    /// Static reflectors placed per recording and absent from the background
    /// recording, such as furniture moved between sessions.
    pub session_clutter_points: usize,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::none()
    }
}

impl NoiseModel {
    pub fn none() -> Self {
        Self {
            static_clutter_points: Vec::new(),
            outlier_rate: 0.0,
            jitter_sigma: 0.0,
            dropout_prob: 0.0,
            tail_wag_rate: 0.0,
            session_clutter_points: 0,
        }
    }

    /// Default noise level of generated datasets.
    pub fn moderate(scene: &SceneConfig, radar: &RadarConfig) -> Self {
        Self {
            static_clutter_points: clutter_layout(12, scene, radar),
            outlier_rate: 4.0,
            jitter_sigma: 0.02,
            dropout_prob: 0.1,
            tail_wag_rate: 2.0,
            session_clutter_points: 0,
        }
    }

    /// Heavily corrupted recordings for the noise-removal comparison.
    pub fn high(scene: &SceneConfig, radar: &RadarConfig) -> Self {
        Self {
            static_clutter_points: clutter_layout(30, scene, radar),
            outlier_rate: 30.0,
            jitter_sigma: 0.03,
            dropout_prob: 0.2,
            tail_wag_rate: 6.0,
            session_clutter_points: SESSION_CLUTTER_HIGH,
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (name, x) in [
            ("outlier_rate", self.outlier_rate),
            ("jitter_sigma", self.jitter_sigma),
            ("tail_wag_rate", self.tail_wag_rate),
        ] {
            if !(x >= 0.0) || !x.is_finite() {
                v.push(format!("noise.{name} must be non-negative, got {x}"));
            }
        }
        if !(0.0..=1.0).contains(&self.dropout_prob) {
            v.push(format!("noise.dropout_prob must be in [0, 1], got {}", self.dropout_prob));
        }
        if let Some(field) = self.static_clutter_points.iter().find_map(Point::invalid_field) {
            v.push(format!("noise.static_clutter_points has an invalid {field}"));
        }
        v
    }

    /// Summary written into clip provenance.
    pub fn summary(&self) -> serde_json::Value {
        json!({
            "static_clutter_points": self.static_clutter_points.len(),
            "outlier_rate": self.outlier_rate,
            "jitter_sigma": self.jitter_sigma,
            "dropout_prob": self.dropout_prob,
            "tail_wag_rate": self.tail_wag_rate,
            "session_clutter_points": self.session_clutter_points,
        })
    }
}

mod point_list {
    use super::Point;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(points: &[Point], s: S) -> Result<S::Ok, S::Error> {
        points.iter().map(Point::as_array).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Point>, D::Error> {
        Ok(Vec::<[f64; 5]>::deserialize(d)?.into_iter().map(Point::from_array).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    /// Subject distance from the radar along boresight (m).
    pub subject_distance: f64,
    /// Radar mount height above the floor (m); the floor is at `z = -radar_height`.
    pub radar_height: f64,
    /// Mean body returns per frame.
    pub points_per_frame: f64,
    pub seed: u64,
    /// Region every generated point stays in.
    pub extent: VoxelBounds,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            subject_distance: 1.30,
            radar_height: 0.50,
            points_per_frame: 40.0,
            seed: 0,
            extent: VoxelBounds {
                x: AxisRange::new(-3.5, 3.5),
                y: AxisRange::new(0.2, 3.0),
                z: AxisRange::new(-0.5, 1.0),
            },
        }
    }
}

impl SceneConfig {
    pub fn floor_z(&self) -> f64 {
        -self.radar_height
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !self.extent.is_valid() {
            v.push("scene.extent must be finite with hi > lo on every axis".into());
        }
        if !(self.points_per_frame > 0.0) || !self.points_per_frame.is_finite() {
            v.push(format!("scene.points_per_frame must be positive, got {}", self.points_per_frame));
        }
        if !(self.radar_height > 0.0) {
            v.push(format!("scene.radar_height must be positive, got {}", self.radar_height));
        }
        // Room for the body plus per-clip placement spread on both sides.
        let y = self.extent.y;
        if !(self.subject_distance - 0.5 >= y.lo && self.subject_distance + 0.5 <= y.hi) {
            v.push(format!(
                "scene.subject_distance {} must leave 0.5 m inside extent.y [{}, {}]",
                self.subject_distance, y.lo, y.hi
            ));
        }
        if !(self.floor_z() >= self.extent.z.lo - 1e-12) {
            v.push("scene floor lies below extent.z".into());
        }
        v
    }
}

/// Clip counts and durations for a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSpec {
    pub clips_per_label: BTreeMap<ActivityLabel, usize>,
    /// Seconds for static activities and eating.
    pub clip_duration: f64,
    /// Seconds for walking clips; the dog crosses the beam faster.
    pub walking_duration: f64,
    pub background_duration: f64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self::uniform(44)
    }
}

impl DatasetSpec {
    pub fn uniform(count: usize) -> Self {
        Self {
            clips_per_label: ActivityLabel::ALL.into_iter().map(|l| (l, count)).collect(),
            clip_duration: 10.0,
            walking_duration: 5.0,
            background_duration: 1.0,
        }
    }

    pub fn duration_for(&self, label: ActivityLabel) -> f64 {
        if label == ActivityLabel::Walking {
            self.walking_duration
        } else {
            self.clip_duration
        }
    }

    pub fn total_duration(&self) -> f64 {
        self.clips_per_label.iter().map(|(l, &n)| n as f64 * self.duration_for(*l)).sum()
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.clips_per_label.is_empty() {
            v.push("dataset.clips_per_label must request at least one label".into());
        }
        for (l, &n) in &self.clips_per_label {
            if n < 1 {
                v.push(format!("dataset.clips_per_label.{l} must be at least 1"));
            }
        }
        for (name, x) in [
            ("clip_duration", self.clip_duration),
            ("walking_duration", self.walking_duration),
            ("background_duration", self.background_duration),
        ] {
            if !(x > 0.0) || !x.is_finite() {
                v.push(format!("dataset.{name} must be positive, got {x}"));
            }
        }
        v
    }
}

/// Purposes of the per-frame random streams.
#[derive(Clone, Copy)]
enum Stream {
    Body = 0,
    Tail = 1,
    Clutter = 2,
    Outliers = 3,
    Fade = 4,
}

const CLIP_STREAM: u64 = u64::MAX;

fn stream(seed: u64, frame: usize, purpose: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame as u64 * 8 + purpose as u64);
    rng
}

/// SplitMix64 finalizer, used to derive child seeds.
pub fn mix_seed(base: u64, ordinal: u64) -> u64 {
    let mut z = base ^ ordinal.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(rng) as usize
}

fn quantize(v: f64, step: f64) -> f64 {
    (v / step).round() * step
}

fn radial_velocity(pos: [f64; 3], vel: [f64; 3]) -> f64 {
    let r = (pos[0] * pos[0] + pos[1] * pos[1] + pos[2] * pos[2]).sqrt();
    if r == 0.0 {
        0.0
    } else {
        (pos[0] * vel[0] + pos[1] * vel[1] + pos[2] * vel[2]) / r
    }
}

fn intensity(pos: [f64; 3], reflectivity: f64, u: f64) -> f64 {
    let r2 = (pos[0] * pos[0] + pos[1] * pos[1] + pos[2] * pos[2]).max(0.01);
    reflectivity / r2 * (0.6 + 0.8 * u)
}

fn clamp_to(bounds: &VoxelBounds, p: [f64; 3]) -> [f64; 3] {
    [p[0].clamp(bounds.x.lo, bounds.x.hi), p[1].clamp(bounds.y.lo, bounds.y.hi), p[2].clamp(bounds.z.lo, bounds.z.hi)]
}

/// Session clutter points of the high preset.
pub const SESSION_CLUTTER_HIGH: usize = 8;

/// Fixed room reflectors: furniture and wall returns spread over the region
/// the voxel grid covers, kept clear of the subject's own range band.
/// Positions are snapped to range bins.
pub fn clutter_layout(count: usize, scene: &SceneConfig, radar: &RadarConfig) -> Vec<Point> {
    layout(count, scene, radar, 0xC1u64 << 32)
}

/// Per-recording reflectors drawn from the clip's own seed.
pub fn session_clutter_layout(count: usize, scene: &SceneConfig, radar: &RadarConfig) -> Vec<Point> {
    layout(count, scene, radar, 0xC2u64 << 32)
}

fn layout(count: usize, scene: &SceneConfig, radar: &RadarConfig, salt: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(scene.seed, salt));
    let dr = range_resolution(radar).unwrap_or(0.05);
    let ex = scene.extent;
    let x = AxisRange::new(ex.x.lo.max(-1.5), ex.x.hi.min(1.5));
    let y = AxisRange::new(ex.y.lo.max(0.3), ex.y.hi.min(2.6));
    let z = AxisRange::new(scene.floor_z().max(ex.z.lo), ex.z.hi.min(0.6));
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let py = rng.random_range(y.lo..y.hi);
        let px = rng.random_range(x.lo..x.hi);
        let pz = rng.random_range(z.lo..z.hi);
        if (py - scene.subject_distance).abs() < 0.35 {
            continue;
        }
        let py = quantize(py, dr).clamp(y.lo, y.hi);
        let pos = [px, py, pz];
        out.push(Point::new(px, py, pz, 0.0, intensity(pos, 12.0, rng.random())));
    }
    out
}

fn check_all(
    scene: &SceneConfig,
    noise: &NoiseModel,
    radar: &RadarConfig,
    animal: Option<&AnimalModel>,
) -> Result<(), SynthError> {
    let mut v: Vec<String> = validate_config(radar).into_iter().map(|c| format!("radar.{c}")).collect();
    v.extend(scene.violations());
    v.extend(noise.violations());
    if let Some(a) = animal {
        v.extend(a.violations());
    }
    if v.is_empty() {
        Ok(())
    } else {
        Err(SynthError::Config(v))
    }
}

fn draw_motion(label: ActivityLabel, duration: f64, scene: &SceneConfig, animal: &AnimalModel) -> Motion {
    let mut rng = stream(scene.seed, 0, Stream::Body);
    rng.set_stream(CLIP_STREAM);
    let size = animal.scale * rng.random_range(0.93..1.07);
    let facing = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let center_y = scene.subject_distance + rng.random_range(-0.15..0.15);
    let mut center_x = rng.random_range(-0.15..0.15);
    let mut speed = 0.0;
    if label == ActivityLabel::Walking {
        let length = animal.length * size;
        let room = (scene.extent.x.hi - scene.extent.x.lo - 2.0 * length).max(0.0);
        speed = rng.random_range(0.55..1.0f64).min(room / duration);
        // Cross the beam centered on boresight.
        center_x = -facing * speed * duration / 2.0;
    } else {
        rng.random_range(0.55..1.0f64);
    }
    let cycle_hz = match label {
        ActivityLabel::Walking => rng.random_range(1.5..2.5),
        _ => rng.random_range(1.0..2.0),
    };
    Motion {
        label,
        facing,
        center_x,
        center_y,
        length_scale: animal.length / 1.10 * size,
        height_scale: animal.shoulder_height / 0.75 * size,
        breath_hz: rng.random_range(0.2..0.4),
        breath_phase: rng.random_range(0.0..std::f64::consts::TAU),
        cycle_hz,
        cycle_phase: rng.random_range(0.0..std::f64::consts::TAU),
        speed,
        wag_hz: rng.random_range(2.0..4.0),
    }
}

struct FrameNoise<'a> {
    noise: &'a NoiseModel,
    jitter: Option<Normal<f64>>,
}

impl<'a> FrameNoise<'a> {
    fn new(noise: &'a NoiseModel) -> Self {
        let jitter = (noise.jitter_sigma > 0.0).then(|| Normal::new(0.0, noise.jitter_sigma).expect("finite sigma"));
        Self { noise, jitter }
    }

    fn jitter(&self, rng: &mut ChaCha8Rng, p: [f64; 3]) -> [f64; 3] {
        match &self.jitter {
            Some(n) => {
                let cap = 3.0 * self.noise.jitter_sigma;
                let mut d = || n.sample(rng).clamp(-cap, cap);
                [p[0] + d(), p[1] + d(), p[2] + d()]
            }
            None => p,
        }
    }

    /// Clutter, then session clutter, then outliers; returns the outlier
    /// count.
    fn scene_points(
        &self,
        seed: u64,
        frame: usize,
        extent: &VoxelBounds,
        session: &[Point],
        out: &mut Vec<Point>,
    ) -> usize {
        let mut rng = stream(seed, frame, Stream::Clutter);
        for c in self.noise.static_clutter_points.iter().chain(session) {
            let [x, y, z] = self.jitter(&mut rng, c.position());
            out.push(Point::new(x, y, z, c.velocity, c.intensity));
        }
        let mut rng = stream(seed, frame, Stream::Outliers);
        let n = poisson(&mut rng, self.noise.outlier_rate);
        for _ in 0..n {
            let pos = [
                rng.random_range(extent.x.lo..=extent.x.hi),
                rng.random_range(extent.y.lo..=extent.y.hi),
                rng.random_range(extent.z.lo..=extent.z.hi),
            ];
            let v = rng.random_range(-1.0..1.0);
            out.push(Point::new(pos[0], pos[1], pos[2], v, rng.random_range(0.2..2.0)));
        }
        n
    }
}

/// Generates one labeled recording.
///
/// Body returns are snapped to range bins along `y` before jitter, dropout,
/// tail-wag returns, static clutter, session clutter and outliers are added
/// (in that order within each frame).
pub fn synthesize_clip(
    label: ActivityLabel,
    duration: f64,
    scene: &SceneConfig,
    animal: &AnimalModel,
    noise: &NoiseModel,
    radar: &RadarConfig,
) -> Result<Clip, SynthError> {
    check_all(scene, noise, radar, Some(animal))?;
    let frames_n = frames_per_clip(duration, radar).map_err(|e| SynthError::Config(vec![e.to_string()]))?;
    let dr = range_resolution(radar).map_err(|e| SynthError::Config(vec![e.to_string()]))?;
    let motion = draw_motion(label, duration, scene, animal);
    let fnoise = FrameNoise::new(noise);
    let session = session_clutter_layout(noise.session_clutter_points, scene, radar);
    let floor = scene.floor_z();
    let weights = animal.part_weights.as_array();
    let dt = radar.frame_duration;
    const H: f64 = 1e-3;

    let generated: Vec<(Frame, Vec<usize>)> = (0..frames_n)
        .map(|i| {
            let t = i as f64 * dt;
            let now = pose(&motion, t);
            let later = pose(&motion, t + H);
            let mut pts = Vec::new();

            let mut fade = stream(scene.seed, i, Stream::Fade);
            let lit: Vec<bool> = now.parts.iter().map(|_| fade.random::<f64>() >= animal.fade_prob).collect();
            let lit_in =
                |g: Group| -> Vec<usize> { (0..now.parts.len()).filter(|&j| lit[j] && now.parts[j].0 == g).collect() };
            let groups: Vec<(Vec<usize>, f64)> = Group::ALL
                .into_iter()
                .zip(weights)
                .map(|(g, w)| (lit_in(g), w))
                .filter(|(js, w)| !js.is_empty() && *w > 0.0)
                .collect();
            let total: f64 = groups.iter().map(|(_, w)| w).sum();

            let mut rng = stream(scene.seed, i, Stream::Body);
            let n = if groups.is_empty() { 0 } else { poisson(&mut rng, scene.points_per_frame) };
            for _ in 0..n {
                let pick = rng.random::<f64>() * total;
                let mut acc = 0.0;
                let mut chosen = &groups[groups.len() - 1].0;
                for (js, w) in &groups {
                    acc += w;
                    if pick < acc {
                        chosen = js;
                        break;
                    }
                }
                let j = chosen[rng.random_range(0..chosen.len())];
                let group = now.parts[j].0;
                let u = [rng.random(), rng.random(), rng.random()];
                let keep = rng.random::<f64>() >= noise.dropout_prob;
                let shade: f64 = rng.random();
                if !keep {
                    continue;
                }
                let p0 = motion.to_world(now.parts[j].1.sample(u), t, floor);
                let p1 = motion.to_world(later.parts[j].1.sample(u), t + H, floor);
                let vel = [(p1[0] - p0[0]) / H, (p1[1] - p0[1]) / H, (p1[2] - p0[2]) / H];
                let snapped = [p0[0], quantize(p0[1], dr), p0[2]];
                let pos = fnoise.jitter(&mut rng, snapped);
                pts.push(Point::new(
                    pos[0],
                    pos[1],
                    pos[2],
                    radial_velocity(pos, vel),
                    intensity(pos, group.reflectivity(), shade),
                ));
            }

            let mut rng = stream(scene.seed, i, Stream::Tail);
            let wags = poisson(&mut rng, noise.tail_wag_rate);
            if wags > 0 {
                let c0 = motion.wag_center(t, floor);
                let c1 = motion.wag_center(t + H, floor);
                let spread = Normal::new(0.0, 0.03).expect("constant sigma");
                for _ in 0..wags {
                    let p = [
                        c0[0] + spread.sample(&mut rng),
                        quantize(c0[1] + spread.sample(&mut rng), dr),
                        c0[2] + spread.sample(&mut rng),
                    ];
                    let p = clamp_to(&scene.extent, fnoise.jitter(&mut rng, p));
                    let vel = [(c1[0] - c0[0]) / H, (c1[1] - c0[1]) / H, (c1[2] - c0[2]) / H];
                    let shade: f64 = rng.random();
                    pts.push(Point::new(p[0], p[1], p[2], radial_velocity(p, vel), intensity(p, 1.5, shade)));
                }
            }

            let first_outlier = pts.len() + noise.static_clutter_points.len() + session.len();
            let outliers = fnoise.scene_points(scene.seed, i, &scene.extent, &session, &mut pts);
            (Frame::new(i, t, pts), (first_outlier..first_outlier + outliers).collect())
        })
        .collect();

    let mut tags = Vec::new();
    let mut frames = Vec::with_capacity(generated.len());
    for (frame, outliers) in generated {
        tags.extend(outliers.into_iter().map(|k| json!([frame.index, k])));
        frames.push(frame);
    }

    let mut meta = BTreeMap::new();
    meta.insert("generator".to_owned(), json!(GENERATOR_VERSION));
    meta.insert("seed".to_owned(), json!(scene.seed));
    meta.insert("duration_s".to_owned(), json!(duration));
    meta.insert("noise".to_owned(), noise.summary());
    meta.insert(
        "motion".to_owned(),
        json!({
            "facing": motion.facing,
            "center_x": motion.center_x,
            "center_y": motion.center_y,
            "speed": motion.speed,
            "cycle_hz": motion.cycle_hz,
        }),
    );
    meta.insert(META_OUTLIERS.to_owned(), serde_json::Value::Array(tags));

    Ok(Clip {
        session_id: format!("{label}-{:016x}", scene.seed),
        label: Some(label),
        frame_duration: dt,
        frames,
        meta,
    })
}

/// Empty-scene recording: jittered static clutter plus outliers only.
/// Session clutter belongs to individual recordings and is left out.
pub fn synthesize_background(
    duration: f64,
    scene: &SceneConfig,
    noise: &NoiseModel,
    radar: &RadarConfig,
) -> Result<Clip, SynthError> {
    check_all(scene, noise, radar, None)?;
    let frames_n = frames_per_clip(duration, radar).map_err(|e| SynthError::Config(vec![e.to_string()]))?;
    let fnoise = FrameNoise::new(noise);
    let dt = radar.frame_duration;
    let mut tags = Vec::new();
    let frames = (0..frames_n)
        .map(|i| {
            let mut pts = Vec::new();
            let n = fnoise.scene_points(scene.seed, i, &scene.extent, &[], &mut pts);
            let first = noise.static_clutter_points.len();
            tags.extend((first..first + n).map(|k| json!([i, k])));
            Frame::new(i, i as f64 * dt, pts)
        })
        .collect();
    let mut meta = BTreeMap::new();
    meta.insert("generator".to_owned(), json!(GENERATOR_VERSION));
    meta.insert("seed".to_owned(), json!(scene.seed));
    meta.insert("duration_s".to_owned(), json!(duration));
    meta.insert("background".to_owned(), json!(true));
    meta.insert("noise".to_owned(), noise.summary());
    meta.insert(META_OUTLIERS.to_owned(), serde_json::Value::Array(tags));
    Ok(Clip { session_id: format!("background-{:016x}", scene.seed), label: None, frame_duration: dt, frames, meta })
}

/// Per-clip seed for the `ordinal`-th clip of a dataset.
pub fn clip_seed(base_seed: u64, ordinal: usize) -> u64 {
    mix_seed(base_seed, ordinal as u64)
}

/// Seed of the dataset's background recording.
pub fn background_seed(base_seed: u64) -> u64 {
    mix_seed(base_seed, u64::MAX)
}

/// Generates every requested clip, label by label in label order.
///
/// Session ids are `<label>-<ordinal>`; clip seeds depend only on the base
/// seed and the clip's ordinal.
pub fn synthesize_dataset(
    spec: &DatasetSpec,
    scene: &SceneConfig,
    animal: &AnimalModel,
    noise: &NoiseModel,
    radar: &RadarConfig,
    base_seed: u64,
) -> Result<Vec<Clip>, SynthError> {
    let v = spec.violations();
    if !v.is_empty() {
        return Err(SynthError::Config(v));
    }
    check_all(scene, noise, radar, Some(animal))?;
    let jobs: Vec<(usize, ActivityLabel, usize)> = spec
        .clips_per_label
        .iter()
        .flat_map(|(&label, &n)| (0..n).map(move |k| (label, k)))
        .enumerate()
        .map(|(ordinal, (label, k))| (ordinal, label, k))
        .collect();
    jobs.par_iter()
        .map(|&(ordinal, label, k)| {
            let scene = SceneConfig { seed: clip_seed(base_seed, ordinal), ..scene.clone() };
            let mut clip = synthesize_clip(label, spec.duration_for(label), &scene, animal, noise, radar)?;
            clip.session_id = format!("{label}-{k:03}");
            clip.meta.insert("ordinal".to_owned(), json!(ordinal));
            clip.meta.insert("base_seed".to_owned(), json!(base_seed));
            Ok(clip)
        })
        .collect()
}

#[cfg(test)]
mod tests;
