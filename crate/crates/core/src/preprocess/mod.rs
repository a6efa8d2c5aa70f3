//! Point-cloud preprocessing chain.
//!
//! Stage order is fixed: background filter, static clutter removal, DBSCAN
//! outlier removal (per frame), frame aggregation, voxelization (per frame)
//! and windowing. Disabled stages pass their input through unchanged.

mod noise;
mod spatial;
mod voxel;
mod window;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pointcloud::{ActivityLabel, Clip, Frame};

pub use noise::{background_filter, background_filter_all, dbscan, dbscan_denoise, static_clutter_removal, DbscanRole};
pub use voxel::{voxel_index, voxelize, voxelize_with, AxisRange, VoxelBounds, VoxelDims, VoxelGrid, VoxelValue};
pub use window::{aggregate_frames, make_windows, window_count, WindowSample};

/// On/off switch per optional stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageToggles {
    pub background_filter: bool,
    pub static_clutter: bool,
    pub dbscan: bool,
    pub aggregation: bool,
}

impl Default for StageToggles {
    fn default() -> Self {
        Self { background_filter: true, static_clutter: true, dbscan: true, aggregation: true }
    }
}

impl StageToggles {
    pub const NONE: StageToggles =
        StageToggles { background_filter: false, static_clutter: false, dbscan: false, aggregation: false };

    /// Turns off a stage by name. `noise_removal` covers the three noise
    /// stages at once.
    pub fn disable(&mut self, name: &str) -> Result<(), PipelineError> {
        match name.trim() {
            "background_filter" | "filtering" => self.background_filter = false,
            "static_clutter" | "clutter" => self.static_clutter = false,
            "dbscan" => self.dbscan = false,
            "noise_removal" => {
                self.background_filter = false;
                self.static_clutter = false;
                self.dbscan = false;
            }
            "aggregation" => self.aggregation = false,
            other => return Err(PipelineError::Config(vec![format!("unknown stage {other:?}")])),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Meters; points this close to the empty-scene reference are dropped.
    pub background_radius: f64,
    /// Track length `T` in frames for static clutter removal.
    pub clutter_window: usize,
    /// Meters.
    pub clutter_radius: f64,
    pub dbscan_eps: f64,
    /// Includes the point itself.
    pub dbscan_min_points: usize,
    /// Frames merged per aggregated frame (`K`).
    pub aggregation_factor: usize,
    pub voxel_dims: VoxelDims,
    pub voxel_bounds: VoxelBounds,
    pub voxel_value: VoxelValue,
    /// Grids per window (`W`).
    pub window_size: usize,
    /// Grids between window starts (`SW`).
    pub slide: usize,
    pub stages: StageToggles,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            background_radius: 0.10,
            clutter_window: 5,
            clutter_radius: 0.10,
            dbscan_eps: 0.5,
            dbscan_min_points: 2,
            aggregation_factor: 2,
            voxel_dims: VoxelDims::default(),
            voxel_bounds: VoxelBounds::default(),
            voxel_value: VoxelValue::Count,
            window_size: 30,
            slide: 10,
            stages: StageToggles::default(),
        }
    }
}

impl PipelineConfig {
    /// Windowing and voxelization only: noise removal and aggregation off.
    pub fn baseline(&self) -> Self {
        Self { stages: StageToggles::NONE, ..self.clone() }
    }

    pub fn with_window(&self, window_size: usize, slide: usize) -> Self {
        Self { window_size, slide, ..self.clone() }
    }

    /// Effective aggregation factor after the stage toggle.
    pub fn effective_k(&self) -> usize {
        if self.stages.aggregation {
            self.aggregation_factor
        } else {
            1
        }
    }

    /// All violated invariants; empty means valid.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut positive = |name: &str, x: f64| {
            if !(x > 0.0) || !x.is_finite() {
                v.push(format!("{name} must be positive, got {x}"));
            }
        };
        positive("background_radius", self.background_radius);
        positive("clutter_radius", self.clutter_radius);
        positive("dbscan_eps", self.dbscan_eps);
        if self.clutter_window < 2 {
            v.push(format!("clutter_window must be at least 2, got {}", self.clutter_window));
        }
        if self.dbscan_min_points < 1 {
            v.push("dbscan_min_points must be at least 1".into());
        }
        if self.aggregation_factor < 1 {
            v.push("aggregation_factor must be at least 1".into());
        }
        let d = self.voxel_dims;
        if d.m < 1 || d.n < 1 || d.p < 1 {
            v.push(format!("voxel_dims must all be at least 1, got {}x{}x{}", d.m, d.n, d.p));
        }
        if !self.voxel_bounds.is_valid() {
            v.push("voxel_bounds must be finite with hi > lo on every axis".into());
        }
        if self.window_size < 1 {
            v.push("window_size must be at least 1".into());
        }
        if self.slide < 1 || self.slide > self.window_size {
            v.push(format!("slide must be in [1, window_size], got {}", self.slide));
        }
        v
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(PipelineError::Config(v))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("invalid pipeline config: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error("stage {stage}: {message}")]
    Stage { stage: &'static str, message: String },
}

/// Runs the noise-removal stages on a clip's frames.
pub fn denoise_frames(
    clip: &Clip,
    background: Option<&Clip>,
    config: &PipelineConfig,
) -> Result<Vec<Frame>, PipelineError> {
    let mut frames = clip.frames.clone();
    if config.stages.background_filter {
        let reference = background.ok_or(PipelineError::Stage {
            stage: "background_filter",
            message: "stage enabled but no empty-scene reference clip given".into(),
        })?;
        frames = background_filter_all(&frames, &reference.pooled_points(), config.background_radius);
    }
    if config.stages.static_clutter {
        frames = static_clutter_removal(&frames, config.clutter_radius, config.clutter_window);
    }
    if config.stages.dbscan {
        frames = frames.iter().map(|f| dbscan_denoise(f, config.dbscan_eps, config.dbscan_min_points)).collect();
    }
    Ok(frames)
}

/// Every stage up to and including voxelization: one grid per aggregated
/// frame.
pub fn clip_to_grids(
    clip: &Clip,
    background: Option<&Clip>,
    config: &PipelineConfig,
) -> Result<Vec<VoxelGrid>, PipelineError> {
    config.validate()?;
    let frames = denoise_frames(clip, background, config)?;
    let frames = aggregate_frames(&frames, config.effective_k());
    Ok(frames.iter().map(|f| voxelize_with(f, config.voxel_dims, &config.voxel_bounds, config.voxel_value)).collect())
}

fn require_label(clip: &Clip) -> Result<ActivityLabel, PipelineError> {
    clip.label.ok_or_else(|| PipelineError::Stage {
        stage: "windowing",
        message: format!("clip {} is an empty-scene recording and has no activity label", clip.session_id),
    })
}

/// The full chain for one labeled clip.
pub fn run_pipeline(
    clip: &Clip,
    background: Option<&Clip>,
    config: &PipelineConfig,
) -> Result<Vec<WindowSample>, PipelineError> {
    let label = require_label(clip)?;
    let grids = clip_to_grids(clip, background, config)?;
    Ok(make_windows(&grids, label, &clip.session_id, config.window_size, config.slide))
}

/// Windows a clip's grids with a different `(W, SW)` without rerunning the
/// earlier stages.
pub fn window_grids(
    clip: &Clip,
    grids: &[VoxelGrid],
    window: usize,
    slide: usize,
) -> Result<Vec<WindowSample>, PipelineError> {
    let label = require_label(clip)?;
    if window < 1 || slide < 1 || slide > window {
        return Err(PipelineError::Config(vec![format!("invalid window/slide {window}/{slide}")]));
    }
    Ok(make_windows(grids, label, &clip.session_id, window, slide))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointcloud::Point;
    use std::collections::BTreeMap;

    fn clip(frames: usize) -> Clip {
        Clip {
            session_id: "c0".into(),
            label: Some(ActivityLabel::Standing),
            frame_duration: 0.03333,
            frames: (0..frames)
                .map(|i| Frame::new(i, i as f64 * 0.03333, vec![Point::at(0.1 * (i % 7) as f64, 1.2, -0.2)]))
                .collect(),
            meta: BTreeMap::new(),
        }
    }

    #[test]
    fn default_ten_second_clip_gives_13_windows() {
        let c = clip(300);
        let bg = Clip { label: None, frames: vec![], ..clip(0) };
        assert_eq!(run_pipeline(&c, Some(&bg), &PipelineConfig::default()).unwrap().len(), 13);
    }

    #[test]
    fn missing_background_is_a_stage_error() {
        let err = run_pipeline(&clip(10), None, &PipelineConfig::default()).unwrap_err();
        assert!(matches!(err, PipelineError::Stage { stage: "background_filter", .. }));
        let cfg = PipelineConfig {
            stages: StageToggles { background_filter: false, ..Default::default() },
            ..Default::default()
        };
        assert!(run_pipeline(&clip(10), None, &cfg).is_ok());
    }

    #[test]
    fn baseline_equals_plain_voxelize_and_window() {
        let c = clip(90);
        let cfg = PipelineConfig::default().baseline();
        let got = run_pipeline(&c, None, &cfg).unwrap();
        let grids: Vec<_> = c.frames.iter().map(|f| voxelize(f, cfg.voxel_dims, &cfg.voxel_bounds)).collect();
        assert_eq!(got, make_windows(&grids, ActivityLabel::Standing, "c0", 30, 10));
        assert_eq!(got.len(), 7);
    }

    #[test]
    fn config_violations_collected() {
        let cfg = PipelineConfig { dbscan_eps: 0.0, slide: 40, aggregation_factor: 0, ..Default::default() };
        assert_eq!(cfg.violations().len(), 3);
        assert!(PipelineConfig::default().violations().is_empty());
    }

    #[test]
    fn disable_by_name() {
        let mut s = StageToggles::default();
        s.disable("noise_removal").unwrap();
        s.disable("aggregation").unwrap();
        assert_eq!(s, StageToggles::NONE);
        assert!(s.disable("voxelization").is_err());
    }
}
