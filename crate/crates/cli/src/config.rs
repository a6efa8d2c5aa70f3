//! Run configuration: compiled defaults, a TOML file and `--set` overrides,
//! merged in that order.

use std::path::{Path, PathBuf};

use raypet_classifiers::ClassifierConfig;
use raypet_core::synth::{clutter_layout, AnimalModel, DatasetSpec, NoiseModel, SceneConfig};
use raypet_core::{PipelineConfig, RadarConfig};
use raypet_eval::{SplitSpec, PUBLISHED_SWEEP};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseLevel {
    None,
    #[default]
    Moderate,
    High,
}

/// Noise preset plus optional per-field overrides. Clutter points are laid
/// out from the scene and radar, so only their count is configurable.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSettings {
    pub level: NoiseLevel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clutter_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outlier_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jitter_sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dropout_prob: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_wag_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub session_clutter_points: Option<usize>,
}

impl NoiseSettings {
    pub fn model(&self, scene: &SceneConfig, radar: &RadarConfig) -> NoiseModel {
        let mut m = match self.level {
            NoiseLevel::None => NoiseModel::none(),
            NoiseLevel::Moderate => NoiseModel::moderate(scene, radar),
            NoiseLevel::High => NoiseModel::high(scene, radar),
        };
        if let Some(n) = self.clutter_points {
            m.static_clutter_points = clutter_layout(n, scene, radar);
        }
        m.outlier_rate = self.outlier_rate.unwrap_or(m.outlier_rate);
        m.jitter_sigma = self.jitter_sigma.unwrap_or(m.jitter_sigma);
        m.dropout_prob = self.dropout_prob.unwrap_or(m.dropout_prob);
        m.tail_wag_rate = self.tail_wag_rate.unwrap_or(m.tail_wag_rate);
        m.session_clutter_points = self.session_clutter_points.unwrap_or(m.session_clutter_points);
        m
    }

    /// Every field spelled out, so the printed config shows what runs.
    pub fn resolved(&self, scene: &SceneConfig, radar: &RadarConfig) -> Self {
        let m = self.model(scene, radar);
        Self {
            level: self.level,
            clutter_points: Some(m.static_clutter_points.len()),
            outlier_rate: Some(m.outlier_rate),
            jitter_sigma: Some(m.jitter_sigma),
            dropout_prob: Some(m.dropout_prob),
            tail_wag_rate: Some(m.tail_wag_rate),
            session_clutter_points: Some(m.session_clutter_points),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    /// `(W, SW)` pairs.
    pub pairs: Vec<(usize, usize)>,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self { pairs: PUBLISHED_SWEEP.to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Drives generation, the split and model initialization.
    pub seed: u64,
    pub out_dir: PathBuf,
    pub radar: RadarConfig,
    pub scene: SceneConfig,
    pub animal: AnimalModel,
    pub noise: NoiseSettings,
    pub dataset: DatasetSpec,
    pub pipeline: PipelineConfig,
    pub classifier: ClassifierConfig,
    pub split: SplitSpec,
    pub sweep: SweepSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: PathBuf::from("out"),
            radar: RadarConfig::default(),
            scene: SceneConfig::default(),
            animal: AnimalModel::default(),
            noise: NoiseSettings::default(),
            dataset: DatasetSpec::default(),
            pipeline: PipelineConfig::default(),
            classifier: ClassifierConfig::default(),
            split: SplitSpec::default(),
            sweep: SweepSettings::default(),
        }
    }
}

/// Command-line inputs that shape the config.
#[derive(Debug, Default, Clone)]
pub struct ConfigSources<'a> {
    pub file: Option<&'a Path>,
    pub overrides: &'a [String],
    pub seed: Option<u64>,
}

fn merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_table() && v.is_table() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

/// Parses `a.b.c=value`. The value is read as a TOML literal, falling back
/// to a bare string.
pub fn parse_override(text: &str) -> Result<(Vec<String>, toml::Value), CliError> {
    let (key, raw) = text
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("--set expects section.key=value, got {text:?}")))?;
    let path: Vec<String> = key.trim().split('.').map(str::to_owned).collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(CliError::Usage(format!("--set has an empty key segment in {key:?}")));
    }
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_owned()));
    Ok((path, value))
}

fn set_path(root: &mut toml::Value, path: &[String], value: toml::Value) -> Result<(), CliError> {
    let mut node = root;
    for (i, seg) in path.iter().enumerate() {
        let table = node.as_table_mut().ok_or_else(|| {
            CliError::Usage(format!("--set {}: {} is not a section", path.join("."), path[..i].join(".")))
        })?;
        if i + 1 == path.len() {
            table.insert(seg.clone(), value);
            return Ok(());
        }
        node = table.entry(seg.clone()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    Ok(())
}

impl RunConfig {
    /// Defaults, then the file, then `--set` overrides, then `--seed`. Not
    /// validated; see [`RunConfig::validate`].
    pub fn load(src: &ConfigSources<'_>) -> Result<Self, CliError> {
        let mut value = toml::Value::try_from(RunConfig::default()).expect("defaults serialize");
        if let Some(path) = src.file {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let file: toml::Value = toml::from_str(&text)
                .map_err(|e| CliError::Config(vec![format!("{}: {}", path.display(), e.message())]))?;
            merge(&mut value, file);
        }
        for o in src.overrides {
            let (path, v) = parse_override(o)?;
            set_path(&mut value, &path, v)?;
        }
        let mut cfg: RunConfig =
            value.try_into().map_err(|e: toml::de::Error| CliError::Config(vec![e.message().to_owned()]))?;
        if let Some(seed) = src.seed {
            cfg.seed = seed;
        }
        cfg.split.seed = cfg.seed;
        cfg.scene.seed = cfg.seed;
        Ok(cfg)
    }

    /// Every violation of every section.
    pub fn violations(&self) -> Vec<String> {
        let mut v: Vec<String> = self.radar.validate().iter().map(|c| format!("radar.{c}")).collect();
        v.extend(self.scene.violations());
        v.extend(self.animal.violations());
        v.extend(self.noise_model().violations());
        v.extend(self.dataset.violations());
        v.extend(self.pipeline.violations());
        v.extend(self.classifier.violations());
        v.extend(self.split.violations());
        for &(w, sw) in &self.sweep.pairs {
            if w == 0 || sw == 0 || sw > w {
                v.push(format!("sweep.pairs entry ({w}, {sw}) needs 1 <= SW <= W"));
            }
        }
        v
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(v))
        }
    }

    pub fn noise_model(&self) -> NoiseModel {
        self.noise.model(&self.scene, &self.radar)
    }

    /// The config as it will run, with noise fields filled in.
    pub fn resolved(&self) -> Self {
        Self { noise: self.noise.resolved(&self.scene, &self.radar), ..self.clone() }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.resolved()).expect("config serializes")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.resolved()).expect("config serializes")
    }
}
