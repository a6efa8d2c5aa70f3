//! The four window classifiers: SVM on PCA-reduced features, a four-layer
//! MLP, a Bi-LSTM over per-grid vectors, and a time-distributed 3-D CNN
//! feeding a Bi-LSTM.

pub mod features;
pub mod fixtures;
pub mod neural;
pub mod svm;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use raypet_core::preprocess::{VoxelDims, WindowSample};
use raypet_core::ActivityLabel;
use raypet_learn::{argmax, LearnError, Sequential};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use features::{flatten_features, model_input, unflatten_features};
pub use neural::{BiLstmConfig, EpochStats, MlpConfig, NeuralTraining, TdCnnConfig};
pub use svm::{Gamma, GridCell, SvmModel, SvmPcaConfig};

pub const CLASSES: usize = ActivityLabel::COUNT;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("training set is empty")]
    Empty,
    #[error("training set has only one class ({0}); need at least two")]
    SingleClass(ActivityLabel),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("training diverged at epoch {epoch}: non-finite loss")]
    Divergence { epoch: usize },
    #[error("invalid classifier config: {0}")]
    Config(String),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    SvmPca,
    Mlp,
    BiLstm,
    TdCnnBiLstm,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] =
        [ClassifierKind::SvmPca, ClassifierKind::Mlp, ClassifierKind::BiLstm, ClassifierKind::TdCnnBiLstm];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::SvmPca => "svm_pca",
            ClassifierKind::Mlp => "mlp",
            ClassifierKind::BiLstm => "bi_lstm",
            ClassifierKind::TdCnnBiLstm => "td_cnn_bi_lstm",
        }
    }

    pub fn is_neural(self) -> bool {
        self != ClassifierKind::SvmPca
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassifierKind {
    type Err = ClassifierError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "svm" | "svm_pca" => Ok(ClassifierKind::SvmPca),
            "mlp" => Ok(ClassifierKind::Mlp),
            "bilstm" | "bi_lstm" => Ok(ClassifierKind::BiLstm),
            "tdcnn" | "td_cnn" | "tdcnn_bilstm" | "td_cnn_bi_lstm" => Ok(ClassifierKind::TdCnnBiLstm),
            other => Err(ClassifierError::Config(format!(
                "unknown classifier {other:?} (expected svm_pca, mlp, bi_lstm or td_cnn_bi_lstm)"
            ))),
        }
    }
}

/// Settings for every classifier kind; `kind` picks the one to train.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub kind: ClassifierKind,
    pub svm: SvmPcaConfig,
    pub mlp: MlpConfig,
    pub bilstm: BiLstmConfig,
    pub tdcnn: TdCnnConfig,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            kind: ClassifierKind::TdCnnBiLstm,
            svm: SvmPcaConfig::default(),
            mlp: MlpConfig::default(),
            bilstm: BiLstmConfig::default(),
            tdcnn: TdCnnConfig::default(),
        }
    }
}

impl ClassifierConfig {
    pub fn with_kind(&self, kind: ClassifierKind) -> Self {
        Self { kind, ..self.clone() }
    }

    /// Sets the epoch count of every neural kind.
    pub fn with_epochs(mut self, epochs: usize) -> Self {
        self.mlp.training.epochs = epochs;
        self.bilstm.training.epochs = epochs;
        self.tdcnn.training.epochs = epochs;
        self
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = self.svm.violations();
        v.extend(self.mlp.training.violations("mlp"));
        v.extend(self.bilstm.training.violations("bilstm"));
        v.extend(self.tdcnn.training.violations("tdcnn"));
        if self.mlp.hidden.len() != 3 || self.mlp.hidden.contains(&0) {
            v.push("mlp.hidden must list three positive widths (four dense layers in total)".into());
        }
        if self.bilstm.hidden == 0 {
            v.push("bilstm.hidden must be positive".into());
        }
        let t = &self.tdcnn;
        if t.conv_channels.contains(&0) || t.embedding == 0 || t.hidden == 0 {
            v.push("tdcnn widths must be positive".into());
        }
        v
    }

    pub fn validate(&self) -> Result<(), ClassifierError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(ClassifierError::Config(v.join("; ")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelBody {
    Neural {
        network: Sequential,
        /// 1-based epoch whose weights were kept.
        best_epoch: usize,
    },
    Svm(SvmModel),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: ActivityLabel,
    /// Softmax probabilities for neural models, one-vs-rest decision values
    /// for the SVM.
    pub scores: [f64; CLASSES],
}

pub const CHECKPOINT_FORMAT: &str = "raypet-model";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format: String,
    pub version: u32,
    pub kind: ClassifierKind,
    pub dims: VoxelDims,
    pub window: usize,
    pub seed: u64,
    pub config: ClassifierConfig,
    pub train_samples: usize,
    /// Per-epoch losses (neural kinds).
    pub history: Vec<EpochStats>,
    /// Where the training data came from; filled in by the caller.
    #[serde(default)]
    pub provenance: serde_json::Value,
    pub body: ModelBody,
}

fn check_training_set(samples: &[WindowSample]) -> Result<(VoxelDims, usize), ClassifierError> {
    let first = samples.first().ok_or(ClassifierError::Empty)?;
    let dims =
        first.grids.first().map(|g| g.dims).ok_or_else(|| ClassifierError::Shape("window has no grids".into()))?;
    let window = first.grids.len();
    for s in samples {
        features::check_sample(s, dims, window)?;
    }
    if samples.iter().all(|s| s.label == first.label) {
        return Err(ClassifierError::SingleClass(first.label));
    }
    Ok((dims, window))
}

/// Trains `config.kind` on `samples`. Deterministic in `seed`.
pub fn train(samples: &[WindowSample], config: &ClassifierConfig, seed: u64) -> Result<TrainedModel, ClassifierError> {
    train_with_log(samples, config, seed, &mut |_| {})
}

/// [`train`], calling `on_epoch` after every neural epoch.
pub fn train_with_log(
    samples: &[WindowSample],
    config: &ClassifierConfig,
    seed: u64,
    on_epoch: &mut dyn FnMut(&EpochStats),
) -> Result<TrainedModel, ClassifierError> {
    config.validate()?;
    let (dims, window) = check_training_set(samples)?;
    let (body, history) = if config.kind == ClassifierKind::SvmPca {
        (ModelBody::Svm(svm::train_svm(samples, &config.svm)?), Vec::new())
    } else {
        let out = neural::train_neural(config.kind, config, dims, window, samples, seed, on_epoch)?;
        (ModelBody::Neural { network: out.network, best_epoch: out.best_epoch }, out.history)
    };
    Ok(TrainedModel {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        kind: config.kind,
        dims,
        window,
        seed,
        config: config.clone(),
        train_samples: samples.len(),
        history,
        provenance: serde_json::Value::Null,
        body,
    })
}

impl TrainedModel {
    pub fn predict(&self, sample: &WindowSample) -> Result<Prediction, ClassifierError> {
        features::check_sample(sample, self.dims, self.window)?;
        let scores = match &self.body {
            ModelBody::Neural { network, .. } => {
                neural::predict_scores(self.kind, network, self.dims, self.window, sample)?
            }
            ModelBody::Svm(m) => m.decision(&model_input(sample))?,
        };
        let label = ActivityLabel::from_index(argmax(&scores)).expect("five scores");
        Ok(Prediction { label, scores })
    }

    pub fn predict_all(&self, samples: &[WindowSample]) -> Result<Vec<Prediction>, ClassifierError> {
        samples.iter().map(|s| self.predict(s)).collect()
    }

    /// Fraction of `samples` predicted correctly.
    pub fn accuracy(&self, samples: &[WindowSample]) -> Result<f64, ClassifierError> {
        if samples.is_empty() {
            return Ok(0.0);
        }
        let hits = self.predict_all(samples)?.iter().zip(samples).filter(|(p, s)| p.label == s.label).count();
        Ok(hits as f64 / samples.len() as f64)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ClassifierError> {
        let err = |message: String| ClassifierError::Checkpoint { path: "<memory>".into(), message };
        let head: serde_json::Value = serde_json::from_str(text).map_err(|e| err(e.to_string()))?;
        if head.get("format").and_then(|v| v.as_str()) != Some(CHECKPOINT_FORMAT) {
            return Err(err("not a model checkpoint".into()));
        }
        let version = head.get("version").and_then(|v| v.as_u64());
        if version != Some(u64::from(CHECKPOINT_VERSION)) {
            return Err(err(format!("unsupported checkpoint version {version:?}")));
        }
        serde_json::from_value(head).map_err(|e| err(e.to_string()))
    }

    /// Writes to a temporary sibling and renames over `path`.
    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_json())?;
        std::fs::rename(&tmp, path)
    }

    pub fn load(path: &Path) -> Result<Self, ClassifierError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ClassifierError::Checkpoint { path: path.display().to_string(), message: e.to_string() })?;
        Self::from_json(&text).map_err(|e| match e {
            ClassifierError::Checkpoint { message, .. } => {
                ClassifierError::Checkpoint { path: path.display().to_string(), message }
            }
            other => other,
        })
    }
}
