//! Network builders and the shared Adam training loop.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use raypet_core::preprocess::{VoxelDims, WindowSample};
use raypet_learn::layers::pooled_len;
use raypet_learn::{softmax, softmax_cross_entropy, Activation, AdamState, Layer, SeqOutput, Sequential, Tensor};
use serde::{Deserialize, Serialize};

use crate::features::model_input;
use crate::{ClassifierConfig, ClassifierError, ClassifierKind, CLASSES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NeuralTraining {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Share of training samples, taken as whole sessions, held out to pick
    /// the best epoch.
    pub validation_fraction: f64,
}

impl Default for NeuralTraining {
    fn default() -> Self {
        Self { epochs: 40, batch_size: 16, learning_rate: 0.001, validation_fraction: 0.15 }
    }
}

impl NeuralTraining {
    pub fn violations(&self, section: &str) -> Vec<String> {
        let mut v = Vec::new();
        if self.epochs == 0 {
            v.push(format!("{section}.training.epochs must be positive"));
        }
        if self.batch_size == 0 {
            v.push(format!("{section}.training.batch_size must be positive"));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            v.push(format!("{section}.training.learning_rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            v.push(format!("{section}.training.validation_fraction must be in [0, 1)"));
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpConfig {
    /// Widths of the three hidden layers; the fourth layer is the output.
    pub hidden: Vec<usize>,
    pub training: NeuralTraining,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self { hidden: vec![256, 128, 64], training: NeuralTraining::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BiLstmConfig {
    /// Units per direction.
    pub hidden: usize,
    pub training: NeuralTraining,
}

impl Default for BiLstmConfig {
    fn default() -> Self {
        Self { hidden: 64, training: NeuralTraining::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TdCnnConfig {
    pub conv_channels: [usize; 2],
    /// Per-step embedding width.
    pub embedding: usize,
    /// Bi-LSTM units per direction.
    pub hidden: usize,
    pub training: NeuralTraining,
}

impl Default for TdCnnConfig {
    fn default() -> Self {
        Self { conv_channels: [8, 16], embedding: 64, hidden: 64, training: NeuralTraining::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    /// Mean loss on the held-out sessions; the training loss when there are
    /// none.
    pub validation_loss: f64,
}

/// Shape of one network input.
pub fn input_shape(kind: ClassifierKind, dims: VoxelDims, window: usize) -> Vec<usize> {
    match kind {
        ClassifierKind::Mlp | ClassifierKind::SvmPca => vec![window * dims.len()],
        ClassifierKind::BiLstm => vec![window, dims.len()],
        ClassifierKind::TdCnnBiLstm => vec![window, 1, dims.m, dims.n, dims.p],
    }
}

/// The per-step CNN of the TD-CNN model.
pub fn step_cnn(cfg: &TdCnnConfig, dims: VoxelDims, rng: &mut ChaCha8Rng) -> Sequential {
    let [c1, c2] = cfg.conv_channels;
    let pooled = pooled_len(pooled_len(dims.m)) * pooled_len(pooled_len(dims.n)) * pooled_len(pooled_len(dims.p));
    Sequential::new(vec![
        Layer::conv3d(1, c1, Activation::Relu, rng),
        Layer::MaxPool3d,
        Layer::conv3d(c1, c2, Activation::Relu, rng),
        Layer::MaxPool3d,
        Layer::Flatten,
        Layer::dense(c2 * pooled, cfg.embedding, Activation::Relu, rng),
    ])
}

/// Untrained network with weights drawn from `seed`. Outputs raw logits.
pub fn build_network(
    kind: ClassifierKind,
    config: &ClassifierConfig,
    dims: VoxelDims,
    window: usize,
    seed: u64,
) -> Sequential {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = dims.len();
    let net = match kind {
        ClassifierKind::Mlp | ClassifierKind::SvmPca => {
            let h = &config.mlp.hidden;
            Sequential::new(vec![
                Layer::dense(window * d, h[0], Activation::Relu, &mut rng),
                Layer::dense(h[0], h[1], Activation::Relu, &mut rng),
                Layer::dense(h[1], h[2], Activation::Relu, &mut rng),
                Layer::dense(h[2], CLASSES, Activation::Linear, &mut rng),
            ])
        }
        ClassifierKind::BiLstm => {
            let h = config.bilstm.hidden;
            Sequential::new(vec![
                Layer::bidirectional(d, h, SeqOutput::Last, &mut rng),
                Layer::dense(2 * h, CLASSES, Activation::Linear, &mut rng),
            ])
        }
        ClassifierKind::TdCnnBiLstm => {
            let t = &config.tdcnn;
            let cnn = step_cnn(t, dims, &mut rng);
            Sequential::new(vec![
                Layer::TimeDistributed(cnn),
                Layer::bidirectional(t.embedding, t.hidden, SeqOutput::Last, &mut rng),
                Layer::dense(2 * t.hidden, CLASSES, Activation::Linear, &mut rng),
            ])
        }
    };
    debug_assert_eq!(net.output_shape(&input_shape(kind, dims, window)).ok(), Some(vec![CLASSES]));
    net
}

pub fn sample_tensor(kind: ClassifierKind, dims: VoxelDims, window: usize, sample: &WindowSample) -> Tensor {
    Tensor { shape: input_shape(kind, dims, window), data: model_input(sample) }
}

pub(crate) fn predict_scores(
    kind: ClassifierKind,
    network: &Sequential,
    dims: VoxelDims,
    window: usize,
    sample: &WindowSample,
) -> Result<[f64; CLASSES], ClassifierError> {
    let logits = network.infer(&sample_tensor(kind, dims, window, sample))?;
    let p = softmax(&logits.data);
    let mut out = [0.0; CLASSES];
    out.copy_from_slice(&p);
    Ok(out)
}

/// Splits sample indices into training and validation parts by session.
/// Sessions are shuffled from `rng` and moved to validation until it holds
/// at least `fraction` of the samples; one session always stays behind.
pub fn validation_split(samples: &[WindowSample], fraction: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let mut sessions: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        sessions.entry(&s.session_id).or_default().push(i);
    }
    let mut order: Vec<Vec<usize>> = sessions.into_values().collect();
    order.shuffle(rng);
    let target = fraction * samples.len() as f64;
    let mut val = Vec::new();
    let mut taken = 0;
    while fraction > 0.0 && (val.len() as f64) < target && order.len() - taken > 1 {
        val.extend(&order[taken]);
        taken += 1;
    }
    let mut train: Vec<usize> = order[taken..].iter().flatten().copied().collect();
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

pub(crate) struct NeuralOutcome {
    pub network: Sequential,
    pub best_epoch: usize,
    pub history: Vec<EpochStats>,
}

fn mean_loss(net: &Sequential, xs: &[Tensor], ys: &[usize], idx: &[usize]) -> Result<f64, ClassifierError> {
    let mut total = 0.0;
    for &i in idx {
        total += softmax_cross_entropy(&net.infer(&xs[i])?.data, ys[i]).0;
    }
    Ok(total / idx.len().max(1) as f64)
}

pub(crate) fn train_neural(
    kind: ClassifierKind,
    config: &ClassifierConfig,
    dims: VoxelDims,
    window: usize,
    samples: &[WindowSample],
    seed: u64,
    on_epoch: &mut dyn FnMut(&EpochStats),
) -> Result<NeuralOutcome, ClassifierError> {
    let training = match kind {
        ClassifierKind::Mlp => &config.mlp.training,
        ClassifierKind::BiLstm => &config.bilstm.training,
        ClassifierKind::TdCnnBiLstm => &config.tdcnn.training,
        ClassifierKind::SvmPca => return Err(ClassifierError::Config("svm_pca is not a neural kind".into())),
    };
    let mut net = build_network(kind, config, dims, window, seed);
    let xs: Vec<Tensor> = samples.iter().map(|s| sample_tensor(kind, dims, window, s)).collect();
    let ys: Vec<usize> = samples.iter().map(|s| s.label.index()).collect();

    let mut split_rng = ChaCha8Rng::seed_from_u64(seed);
    split_rng.set_stream(1);
    let (train_idx, val_idx) = validation_split(samples, training.validation_fraction, &mut split_rng);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(seed);
    shuffle_rng.set_stream(2);

    let mut adam = AdamState::new(&net.params(), training.learning_rate);
    let mut best = (f64::INFINITY, 0, net.clone());
    let mut history = Vec::with_capacity(training.epochs);
    let mut order = train_idx.clone();
    for epoch in 1..=training.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(training.batch_size) {
            let mut grads = net.zero_grads();
            for &i in batch {
                let (y, caches) = net.forward(&xs[i])?;
                let (loss, g) = softmax_cross_entropy(&y.data, ys[i]);
                epoch_loss += loss;
                net.backward(&caches, &Tensor::vector(g), &mut grads)?;
            }
            let scale = 1.0 / batch.len() as f64;
            grads.iter_mut().for_each(|g| g.scale(scale));
            adam.step(&mut net.params_mut(), &grads)?;
        }
        let train_loss = epoch_loss / order.len() as f64;
        if !train_loss.is_finite() || !net.params().iter().all(|p| p.all_finite()) {
            return Err(ClassifierError::Divergence { epoch });
        }
        let validation_loss = if val_idx.is_empty() { train_loss } else { mean_loss(&net, &xs, &ys, &val_idx)? };
        if !validation_loss.is_finite() {
            return Err(ClassifierError::Divergence { epoch });
        }
        let stats = EpochStats { epoch, train_loss, validation_loss };
        on_epoch(&stats);
        history.push(stats);
        if validation_loss < best.0 {
            best = (validation_loss, epoch, net.clone());
        }
    }
    Ok(NeuralOutcome { network: best.2, best_epoch: best.1, history })
}
