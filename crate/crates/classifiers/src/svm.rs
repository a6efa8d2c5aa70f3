//! One-vs-rest RBF SVMs on PCA-reduced features.
//!
//! Each binary machine solves the bias-free dual over the kernel `K + 1`
//! (the constant absorbs the bias) by coordinate ascent, sweeping the
//! samples in order until every KKT violation is below the tolerance.

use std::collections::BTreeMap;

use rayon::prelude::*;
use raypet_core::preprocess::WindowSample;
use raypet_learn::PcaModel;
use serde::{Deserialize, Serialize};

use crate::features::model_input;
use crate::{ClassifierError, CLASSES};

/// RBF width candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gamma {
    Value(f64),
    /// `1 / d'` with `d'` the number of PCA components.
    Named(GammaRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaRule {
    InverseDim,
}

impl Gamma {
    pub const INVERSE_DIM: Gamma = Gamma::Named(GammaRule::InverseDim);

    pub fn resolve(self, dim: usize) -> f64 {
        match self {
            Gamma::Value(v) => v,
            Gamma::Named(GammaRule::InverseDim) => 1.0 / dim.max(1) as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmPcaConfig {
    /// Fixed component count; when unset, `min(max_components, n_train - 1)`.
    pub pca_components: Option<usize>,
    pub max_components: usize,
    pub c_grid: Vec<f64>,
    pub gamma_grid: Vec<Gamma>,
    /// Cross-validation folds over sessions for the grid search.
    pub folds: usize,
    /// KKT tolerance of the dual solver.
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for SvmPcaConfig {
    fn default() -> Self {
        Self {
            pca_components: None,
            max_components: 3000,
            c_grid: vec![0.1, 1.0, 10.0],
            gamma_grid: vec![Gamma::INVERSE_DIM, Gamma::Value(0.01), Gamma::Value(0.001)],
            folds: 3,
            tolerance: 1e-3,
            max_sweeps: 1000,
        }
    }
}

impl SvmPcaConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.c_grid.is_empty() || self.c_grid.iter().any(|&c| !(c > 0.0) || !c.is_finite()) {
            v.push("svm.c_grid must be non-empty with positive values".into());
        }
        if self.gamma_grid.is_empty()
            || self.gamma_grid.iter().any(|g| !(g.resolve(1) > 0.0) || !g.resolve(1).is_finite())
        {
            v.push("svm.gamma_grid must be non-empty with positive values".into());
        }
        if self.folds < 2 {
            v.push("svm.folds must be at least 2".into());
        }
        if !(self.tolerance > 0.0) {
            v.push("svm.tolerance must be positive".into());
        }
        if self.max_components == 0 || self.pca_components == Some(0) {
            v.push("svm component counts must be positive".into());
        }
        if self.max_sweeps == 0 {
            v.push("svm.max_sweeps must be positive".into());
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub c: f64,
    pub gamma: f64,
    /// `None` when the grid has a single cell or too few sessions to fold.
    pub cv_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub pca: PcaModel,
    pub c: f64,
    pub gamma: f64,
    /// Projected training vectors with a non-zero coefficient in any machine.
    pub support: Vec<Vec<f64>>,
    /// `coef[class][s] = alpha * y` for support vector `s`; `None` for a
    /// class absent from training.
    pub coef: Vec<Option<Vec<f64>>>,
    pub grid: Vec<GridCell>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Dual coordinate ascent on `idx` with labels `y` (+-1) over the kernel
/// rows `k` (already including the +1). Returns alpha per entry of `idx`.
fn solve_binary(k: &[Vec<f64>], idx: &[usize], y: &[f64], c: f64, tol: f64, max_sweeps: usize) -> Vec<f64> {
    let n = idx.len();
    let mut alpha = vec![0.0; n];
    // f[j] = sum_i alpha_i y_i K'(i, j)
    let mut f = vec![0.0; n];
    for _ in 0..max_sweeps {
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let g = 1.0 - y[i] * f[i];
            let pg = if alpha[i] <= 0.0 {
                g.max(0.0)
            } else if alpha[i] >= c {
                (-g).max(0.0)
            } else {
                g.abs()
            };
            worst = worst.max(pg);
            if pg <= 0.0 {
                continue;
            }
            let row = &k[idx[i]];
            let kii = row[idx[i]];
            let new = (alpha[i] + g / kii).clamp(0.0, c);
            let delta = (new - alpha[i]) * y[i];
            if delta != 0.0 {
                alpha[i] = new;
                for (fj, &j) in f.iter_mut().zip(idx) {
                    *fj += delta * row[j];
                }
            }
        }
        if worst < tol {
            break;
        }
    }
    alpha
}

/// One-vs-rest machines on `idx`. Entry `k` is `None` when class `k` has no
/// positive sample; otherwise `(alpha * y)` aligned with `idx`.
fn train_ovr(
    k: &[Vec<f64>],
    labels: &[usize],
    idx: &[usize],
    c: f64,
    tol: f64,
    max_sweeps: usize,
) -> Vec<Option<Vec<f64>>> {
    (0..CLASSES)
        .map(|class| {
            if !idx.iter().any(|&i| labels[i] == class) {
                return None;
            }
            let y: Vec<f64> = idx.iter().map(|&i| if labels[i] == class { 1.0 } else { -1.0 }).collect();
            let alpha = solve_binary(k, idx, &y, c, tol, max_sweeps);
            Some(alpha.iter().zip(&y).map(|(a, y)| a * y).collect())
        })
        .collect()
}

/// Per-class decision values from kernel values against the training set.
/// Absent classes score one below the lowest present class.
fn decide(coef: &[Option<Vec<f64>>], kernel_row: impl Fn(usize) -> f64, n: usize) -> [f64; CLASSES] {
    let kr: Vec<f64> = (0..n).map(&kernel_row).collect();
    let mut out = [f64::NAN; CLASSES];
    for (class, c) in coef.iter().enumerate() {
        if let Some(c) = c {
            out[class] = c.iter().zip(&kr).map(|(a, k)| a * k).sum();
        }
    }
    let floor = out.iter().copied().filter(|v| !v.is_nan()).fold(f64::INFINITY, f64::min) - 1.0;
    out.map(|v| if v.is_nan() { floor } else { v })
}

fn argmax(scores: &[f64]) -> usize {
    raypet_learn::argmax(scores)
}

/// Fold of every sample: sessions sorted by `(label, id)` and dealt round
/// robin, so each fold sees every class that has enough sessions.
fn session_folds(samples: &[&WindowSample], folds: usize) -> (Vec<usize>, usize) {
    let mut sessions: BTreeMap<(usize, &str), ()> = BTreeMap::new();
    let mut first_label: BTreeMap<&str, usize> = BTreeMap::new();
    for s in samples {
        first_label.entry(&s.session_id).or_insert(s.label.index());
    }
    for (id, l) in &first_label {
        sessions.insert((*l, id), ());
    }
    let folds = folds.min(sessions.len());
    let fold_of: BTreeMap<&str, usize> =
        sessions.keys().enumerate().map(|(i, (_, id))| (*id, i % folds.max(1))).collect();
    (samples.iter().map(|s| fold_of[s.session_id.as_str()]).collect(), folds)
}

pub(crate) fn train_svm(samples: &[WindowSample], cfg: &SvmPcaConfig) -> Result<SvmModel, ClassifierError> {
    // Canonical order makes the model independent of input order.
    let mut sorted: Vec<&WindowSample> = samples.iter().collect();
    sorted.sort_by(|a, b| {
        (a.session_id.as_str(), a.start_frame, a.label)
            .cmp(&(b.session_id.as_str(), b.start_frame, b.label))
            .then_with(|| model_input(a).partial_cmp(&model_input(b)).unwrap_or(std::cmp::Ordering::Equal))
    });
    let x: Vec<Vec<f64>> = sorted.iter().map(|s| model_input(s)).collect();
    let labels: Vec<usize> = sorted.iter().map(|s| s.label.index()).collect();
    let n = x.len();
    let d = x[0].len();
    let k = cfg.pca_components.unwrap_or(cfg.max_components).min(n - 1).min(d).max(1);
    let pca = PcaModel::fit(&x, k)?;
    let z: Vec<Vec<f64>> = x.iter().map(|v| pca.transform(v)).collect::<Result<_, _>>()?;
    let dist: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| sq_dist(&z[i], &z[j])).collect()).collect();
    let kernel = |gamma: f64| -> Vec<Vec<f64>> {
        dist.iter().map(|r| r.iter().map(|d| (-gamma * d).exp() + 1.0).collect()).collect()
    };

    let (fold, nfolds) = session_folds(&sorted, cfg.folds);
    let dim = pca.k();
    let cells: Vec<(f64, f64)> =
        cfg.c_grid.iter().flat_map(|&c| cfg.gamma_grid.iter().map(move |g| (c, g.resolve(dim)))).collect();
    let grid: Vec<GridCell> = if nfolds < 2 || cells.len() == 1 {
        cells.iter().map(|&(c, gamma)| GridCell { c, gamma, cv_accuracy: None }).collect()
    } else {
        cells
            .par_iter()
            .map(|&(c, gamma)| {
                let km = kernel(gamma);
                let mut hits = 0usize;
                for f in 0..nfolds {
                    let train: Vec<usize> = (0..n).filter(|&i| fold[i] != f).collect();
                    let machines = train_ovr(&km, &labels, &train, c, cfg.tolerance, cfg.max_sweeps);
                    for i in (0..n).filter(|&i| fold[i] == f) {
                        let scores = decide(&machines, |t| km[i][train[t]], train.len());
                        hits += usize::from(argmax(&scores) == labels[i]);
                    }
                }
                GridCell { c, gamma, cv_accuracy: Some(hits as f64 / n as f64) }
            })
            .collect()
    };
    // Best accuracy; ties go to the earliest cell.
    let best =
        grid.iter().enumerate().fold(0, |b, (i, cell)| if cell.cv_accuracy > grid[b].cv_accuracy { i } else { b });
    let (c, gamma) = (grid[best].c, grid[best].gamma);

    let km = kernel(gamma);
    let all: Vec<usize> = (0..n).collect();
    let machines = train_ovr(&km, &labels, &all, c, cfg.tolerance, cfg.max_sweeps);
    let keep: Vec<usize> = (0..n).filter(|&i| machines.iter().flatten().any(|m| m[i] != 0.0)).collect();
    Ok(SvmModel {
        support: keep.iter().map(|&i| z[i].clone()).collect(),
        coef: machines.into_iter().map(|m| m.map(|m| keep.iter().map(|&i| m[i]).collect())).collect(),
        pca,
        c,
        gamma,
        grid,
    })
}

impl SvmModel {
    /// Decision value of every class for an unreduced feature vector.
    pub fn decision(&self, features: &[f64]) -> Result<[f64; CLASSES], ClassifierError> {
        let z = self.pca.transform(features)?;
        Ok(decide(&self.coef, |s| (-self.gamma * sq_dist(&z, &self.support[s])).exp() + 1.0, self.support.len()))
    }
}
