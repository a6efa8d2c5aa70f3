//! PCA through the `n x n` Gram matrix, which is the cheap side when the
//! feature dimension far exceeds the sample count.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::LearnError;

/// Eigenvalues below this fraction of the largest are treated as zero.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Orthonormal rows, by decreasing variance.
    pub components: Vec<Vec<f64>>,
    /// Population variance along each component.
    pub explained_variance: Vec<f64>,
}

impl PcaModel {
    /// Top-`k` principal components. Fewer rows come back when the centered
    /// data has rank below `k`.
    pub fn fit<S: AsRef<[f64]>>(samples: &[S], k: usize) -> Result<Self, LearnError> {
        let n = samples.len();
        if n < 2 {
            return Err(LearnError::Param(format!("PCA needs at least 2 samples, got {n}")));
        }
        let d = samples[0].as_ref().len();
        if let Some(bad) = samples.iter().position(|s| s.as_ref().len() != d) {
            return Err(LearnError::shape("pca", &[d], &[samples[bad].as_ref().len()]));
        }
        let limit = (n - 1).min(d);
        if k == 0 || k > limit {
            return Err(LearnError::Param(format!("k = {k} must be in 1..={limit} (n = {n}, d = {d})")));
        }

        let mut mean = vec![0.0; d];
        for s in samples {
            for (m, v) in mean.iter_mut().zip(s.as_ref()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let centered: Vec<Vec<f64>> =
            samples.iter().map(|s| s.as_ref().iter().zip(&mean).map(|(v, m)| v - m).collect()).collect();

        let mut gram = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
                gram[(i, j)] = v;
                gram[(j, i)] = v;
            }
        }
        let eig = SymmetricEigen::new(gram);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
        let top = eig.eigenvalues[order[0]].max(0.0);

        let mut components: Vec<Vec<f64>> = Vec::with_capacity(k);
        let mut explained_variance = Vec::with_capacity(k);
        for &j in order.iter().take(k) {
            let lambda = eig.eigenvalues[j];
            if !(lambda > RANK_TOL * top) {
                break;
            }
            let scale = 1.0 / lambda.sqrt();
            let mut c = vec![0.0; d];
            for (i, row) in centered.iter().enumerate() {
                let u = eig.eigenvectors[(i, j)] * scale;
                for (ck, v) in c.iter_mut().zip(row) {
                    *ck += u * v;
                }
            }
            // Two Gram-Schmidt passes against the rows already accepted.
            for _ in 0..2 {
                for prev in &components {
                    let dot: f64 = c.iter().zip(prev).map(|(a, b)| a * b).sum();
                    c.iter_mut().zip(prev).for_each(|(a, b)| *a -= dot * b);
                }
                let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
                c.iter_mut().for_each(|v| *v /= norm);
            }
            // Sign convention: the largest-magnitude entry is positive.
            let lead = (0..d).fold(0, |best, i| if c[i].abs() > c[best].abs() { i } else { best });
            if c[lead] < 0.0 {
                c.iter_mut().for_each(|v| *v = -*v);
            }
            components.push(c);
            explained_variance.push(lambda / n as f64);
        }
        Ok(Self { mean, components, explained_variance })
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>, LearnError> {
        if x.len() != self.dim() {
            return Err(LearnError::shape("pca transform", &[self.dim()], &[x.len()]));
        }
        Ok(self
            .components
            .iter()
            .map(|c| c.iter().zip(x).zip(&self.mean).map(|((c, v), m)| c * (v - m)).sum())
            .collect())
    }

    pub fn inverse_transform(&self, z: &[f64]) -> Vec<f64> {
        let mut x = self.mean.clone();
        for (c, &w) in self.components.iter().zip(z) {
            x.iter_mut().zip(c).for_each(|(a, b)| *a += w * b);
        }
        x
    }
}

pub fn pca_fit<S: AsRef<[f64]>>(samples: &[S], k: usize) -> Result<PcaModel, LearnError> {
    PcaModel::fit(samples, k)
}
