//! Central-difference gradient checker.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::layers::{Layer, Sequential};
use crate::loss::softmax_cross_entropy;
use crate::{LearnError, Tensor};

pub const STEP: f64 = 1e-5;

/// Scalar function of the model output that gets differentiated.
#[derive(Debug, Clone, Copy)]
pub enum Objective {
    /// `sum(r * y)` with a fixed random `r` drawn from the seed.
    Projection(u64),
    /// Softmax cross-entropy against a class.
    CrossEntropy(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// `|analytic - numeric| / max(|analytic|, |numeric|, 1e-6)`, worst case.
    pub max_rel_error: f64,
    pub checked: usize,
    /// Coordinates skipped because the function is not smooth there (a ReLU
    /// or max-pool switch inside the step).
    pub skipped: usize,
    pub worst: String,
}

impl GradCheckReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_error < tol && self.checked > 0 && self.skipped * 20 <= self.checked
    }
}

fn value(model: &Sequential, x: &Tensor, obj: &Objective, r: &[f64]) -> Result<f64, LearnError> {
    let y = model.infer(x)?;
    Ok(match obj {
        Objective::Projection(_) => y.data.iter().zip(r).map(|(a, b)| a * b).sum(),
        Objective::CrossEntropy(t) => softmax_cross_entropy(&y.data, *t).0,
    })
}

fn rel_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
}

/// Compares analytic input and parameter gradients of `model` at `x` with
/// central differences. At most `per_tensor` coordinates of each tensor are
/// probed (chosen from `seed`).
pub fn check_model(
    model: &Sequential,
    x: &Tensor,
    obj: Objective,
    per_tensor: usize,
    seed: u64,
) -> Result<GradCheckReport, LearnError> {
    let (y, caches) = model.forward(x)?;
    let r: Vec<f64> = match obj {
        Objective::Projection(s) => {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            (0..y.len()).map(|_| rng.random_range(-1.0..1.0)).collect()
        }
        Objective::CrossEntropy(_) => Vec::new(),
    };
    let gy = match obj {
        Objective::Projection(_) => Tensor { shape: y.shape.clone(), data: r.clone() },
        Objective::CrossEntropy(t) => {
            if y.shape.len() != 1 {
                return Err(LearnError::shape("cross entropy", &[y.len()], &y.shape));
            }
            Tensor::vector(softmax_cross_entropy(&y.data, t).1)
        }
    };
    let mut grads = model.zero_grads();
    let gx = model.backward(&caches, &gy, &mut grads)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GradCheckReport { max_rel_error: 0.0, checked: 0, skipped: 0, worst: String::new() };
    let record = |report: &mut GradCheckReport, what: String, a: f64, f: [f64; 3]| {
        let [up, mid, dn] = f;
        let fwd = (up - mid) / STEP;
        let bwd = (mid - dn) / STEP;
        if (fwd - bwd).abs() > 1e-2 * (fwd.abs() + bwd.abs()) + 1e-7 {
            report.skipped += 1;
            return;
        }
        let num = (up - dn) / (2.0 * STEP);
        let e = rel_error(a, num);
        report.checked += 1;
        if e > report.max_rel_error {
            report.max_rel_error = e;
            report.worst = format!("{what}: analytic {a:e}, numeric {num:e}");
        }
    };
    let base = value(model, x, &obj, &r)?;

    let n_params = model.params().len();
    let mut probe = model.clone();
    for ti in 0..n_params {
        let len = grads[ti].len();
        let coords = sample(&mut rng, len, per_tensor.min(len)).into_vec();
        for k in coords {
            let orig = probe.params()[ti].data[k];
            probe.params_mut()[ti].data[k] = orig + STEP;
            let up = value(&probe, x, &obj, &r)?;
            probe.params_mut()[ti].data[k] = orig - STEP;
            let dn = value(&probe, x, &obj, &r)?;
            probe.params_mut()[ti].data[k] = orig;
            record(&mut report, format!("param {ti}[{k}]"), grads[ti].data[k], [up, base, dn]);
        }
    }
    let coords = sample(&mut rng, x.len(), per_tensor.min(x.len())).into_vec();
    let mut xp = x.clone();
    for k in coords {
        let orig = x.data[k];
        xp.data[k] = orig + STEP;
        let up = value(model, &xp, &obj, &r)?;
        xp.data[k] = orig - STEP;
        let dn = value(model, &xp, &obj, &r)?;
        xp.data[k] = orig;
        record(&mut report, format!("input[{k}]"), gx.data[k], [up, base, dn]);
    }
    Ok(report)
}

/// [`check_model`] on a single layer with a random projection objective.
pub fn check_layer(layer: &Layer, x: &Tensor, per_tensor: usize, seed: u64) -> Result<GradCheckReport, LearnError> {
    check_model(&Sequential::new(vec![layer.clone()]), x, Objective::Projection(seed ^ 0x5eed), per_tensor, seed)
}
