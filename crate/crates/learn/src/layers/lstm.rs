//! Four-gate LSTM over a `[T, in]` sequence. Gate rows are ordered input,
//! forget, cell, output.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{init_uniform, Activation};
use crate::Tensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lstm {
    /// `[4h, in]`.
    pub w: Tensor,
    /// `[4h, h]`.
    pub u: Tensor,
    /// `[4h]`.
    pub b: Tensor,
}

pub(crate) struct LstmCache {
    /// Inputs in processing order.
    pub xs: Vec<Vec<f64>>,
    /// Activated gates per step, `4h` each.
    pub gates: Vec<Vec<f64>>,
    pub cs: Vec<Vec<f64>>,
    pub hs: Vec<Vec<f64>>,
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

impl Lstm {
    /// Forget-gate bias starts at 1.
    pub fn new(input: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        let w = init_uniform(&[4 * hidden, input], input, hidden, Activation::Tanh, rng);
        let u = init_uniform(&[4 * hidden, hidden], hidden, hidden, Activation::Tanh, rng);
        let mut b = Tensor::zeros(&[4 * hidden]);
        b.data[hidden..2 * hidden].fill(1.0);
        Self { w, u, b }
    }

    pub fn hidden(&self) -> usize {
        self.u.shape[1]
    }

    pub fn inputs(&self) -> usize {
        self.w.shape[1]
    }

    pub(crate) fn run<'a>(&self, xs: impl Iterator<Item = &'a [f64]>) -> LstmCache {
        let (h, n) = (self.hidden(), self.inputs());
        let mut cache = LstmCache { xs: Vec::new(), gates: Vec::new(), cs: Vec::new(), hs: Vec::new() };
        let mut h_prev = vec![0.0; h];
        let mut c_prev = vec![0.0; h];
        for x in xs {
            let mut z = self.b.data.clone();
            for (r, zr) in z.iter_mut().enumerate() {
                let wr = &self.w.data[r * n..(r + 1) * n];
                let ur = &self.u.data[r * h..(r + 1) * h];
                *zr += wr.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
                    + ur.iter().zip(&h_prev).map(|(a, b)| a * b).sum::<f64>();
            }
            for (k, v) in z.iter_mut().enumerate() {
                *v = if (2 * h..3 * h).contains(&k) { v.tanh() } else { sigmoid(*v) };
            }
            let c: Vec<f64> = (0..h).map(|j| z[h + j] * c_prev[j] + z[j] * z[2 * h + j]).collect();
            let hn: Vec<f64> = (0..h).map(|j| z[3 * h + j] * c[j].tanh()).collect();
            cache.xs.push(x.to_vec());
            cache.gates.push(z);
            cache.cs.push(c.clone());
            cache.hs.push(hn.clone());
            h_prev = hn;
            c_prev = c;
        }
        cache
    }

    /// Backpropagation through time. `dh[t]` is the upstream gradient on
    /// `h_t` in processing order; returns input gradients in the same order.
    pub(crate) fn back(
        &self,
        cache: &LstmCache,
        dh: &[Vec<f64>],
        gw: &mut Tensor,
        gu: &mut Tensor,
        gb: &mut Tensor,
    ) -> Vec<Vec<f64>> {
        let (h, n) = (self.hidden(), self.inputs());
        let steps = cache.xs.len();
        let mut dxs = vec![vec![0.0; n]; steps];
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        let zero = vec![0.0; h];
        let mut dz = vec![0.0; 4 * h];
        for t in (0..steps).rev() {
            let gt = &cache.gates[t];
            let c_prev = if t > 0 { &cache.cs[t - 1] } else { &zero };
            let h_prev = if t > 0 { &cache.hs[t - 1] } else { &zero };
            for j in 0..h {
                let (i, f, g, o) = (gt[j], gt[h + j], gt[2 * h + j], gt[3 * h + j]);
                let tc = cache.cs[t][j].tanh();
                let dhj = dh[t][j] + dh_next[j];
                let dc = dc_next[j] + dhj * o * (1.0 - tc * tc);
                dz[j] = dc * g * i * (1.0 - i);
                dz[h + j] = dc * c_prev[j] * f * (1.0 - f);
                dz[2 * h + j] = dc * i * (1.0 - g * g);
                dz[3 * h + j] = dhj * tc * o * (1.0 - o);
                dc_next[j] = dc * f;
            }
            dh_next.fill(0.0);
            let x = &cache.xs[t];
            let dx = &mut dxs[t];
            for (r, &d) in dz.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                gb.data[r] += d;
                let wr = &self.w.data[r * n..(r + 1) * n];
                let gwr = &mut gw.data[r * n..(r + 1) * n];
                for k in 0..n {
                    gwr[k] += d * x[k];
                    dx[k] += wr[k] * d;
                }
                let ur = &self.u.data[r * h..(r + 1) * h];
                let gur = &mut gu.data[r * h..(r + 1) * h];
                for k in 0..h {
                    gur[k] += d * h_prev[k];
                    dh_next[k] += ur[k] * d;
                }
            }
        }
        dxs
    }
}
