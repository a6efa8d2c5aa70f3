//! 3x3x3 convolution (stride 1, zero padding 1) and 2x2x2 max pooling on
//! `[channels, depth, height, width]` tensors.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{init_uniform, Activation};
use crate::{LearnError, Tensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conv3d {
    /// `[out_ch, in_ch, 3, 3, 3]`.
    pub weight: Tensor,
    pub bias: Tensor,
    pub activation: Activation,
}

/// Output positions `x` for which `x + k - 1` is inside `[0, len)`.
fn valid(len: usize, k: usize) -> std::ops::Range<usize> {
    match k {
        0 => 1.min(len)..len,
        1 => 0..len,
        _ => 0..len.saturating_sub(1),
    }
}

impl Conv3d {
    pub fn new(in_ch: usize, out_ch: usize, activation: Activation, rng: &mut ChaCha8Rng) -> Self {
        Self {
            weight: init_uniform(&[out_ch, in_ch, 3, 3, 3], in_ch * 27, out_ch * 27, activation, rng),
            bias: Tensor::zeros(&[out_ch]),
            activation,
        }
    }

    pub fn in_channels(&self) -> usize {
        self.weight.shape[1]
    }

    pub fn out_channels(&self) -> usize {
        self.weight.shape[0]
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, LearnError> {
        if input.len() != 4 || input[0] != self.in_channels() {
            return Err(LearnError::shape("conv3d", &[self.in_channels(), 0, 0, 0], input));
        }
        Ok(vec![self.out_channels(), input[1], input[2], input[3]])
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor, LearnError> {
        let shape = self.output_shape(&x.shape)?;
        let (ci, co) = (self.in_channels(), self.out_channels());
        let (d, h, w) = (shape[1], shape[2], shape[3]);
        let vol = d * h * w;
        let mut out = Tensor::zeros(&shape);
        for o in 0..co {
            let dst = &mut out.data[o * vol..(o + 1) * vol];
            dst.fill(self.bias.data[o]);
            for c in 0..ci {
                let src = &x.data[c * vol..(c + 1) * vol];
                for kd in 0..3 {
                    for kh in 0..3 {
                        for kw in 0..3 {
                            let wv = self.weight.data[(((o * ci + c) * 3 + kd) * 3 + kh) * 3 + kw];
                            let xs = valid(w, kw);
                            for z in valid(d, kd) {
                                let zi = z + kd - 1;
                                for y in valid(h, kh) {
                                    let yi = y + kh - 1;
                                    let orow = &mut dst[(z * h + y) * w..][..w];
                                    let irow = &src[(zi * h + yi) * w..][..w];
                                    for xo in xs.clone() {
                                        orow[xo] += wv * irow[xo + kw - 1];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        for v in &mut out.data {
            *v = self.activation.apply(*v);
        }
        Ok(out)
    }

    pub fn backward(
        &self,
        x: &Tensor,
        y: &Tensor,
        g: &Tensor,
        gw: &mut Tensor,
        gb: &mut Tensor,
    ) -> Result<Tensor, LearnError> {
        g.expect_shape("conv3d backward", &y.shape)?;
        let (ci, co) = (self.in_channels(), self.out_channels());
        let (d, h, w) = (y.shape[1], y.shape[2], y.shape[3]);
        let vol = d * h * w;
        let gp: Vec<f64> = g.data.iter().zip(&y.data).map(|(g, y)| g * self.activation.derivative(*y)).collect();
        let mut gx = x.zeros_like();
        for o in 0..co {
            let go = &gp[o * vol..(o + 1) * vol];
            gb.data[o] += go.iter().sum::<f64>();
            for c in 0..ci {
                let src = &x.data[c * vol..(c + 1) * vol];
                let gsrc = &mut gx.data[c * vol..(c + 1) * vol];
                for kd in 0..3 {
                    for kh in 0..3 {
                        for kw in 0..3 {
                            let wi = (((o * ci + c) * 3 + kd) * 3 + kh) * 3 + kw;
                            let wv = self.weight.data[wi];
                            let xs = valid(w, kw);
                            let mut acc = 0.0;
                            for z in valid(d, kd) {
                                let zi = z + kd - 1;
                                for yy in valid(h, kh) {
                                    let yi = yy + kh - 1;
                                    let grow = &go[(z * h + yy) * w..][..w];
                                    let irow = &src[(zi * h + yi) * w..][..w];
                                    let girow = &mut gsrc[(zi * h + yi) * w..][..w];
                                    for xo in xs.clone() {
                                        acc += grow[xo] * irow[xo + kw - 1];
                                        girow[xo + kw - 1] += wv * grow[xo];
                                    }
                                }
                            }
                            gw.data[wi] += acc;
                        }
                    }
                }
            }
        }
        Ok(gx)
    }
}

/// Pooled size of one axis. Ceil mode, so odd and unit sizes keep a cell.
pub fn pooled(len: usize) -> usize {
    len.div_ceil(2)
}

pub(crate) fn pool_output_shape(input: &[usize]) -> Result<Vec<usize>, LearnError> {
    if input.len() != 4 {
        return Err(LearnError::shape("maxpool3d", &[0, 0, 0, 0], input));
    }
    Ok(vec![input[0], pooled(input[1]), pooled(input[2]), pooled(input[3])])
}

/// Returns the pooled tensor and, per output cell, the flat input index of
/// the winner (first in scan order on ties).
pub(crate) fn pool_forward(x: &Tensor) -> Result<(Tensor, Vec<usize>), LearnError> {
    let shape = pool_output_shape(&x.shape)?;
    let (d, h, w) = (x.shape[1], x.shape[2], x.shape[3]);
    let mut out = Tensor::zeros(&shape);
    let mut arg = Vec::with_capacity(out.len());
    let mut k = 0;
    for c in 0..shape[0] {
        for z in 0..shape[1] {
            for yy in 0..shape[2] {
                for xx in 0..shape[3] {
                    let mut best = usize::MAX;
                    for iz in 2 * z..(2 * z + 2).min(d) {
                        for iy in 2 * yy..(2 * yy + 2).min(h) {
                            for ix in 2 * xx..(2 * xx + 2).min(w) {
                                let i = ((c * d + iz) * h + iy) * w + ix;
                                if best == usize::MAX || x.data[i] > x.data[best] {
                                    best = i;
                                }
                            }
                        }
                    }
                    out.data[k] = x.data[best];
                    arg.push(best);
                    k += 1;
                }
            }
        }
    }
    Ok((out, arg))
}

pub(crate) fn pool_backward(in_shape: &[usize], arg: &[usize], g: &Tensor) -> Result<Tensor, LearnError> {
    if g.len() != arg.len() {
        return Err(LearnError::shape("maxpool3d backward", &[arg.len()], &g.shape));
    }
    let mut gx = Tensor::zeros(in_shape);
    for (k, &i) in arg.iter().enumerate() {
        gx.data[i] += g.data[k];
    }
    Ok(gx)
}
