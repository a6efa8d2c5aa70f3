use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{init_uniform, Activation};
use crate::{LearnError, Tensor};

/// Fully connected layer on a 1-D input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    /// `[out, in]`.
    pub weight: Tensor,
    pub bias: Tensor,
    pub activation: Activation,
}

impl Dense {
    pub fn new(input: usize, output: usize, activation: Activation, rng: &mut ChaCha8Rng) -> Self {
        Self {
            weight: init_uniform(&[output, input], input, output, activation, rng),
            bias: Tensor::zeros(&[output]),
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.shape[1]
    }

    pub fn outputs(&self) -> usize {
        self.weight.shape[0]
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor, LearnError> {
        x.expect_shape("dense", &[self.inputs()])?;
        let n = self.inputs();
        let out = (0..self.outputs())
            .map(|o| {
                let row = &self.weight.data[o * n..(o + 1) * n];
                let s = self.bias.data[o] + row.iter().zip(&x.data).map(|(w, v)| w * v).sum::<f64>();
                self.activation.apply(s)
            })
            .collect();
        Ok(Tensor::vector(out))
    }

    /// Accumulates into `gw`, `gb`; returns the input gradient.
    pub fn backward(
        &self,
        x: &Tensor,
        y: &Tensor,
        g: &Tensor,
        gw: &mut Tensor,
        gb: &mut Tensor,
    ) -> Result<Tensor, LearnError> {
        g.expect_shape("dense backward", &[self.outputs()])?;
        let n = self.inputs();
        let mut gx = vec![0.0; n];
        for o in 0..self.outputs() {
            let gp = g.data[o] * self.activation.derivative(y.data[o]);
            if gp == 0.0 {
                continue;
            }
            gb.data[o] += gp;
            let row = &self.weight.data[o * n..(o + 1) * n];
            let grow = &mut gw.data[o * n..(o + 1) * n];
            for i in 0..n {
                grow[i] += gp * x.data[i];
                gx[i] += row[i] * gp;
            }
        }
        Ok(Tensor::vector(gx))
    }
}
