//! Layers with hand-derived backward passes, and a sequential container.
//!
//! Every layer works on a single sample. `backward` accumulates parameter
//! gradients into caller-owned tensors (same order as [`Layer::params`]) and
//! returns the gradient with respect to the input.

mod conv;
mod dense;
mod lstm;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{LearnError, Tensor};

pub use conv::{pooled as pooled_len, Conv3d};
pub use dense::Dense;
pub use lstm::Lstm;

use lstm::LstmCache;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Linear,
    Relu,
    Tanh,
}

impl Activation {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Linear => v,
            Activation::Relu => v.max(0.0),
            Activation::Tanh => v.tanh(),
        }
    }

    /// Derivative expressed through the activation's output.
    pub fn derivative(self, y: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

/// Uniform init: He bound `sqrt(6 / fan_in)` for ReLU, Xavier bound
/// `sqrt(6 / (fan_in + fan_out))` otherwise.
pub(crate) fn init_uniform(
    shape: &[usize],
    fan_in: usize,
    fan_out: usize,
    act: Activation,
    rng: &mut ChaCha8Rng,
) -> Tensor {
    let bound = match act {
        Activation::Relu => (6.0 / fan_in as f64).sqrt(),
        _ => (6.0 / (fan_in + fan_out) as f64).sqrt(),
    };
    let mut t = Tensor::zeros(shape);
    for v in &mut t.data {
        *v = rng.random_range(-bound..bound);
    }
    t
}

/// What a recurrent layer emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeqOutput {
    /// Final state only: `[h]` (bidirectional: forward state after the last
    /// step and backward state after the first, concatenated).
    Last,
    /// Every step: `[T, h]`.
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Layer {
    Dense(Dense),
    Conv3d(Conv3d),
    /// 2x2x2, stride 2, ceil mode.
    MaxPool3d,
    Flatten,
    Lstm {
        cell: Lstm,
        output: SeqOutput,
    },
    Bidirectional {
        forward: Lstm,
        backward: Lstm,
        output: SeqOutput,
    },
    /// Applies the inner stack to every slice along the first axis with
    /// shared parameters.
    TimeDistributed(Sequential),
    Softmax,
}

/// Forward-pass state kept for [`Layer::backward`].
pub struct Cache(Inner);

impl std::fmt::Debug for Cache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("Cache { .. }")
    }
}

enum Inner {
    Io { input: Tensor, output: Tensor },
    Pool { in_shape: Vec<usize>, arg: Vec<usize> },
    Flatten { in_shape: Vec<usize> },
    Lstm(LstmCache),
    Bi(LstmCache, LstmCache),
    Steps(Vec<Vec<Cache>>),
    Softmax { output: Tensor },
}

fn seq_shape(op: &'static str, input: &[usize], features: usize) -> Result<(usize, usize), LearnError> {
    if input.len() != 2 || input[1] != features || input[0] == 0 {
        return Err(LearnError::shape(op, &[input.first().copied().unwrap_or(0).max(1), features], input));
    }
    Ok((input[0], input[1]))
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

impl Layer {
    pub fn dense(input: usize, output: usize, activation: Activation, rng: &mut ChaCha8Rng) -> Self {
        Layer::Dense(Dense::new(input, output, activation, rng))
    }

    pub fn conv3d(in_ch: usize, out_ch: usize, activation: Activation, rng: &mut ChaCha8Rng) -> Self {
        Layer::Conv3d(Conv3d::new(in_ch, out_ch, activation, rng))
    }

    pub fn lstm(input: usize, hidden: usize, output: SeqOutput, rng: &mut ChaCha8Rng) -> Self {
        Layer::Lstm { cell: Lstm::new(input, hidden, rng), output }
    }

    pub fn bidirectional(input: usize, hidden: usize, output: SeqOutput, rng: &mut ChaCha8Rng) -> Self {
        let forward = Lstm::new(input, hidden, rng);
        let backward = Lstm::new(input, hidden, rng);
        Layer::Bidirectional { forward, backward, output }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Layer::Dense(_) => "dense",
            Layer::Conv3d(_) => "conv3d",
            Layer::MaxPool3d => "maxpool3d",
            Layer::Flatten => "flatten",
            Layer::Lstm { .. } => "lstm",
            Layer::Bidirectional { .. } => "bidirectional",
            Layer::TimeDistributed(_) => "time_distributed",
            Layer::Softmax => "softmax",
        }
    }

    pub fn params(&self) -> Vec<&Tensor> {
        match self {
            Layer::Dense(d) => vec![&d.weight, &d.bias],
            Layer::Conv3d(c) => vec![&c.weight, &c.bias],
            Layer::Lstm { cell, .. } => vec![&cell.w, &cell.u, &cell.b],
            Layer::Bidirectional { forward: f, backward: b, .. } => vec![&f.w, &f.u, &f.b, &b.w, &b.u, &b.b],
            Layer::TimeDistributed(inner) => inner.params(),
            Layer::MaxPool3d | Layer::Flatten | Layer::Softmax => Vec::new(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            Layer::Dense(d) => vec![&mut d.weight, &mut d.bias],
            Layer::Conv3d(c) => vec![&mut c.weight, &mut c.bias],
            Layer::Lstm { cell, .. } => vec![&mut cell.w, &mut cell.u, &mut cell.b],
            Layer::Bidirectional { forward: f, backward: b, .. } => {
                vec![&mut f.w, &mut f.u, &mut f.b, &mut b.w, &mut b.u, &mut b.b]
            }
            Layer::TimeDistributed(inner) => inner.params_mut(),
            Layer::MaxPool3d | Layer::Flatten | Layer::Softmax => Vec::new(),
        }
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, LearnError> {
        match self {
            Layer::Dense(d) => {
                if input != [d.inputs()] {
                    return Err(LearnError::shape("dense", &[d.inputs()], input));
                }
                Ok(vec![d.outputs()])
            }
            Layer::Conv3d(c) => c.output_shape(input),
            Layer::MaxPool3d => conv::pool_output_shape(input),
            Layer::Flatten => Ok(vec![input.iter().product()]),
            Layer::Lstm { cell, output } => {
                let (t, _) = seq_shape("lstm", input, cell.inputs())?;
                Ok(match output {
                    SeqOutput::Last => vec![cell.hidden()],
                    SeqOutput::All => vec![t, cell.hidden()],
                })
            }
            Layer::Bidirectional { forward, backward, output } => {
                let (t, _) = seq_shape("bidirectional", input, forward.inputs())?;
                let h = forward.hidden() + backward.hidden();
                Ok(match output {
                    SeqOutput::Last => vec![h],
                    SeqOutput::All => vec![t, h],
                })
            }
            Layer::TimeDistributed(inner) => {
                if input.len() < 2 {
                    return Err(LearnError::shape("time_distributed", &[1, 1], input));
                }
                let mut out = vec![input[0]];
                out.extend(inner.output_shape(&input[1..])?);
                Ok(out)
            }
            Layer::Softmax => {
                if input.len() != 1 {
                    return Err(LearnError::shape("softmax", &[input.iter().product()], input));
                }
                Ok(input.to_vec())
            }
        }
    }

    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, Cache), LearnError> {
        match self {
            Layer::Dense(d) => {
                let y = d.forward(x)?;
                Ok((y.clone(), Cache(Inner::Io { input: x.clone(), output: y })))
            }
            Layer::Conv3d(c) => {
                let y = c.forward(x)?;
                Ok((y.clone(), Cache(Inner::Io { input: x.clone(), output: y })))
            }
            Layer::MaxPool3d => {
                let (y, arg) = conv::pool_forward(x)?;
                Ok((y, Cache(Inner::Pool { in_shape: x.shape.clone(), arg })))
            }
            Layer::Flatten => {
                let y = Tensor::vector(x.data.clone());
                Ok((y, Cache(Inner::Flatten { in_shape: x.shape.clone() })))
            }
            Layer::Lstm { cell, output } => {
                let (_, n) = seq_shape("lstm", &x.shape, cell.inputs())?;
                let cache = cell.run(x.data.chunks(n));
                let y = match output {
                    SeqOutput::Last => Tensor::vector(cache.hs.last().expect("non-empty sequence").clone()),
                    SeqOutput::All => {
                        Tensor::new(vec![cache.hs.len(), cell.hidden()], cache.hs.concat()).expect("consistent shape")
                    }
                };
                Ok((y, Cache(Inner::Lstm(cache))))
            }
            Layer::Bidirectional { forward, backward, output } => {
                let (t, n) = seq_shape("bidirectional", &x.shape, forward.inputs())?;
                let fc = forward.run(x.data.chunks(n));
                let bc = backward.run(x.data.chunks(n).rev());
                let y = match output {
                    SeqOutput::Last => Tensor::vector([fc.hs[t - 1].as_slice(), bc.hs[t - 1].as_slice()].concat()),
                    SeqOutput::All => {
                        let rows: Vec<f64> =
                            (0..t).flat_map(|s| fc.hs[s].iter().chain(&bc.hs[t - 1 - s]).copied()).collect();
                        Tensor::new(vec![t, forward.hidden() + backward.hidden()], rows).expect("consistent shape")
                    }
                };
                Ok((y, Cache(Inner::Bi(fc, bc))))
            }
            Layer::TimeDistributed(inner) => {
                if x.shape.len() < 2 {
                    return Err(LearnError::shape("time_distributed", &[1, 1], &x.shape));
                }
                let step_shape = &x.shape[1..];
                let step_len: usize = step_shape.iter().product();
                let mut outs = Vec::with_capacity(x.shape[0]);
                let mut caches = Vec::with_capacity(x.shape[0]);
                for chunk in x.data.chunks(step_len.max(1)).take(x.shape[0]) {
                    let (y, c) = inner.forward(&Tensor { shape: step_shape.to_vec(), data: chunk.to_vec() })?;
                    outs.push(y);
                    caches.push(c);
                }
                let mut shape = vec![x.shape[0]];
                shape.extend(&outs.first().map(|o| o.shape.clone()).unwrap_or_default());
                let data = outs.into_iter().flat_map(|o| o.data).collect();
                Ok((Tensor { shape, data }, Cache(Inner::Steps(caches))))
            }
            Layer::Softmax => {
                self.output_shape(&x.shape)?;
                let y = Tensor::vector(softmax(&x.data));
                Ok((y.clone(), Cache(Inner::Softmax { output: y })))
            }
        }
    }

    pub fn backward(&self, cache: &Cache, g: &Tensor, grads: &mut [Tensor]) -> Result<Tensor, LearnError> {
        let mismatch = || LearnError::Param(format!("cache does not belong to a {} layer", self.name()));
        match (self, &cache.0) {
            (Layer::Dense(d), Inner::Io { input, output }) => {
                let [gw, gb] = grads else { return Err(mismatch()) };
                d.backward(input, output, g, gw, gb)
            }
            (Layer::Conv3d(c), Inner::Io { input, output }) => {
                let [gw, gb] = grads else { return Err(mismatch()) };
                c.backward(input, output, g, gw, gb)
            }
            (Layer::MaxPool3d, Inner::Pool { in_shape, arg }) => conv::pool_backward(in_shape, arg, g),
            (Layer::Flatten, Inner::Flatten { in_shape }) => g.clone().reshape(in_shape),
            (Layer::Lstm { cell, output }, Inner::Lstm(c)) => {
                let [gw, gu, gb] = grads else { return Err(mismatch()) };
                let t = c.hs.len();
                let h = cell.hidden();
                let dh = match output {
                    SeqOutput::Last => {
                        g.expect_shape("lstm backward", &[h])?;
                        let mut dh = vec![vec![0.0; h]; t];
                        dh[t - 1] = g.data.clone();
                        dh
                    }
                    SeqOutput::All => {
                        g.expect_shape("lstm backward", &[t, h])?;
                        g.data.chunks(h).map(<[f64]>::to_vec).collect()
                    }
                };
                let dx = cell.back(c, &dh, gw, gu, gb);
                Ok(Tensor::new(vec![t, cell.inputs()], dx.concat()).expect("consistent shape"))
            }
            (Layer::Bidirectional { forward, backward, output }, Inner::Bi(fc, bc)) => {
                let [fw, fu, fb, bw, bu, bb] = grads else { return Err(mismatch()) };
                let t = fc.hs.len();
                let (hf, hb) = (forward.hidden(), backward.hidden());
                let mut dhf = vec![vec![0.0; hf]; t];
                let mut dhb = vec![vec![0.0; hb]; t];
                match output {
                    SeqOutput::Last => {
                        g.expect_shape("bidirectional backward", &[hf + hb])?;
                        dhf[t - 1] = g.data[..hf].to_vec();
                        dhb[t - 1] = g.data[hf..].to_vec();
                    }
                    SeqOutput::All => {
                        g.expect_shape("bidirectional backward", &[t, hf + hb])?;
                        for (s, row) in g.data.chunks(hf + hb).enumerate() {
                            dhf[s] = row[..hf].to_vec();
                            dhb[t - 1 - s] = row[hf..].to_vec();
                        }
                    }
                }
                let dxf = forward.back(fc, &dhf, fw, fu, fb);
                let dxb = backward.back(bc, &dhb, bw, bu, bb);
                let n = forward.inputs();
                let mut dx = vec![0.0; t * n];
                for s in 0..t {
                    for k in 0..n {
                        dx[s * n + k] = dxf[s][k] + dxb[t - 1 - s][k];
                    }
                }
                Ok(Tensor::new(vec![t, n], dx).expect("consistent shape"))
            }
            (Layer::TimeDistributed(inner), Inner::Steps(caches)) => {
                let steps = caches.len();
                if g.shape.first() != Some(&steps) {
                    return Err(LearnError::shape("time_distributed backward", &[steps], &g.shape));
                }
                let step_out = g.len() / steps.max(1);
                let mut dx: Vec<f64> = Vec::new();
                let mut step_shape = Vec::new();
                for (s, c) in caches.iter().enumerate() {
                    let gs = Tensor {
                        shape: g.shape[1..].to_vec(),
                        data: g.data[s * step_out..(s + 1) * step_out].to_vec(),
                    };
                    let d = inner.backward(c, &gs, grads)?;
                    step_shape = d.shape;
                    dx.extend(d.data);
                }
                let mut shape = vec![steps];
                shape.extend(step_shape);
                Ok(Tensor { shape, data: dx })
            }
            (Layer::Softmax, Inner::Softmax { output }) => {
                g.expect_shape("softmax backward", &output.shape)?;
                let dot: f64 = g.data.iter().zip(&output.data).map(|(a, b)| a * b).sum();
                Ok(Tensor::vector(output.data.iter().zip(&g.data).map(|(y, gi)| y * (gi - dot)).collect()))
            }
            _ => Err(mismatch()),
        }
    }
}

/// Layers applied in order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Sequential {
    pub layers: Vec<Layer>,
}

impl Sequential {
    pub fn new(layers: Vec<Layer>) -> Self {
        Self { layers }
    }

    /// Checks that the layer shapes compose for `input`; returns the output
    /// shape.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, LearnError> {
        let mut shape = input.to_vec();
        for l in &self.layers {
            shape = l.output_shape(&shape)?;
        }
        Ok(shape)
    }

    pub fn params(&self) -> Vec<&Tensor> {
        self.layers.iter().flat_map(Layer::params).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers.iter_mut().flat_map(Layer::params_mut).collect()
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|t| t.len()).sum()
    }

    /// Zeroed gradient buffers matching [`Sequential::params`].
    pub fn zero_grads(&self) -> Vec<Tensor> {
        self.params().into_iter().map(Tensor::zeros_like).collect()
    }

    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, Vec<Cache>), LearnError> {
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut cur = x.clone();
        for l in &self.layers {
            let (y, c) = l.forward(&cur)?;
            caches.push(c);
            cur = y;
        }
        Ok((cur, caches))
    }

    pub fn infer(&self, x: &Tensor) -> Result<Tensor, LearnError> {
        Ok(self.forward(x)?.0)
    }

    pub fn backward(&self, caches: &[Cache], g: &Tensor, grads: &mut [Tensor]) -> Result<Tensor, LearnError> {
        let counts: Vec<usize> = self.layers.iter().map(|l| l.params().len()).collect();
        if caches.len() != self.layers.len() || grads.len() != counts.iter().sum::<usize>() {
            return Err(LearnError::Param("caches or gradient buffers do not match the model".into()));
        }
        let mut end = grads.len();
        let mut cur = g.clone();
        for (i, l) in self.layers.iter().enumerate().rev() {
            let start = end - counts[i];
            cur = l.backward(&caches[i], &cur, &mut grads[start..end])?;
            end = start;
        }
        Ok(cur)
    }
}
