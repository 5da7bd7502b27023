use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Layer widths from input to output; hidden layers use tanh, the output
/// layer is linear and feeds a softmax cross-entropy loss.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpShape {
    pub layers: Vec<usize>,
}

impl Default for MlpShape {
    fn default() -> Self {
        Self::toy(16)
    }
}

impl MlpShape {
    pub fn new(layers: Vec<usize>) -> Result<Self> {
        if layers.len() < 2 || layers.contains(&0) {
            return Err(Error::InvalidConfig(format!("bad layer widths {layers:?}")));
        }
        Ok(Self { layers })
    }

    /// `2 → hidden → hidden → 2`
    pub fn toy(hidden: usize) -> Self {
        Self {
            layers: vec![2, hidden, hidden, 2],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0]
    }

    pub fn classes(&self) -> usize {
        *self.layers.last().unwrap()
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn param_count(&self) -> usize {
        self.layers.windows(2).map(|p| p[1] * p[0] + p[1]).sum()
    }

    /// Offset of layer `l`'s weight matrix (`out × in`, row-major), followed
    /// directly by its bias.
    fn offset(&self, l: usize) -> usize {
        self.layers[..=l].windows(2).map(|p| p[1] * p[0] + p[1]).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub shape: MlpShape,
    pub data: Vec<f64>,
}

impl MlpParams {
    pub fn zeros(shape: MlpShape) -> Self {
        let data = vec![0.0; shape.param_count()];
        Self { shape, data }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(shape: MlpShape, seed: u64) -> Self {
        let mut rng = SeededRng::new(seed);
        let mut data = Vec::with_capacity(shape.param_count());
        for p in shape.layers.windows(2) {
            let (fan_in, fan_out) = (p[0], p[1]);
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            data.extend((0..fan_in * fan_out).map(|_| rng.uniform(-a, a)));
            data.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Self { shape, data }
    }

    pub fn from_flat(shape: MlpShape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.param_count() {
            return Err(Error::DimensionMismatch {
                what: "parameter vector",
                expected: shape.param_count(),
                found: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    fn layer(&self, l: usize) -> (&[f64], &[f64]) {
        let (i, o) = (self.shape.layers[l], self.shape.layers[l + 1]);
        let off = self.shape.offset(l);
        (&self.data[off..off + i * o], &self.data[off + i * o..off + i * o + o])
    }
}

/// Activations of every layer for one input (`acts[0]` is the input, the
/// last entry holds the logits).
fn forward(params: &MlpParams, x: &[f64]) -> Result<Vec<Vec<f64>>> {
    let last = params.shape.n_layers() - 1;
    let mut acts = vec![x.to_vec()];
    for l in 0..=last {
        let (w, b) = params.layer(l);
        let input = &acts[l];
        let out: Vec<f64> = b
            .iter()
            .enumerate()
            .map(|(r, bias)| {
                let row = &w[r * input.len()..(r + 1) * input.len()];
                let z = bias + row.iter().zip(input).map(|(a, v)| a * v).sum::<f64>();
                if l == last {
                    z
                } else {
                    z.tanh()
                }
            })
            .collect();
        if !out.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteLayer { layer: l });
        }
        acts.push(out);
    }
    Ok(acts)
}

pub fn predict(params: &MlpParams, x: &[f64]) -> Result<usize> {
    let acts = forward(params, x)?;
    let logits = acts.last().unwrap();
    let mut best = 0;
    for (j, v) in logits.iter().enumerate() {
        if *v > logits[best] {
            best = j;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossGrads {
    /// Mean cross-entropy over the batch.
    pub loss: f64,
    pub grad_params: Vec<f64>,
    /// Gradient of the mean loss with respect to each input, flattened.
    pub grad_input: Vec<f64>,
}

/// Mean softmax cross-entropy of a batch (`x` flattened row by row) and its
/// exact gradients with respect to the parameters and the inputs.
pub fn loss_and_grads(params: &MlpParams, x: &[f64], y: &[usize]) -> Result<LossGrads> {
    let d = params.shape.input_dim();
    let classes = params.shape.classes();
    if x.len() != y.len() * d {
        return Err(Error::DimensionMismatch {
            what: "batch inputs",
            expected: y.len() * d,
            found: x.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::InsufficientData { needed: 1, found: 0 });
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= classes) {
        return Err(Error::InvalidConfig(format!("label {bad} out of range for {classes} classes")));
    }
    let scale = 1.0 / y.len() as f64;
    let n_layers = params.shape.n_layers();
    let mut loss = 0.0;
    let mut grad_params = vec![0.0; params.data.len()];
    let mut grad_input = vec![0.0; x.len()];

    for (e, &label) in y.iter().enumerate() {
        let acts = forward(params, &x[e * d..(e + 1) * d])?;
        let logits = &acts[n_layers];
        let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + logits.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        loss += scale * (lse - logits[label]);

        // dL/dz for the output layer: softmax − onehot
        let mut delta: Vec<f64> = logits
            .iter()
            .enumerate()
            .map(|(j, v)| scale * ((v - lse).exp() - if j == label { 1.0 } else { 0.0 }))
            .collect();
        for l in (0..n_layers).rev() {
            let input = &acts[l];
            let (w, _) = params.layer(l);
            let off = params.shape.offset(l);
            let (i_dim, o_dim) = (input.len(), delta.len());
            for r in 0..o_dim {
                for c in 0..i_dim {
                    grad_params[off + r * i_dim + c] += delta[r] * input[c];
                }
                grad_params[off + o_dim * i_dim + r] += delta[r];
            }
            let mut back = vec![0.0; i_dim];
            for r in 0..o_dim {
                for c in 0..i_dim {
                    back[c] += w[r * i_dim + c] * delta[r];
                }
            }
            if l > 0 {
                // input to this layer is tanh output a; da/dz = 1 − a²
                for (b, a) in back.iter_mut().zip(input) {
                    *b *= 1.0 - a * a;
                }
            }
            if !back.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFiniteLayer { layer: l });
            }
            delta = back;
        }
        grad_input[e * d..(e + 1) * d].copy_from_slice(&delta);
    }
    Ok(LossGrads {
        loss,
        grad_params,
        grad_input,
    })
}
