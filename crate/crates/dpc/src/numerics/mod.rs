//! Deterministic dense-network numerics: forward/backward passes,
//! activations, optimizers, and the Laplace sampler the privacy mechanism
//! draws from.
//!
//! All reductions run in a fixed left-to-right order so equal inputs give
//! bit-identical outputs across runs and thread counts.

pub(crate) mod laplace;
mod matrix;
mod optim;

pub use laplace::sample_laplace;
pub use matrix::Matrix;
pub use optim::{AdagradOptimizer, AdamOptimizer, Optimizer, OptimizerKind};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngState;

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Sigmoid,
    Tanh,
    Relu,
    Softmax,
    Identity,
    /// Fixed elementwise map `h -> 2h - 1`; rescales a sigmoid output from
    /// (0,1) into (-1,1). Layers carrying it are frozen during training.
    AffineNorm,
}

impl Activation {
    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        match self {
            Activation::Sigmoid => z.iter().map(|&v| sigmoid(v)).collect(),
            Activation::Tanh => z.iter().map(|&v| v.tanh()).collect(),
            Activation::Relu => z.iter().map(|&v| v.max(0.0)).collect(),
            Activation::Identity => z.to_vec(),
            Activation::AffineNorm => z.iter().map(|&v| 2.0 * v - 1.0).collect(),
            Activation::Softmax => {
                // Max subtraction keeps the exponentials in range.
                let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let exps: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
                let sum: f64 = exps.iter().sum();
                exps.iter().map(|&e| e / sum).collect()
            }
        }
    }

    /// Pulls an output-side gradient back through the activation, using only
    /// the activation output.
    pub fn backprop(&self, output: &[f64], upstream: &[f64]) -> Vec<f64> {
        match self {
            Activation::Sigmoid => output
                .iter()
                .zip(upstream)
                .map(|(&a, &u)| u * a * (1.0 - a))
                .collect(),
            Activation::Tanh => output
                .iter()
                .zip(upstream)
                .map(|(&a, &u)| u * (1.0 - a * a))
                .collect(),
            Activation::Relu => output
                .iter()
                .zip(upstream)
                .map(|(&a, &u)| if a > 0.0 { u } else { 0.0 })
                .collect(),
            Activation::Identity => upstream.to_vec(),
            Activation::AffineNorm => upstream.iter().map(|&u| 2.0 * u).collect(),
            Activation::Softmax => {
                let dot: f64 = upstream
                    .iter()
                    .zip(output)
                    .map(|(&u, &a)| u * a)
                    .sum();
                output
                    .iter()
                    .zip(upstream)
                    .map(|(&a, &u)| a * (u - dot))
                    .collect()
            }
        }
    }
}

/// One dense layer: `a = activation(W x + b)`. Weights are `out_dim x in_dim`
/// row-major; row `p` holds the incoming weights of unit `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub bias: Option<Vec<f64>>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn new(weights: Matrix, bias: Option<Vec<f64>>, activation: Activation) -> Result<Self> {
        if let Some(b) = &bias {
            if b.len() != weights.rows() {
                return Err(Error::structural(format!(
                    "bias length {} does not match out_dim {}",
                    b.len(),
                    weights.rows()
                )));
            }
        }
        if !weights.is_finite() || bias.as_ref().is_some_and(|b| b.iter().any(|v| !v.is_finite())) {
            return Err(Error::numeric("layer parameters must be finite"));
        }
        Ok(DenseLayer {
            weights,
            bias,
            activation,
        })
    }

    /// Identity-weight layer applying the fixed `2h - 1` rescaling.
    pub fn normalization(dim: usize) -> Self {
        DenseLayer {
            weights: Matrix::identity(dim),
            bias: None,
            activation: Activation::AffineNorm,
        }
    }

    /// Randomly initialized layer, entries uniform in `[-1/sqrt(in_dim), 1/sqrt(in_dim)]`.
    pub fn init(
        in_dim: usize,
        out_dim: usize,
        with_bias: bool,
        activation: Activation,
        rng: &mut RngState,
    ) -> Self {
        let limit = 1.0 / (in_dim as f64).sqrt();
        let mut weights = Matrix::zeros(out_dim, in_dim);
        for w in weights.as_mut_slice() {
            *w = rng.uniform(-limit, limit);
        }
        let bias = with_bias.then(|| vec![0.0; out_dim]);
        DenseLayer {
            weights,
            bias,
            activation,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    /// Normalization layers carry no trainable parameters.
    pub fn is_frozen(&self) -> bool {
        self.activation == Activation::AffineNorm
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.out_dim()];
        self.weights.mat_vec(x, &mut z);
        if let Some(b) = &self.bias {
            for (zi, bi) in z.iter_mut().zip(b) {
                *zi += bi;
            }
        }
        self.activation.apply(&z)
    }
}

/// Ordered stack of dense layers. Serves as autoencoder, classifier,
/// surrogate, and attack net depending on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNet {
    pub layers: Vec<DenseLayer>,
    pub input_dim: usize,
}

impl DenseNet {
    pub fn new(layers: Vec<DenseLayer>, input_dim: usize) -> Result<Self> {
        let mut dim = input_dim;
        for (i, layer) in layers.iter().enumerate() {
            if layer.in_dim() != dim {
                return Err(Error::structural(format!(
                    "layer {i} expects in_dim {} but receives {dim}",
                    layer.in_dim()
                )));
            }
            dim = layer.out_dim();
        }
        Ok(DenseNet { layers, input_dim })
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(self.input_dim, |l| l.out_dim())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Activations> {
        if x.len() != self.input_dim {
            return Err(Error::structural(format!(
                "input length {} does not match input_dim {}",
                x.len(),
                self.input_dim
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("non-finite network input"));
        }
        let mut values = Vec::with_capacity(self.layers.len() + 1);
        values.push(x.to_vec());
        for layer in &self.layers {
            let next = layer.forward(values.last().unwrap());
            values.push(next);
        }
        Ok(Activations { values })
    }

    /// Forward pass through a prefix of the layers (used to split an
    /// autoencoder into encoder and decoder halves).
    pub fn forward_range(&self, x: &[f64], range: std::ops::Range<usize>) -> Result<Vec<f64>> {
        let mut current = x.to_vec();
        for layer in &self.layers[range] {
            if layer.in_dim() != current.len() {
                return Err(Error::structural(format!(
                    "layer expects in_dim {} but receives {}",
                    layer.in_dim(),
                    current.len()
                )));
            }
            current = layer.forward(&current);
        }
        Ok(current)
    }
}

/// Every intermediate activation of one forward pass. `values[0]` is the
/// input; the last entry is the network output.
#[derive(Debug, Clone)]
pub struct Activations {
    pub values: Vec<Vec<f64>>,
}

impl Activations {
    pub fn output(&self) -> &[f64] {
        self.values.last().unwrap()
    }
}

/// Per-layer parameter gradients (shapes mirror the owning net) plus the
/// gradient propagated back to the input, which the counterfactual searches
/// ascend in data space.
#[derive(Debug, Clone)]
pub struct GradientSet {
    pub layers: Vec<LayerGradient>,
    pub input: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LayerGradient {
    pub weights: Matrix,
    pub bias: Option<Vec<f64>>,
}

impl GradientSet {
    pub fn zeros_like(net: &DenseNet) -> Self {
        let layers = net
            .layers
            .iter()
            .map(|l| LayerGradient {
                weights: Matrix::zeros(l.out_dim(), l.in_dim()),
                bias: l.bias.as_ref().map(|b| vec![0.0; b.len()]),
            })
            .collect();
        GradientSet {
            layers,
            input: vec![0.0; net.input_dim],
        }
    }

    pub fn add_scaled(&mut self, other: &GradientSet, scale: f64) {
        for (mine, theirs) in self.layers.iter_mut().zip(&other.layers) {
            for (a, b) in mine
                .weights
                .as_mut_slice()
                .iter_mut()
                .zip(theirs.weights.as_slice())
            {
                *a += scale * b;
            }
            if let (Some(ba), Some(bb)) = (&mut mine.bias, &theirs.bias) {
                for (a, b) in ba.iter_mut().zip(bb) {
                    *a += scale * b;
                }
            }
        }
        for (a, b) in self.input.iter_mut().zip(&other.input) {
            *a += scale * b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for layer in &mut self.layers {
            for v in layer.weights.as_mut_slice() {
                *v *= factor;
            }
            if let Some(b) = &mut layer.bias {
                for v in b {
                    *v *= factor;
                }
            }
        }
        for v in &mut self.input {
            *v *= factor;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| {
            l.weights.is_finite() && l.bias.as_ref().is_none_or(|b| b.iter().all(|v| v.is_finite()))
        }) && self.input.iter().all(|v| v.is_finite())
    }

    /// Zeroes the gradients of frozen (normalization) layers so optimizer
    /// steps leave their identity weights untouched.
    pub fn freeze_like(&mut self, net: &DenseNet) {
        for (grad, layer) in self.layers.iter_mut().zip(&net.layers) {
            if layer.is_frozen() {
                grad.weights.as_mut_slice().fill(0.0);
                if let Some(b) = &mut grad.bias {
                    b.fill(0.0);
                }
            }
        }
    }
}

/// Backpropagates `upstream` (the loss gradient at the network output)
/// through activations recorded by [`DenseNet::forward`].
pub fn backward(net: &DenseNet, acts: &Activations, upstream: &[f64]) -> Result<GradientSet> {
    let mut grads = GradientSet::zeros_like(net);
    accumulate_backward(net, acts, upstream, 1.0, &mut grads)?;
    Ok(grads)
}

/// Backward pass that adds `scale` times the sample gradient into an
/// existing [`GradientSet`]. Batch loops reuse one buffer instead of
/// allocating per sample, which matters for the wide attack networks.
pub fn accumulate_backward(
    net: &DenseNet,
    acts: &Activations,
    upstream: &[f64],
    scale: f64,
    grads: &mut GradientSet,
) -> Result<()> {
    if acts.values.len() != net.layers.len() + 1 {
        return Err(Error::structural(
            "activation record does not match layer count",
        ));
    }
    if upstream.len() != net.output_dim() {
        return Err(Error::structural(format!(
            "upstream gradient length {} does not match output_dim {}",
            upstream.len(),
            net.output_dim()
        )));
    }
    if grads.layers.len() != net.layers.len() {
        return Err(Error::structural(
            "gradient buffer does not match layer count",
        ));
    }

    let mut d_out = upstream.to_vec();
    for (idx, layer) in net.layers.iter().enumerate().rev() {
        let input = &acts.values[idx];
        let output = &acts.values[idx + 1];
        let d_z = layer.activation.backprop(output, &d_out);

        let d_w = &mut grads.layers[idx].weights;
        for (o, &dz) in d_z.iter().enumerate() {
            let row = d_w.row_mut(o);
            let sdz = scale * dz;
            for (ri, &xi) in row.iter_mut().zip(input) {
                *ri += sdz * xi;
            }
        }
        if let Some(d_b) = &mut grads.layers[idx].bias {
            for (b, &dz) in d_b.iter_mut().zip(&d_z) {
                *b += scale * dz;
            }
        }

        let mut d_in = vec![0.0; layer.in_dim()];
        for (o, &dz) in d_z.iter().enumerate() {
            let row = layer.weights.row(o);
            for (i, w) in row.iter().enumerate() {
                d_in[i] += w * dz;
            }
        }
        d_out = d_in;
    }
    for (g, d) in grads.input.iter_mut().zip(&d_out) {
        *g += scale * d;
    }
    Ok(())
}
