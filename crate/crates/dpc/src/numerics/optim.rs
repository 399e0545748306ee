//! Adam and Adagrad updates over [`DenseNet`] parameters.

use serde::{Deserialize, Serialize};

use super::{DenseNet, GradientSet};
use crate::error::{Error, Result};

/// Optimizer selection for training entry points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam { lr: f64 },
    Adagrad { lr: f64, decay: f64 },
}

impl OptimizerKind {
    pub fn build(&self, net: &DenseNet) -> Optimizer {
        match *self {
            OptimizerKind::Adam { lr } => Optimizer::Adam(AdamOptimizer::new(net, lr)),
            OptimizerKind::Adagrad { lr, decay } => {
                Optimizer::Adagrad(AdagradOptimizer::new(net, lr, decay))
            }
        }
    }
}

pub enum Optimizer {
    Adam(AdamOptimizer),
    Adagrad(AdagradOptimizer),
}

impl Optimizer {
    pub fn step(&mut self, net: &mut DenseNet, grads: &GradientSet) -> Result<()> {
        match self {
            Optimizer::Adam(o) => o.step(net, grads),
            Optimizer::Adagrad(o) => o.step(net, grads),
        }
    }
}

/// Flat per-parameter state tensors shaped like a net's trainables.
#[derive(Debug, Clone)]
struct StateTensors {
    weights: Vec<Vec<f64>>,
    biases: Vec<Option<Vec<f64>>>,
}

impl StateTensors {
    fn zeros_like(net: &DenseNet) -> Self {
        StateTensors {
            weights: net
                .layers
                .iter()
                .map(|l| vec![0.0; l.weights.as_slice().len()])
                .collect(),
            biases: net
                .layers
                .iter()
                .map(|l| l.bias.as_ref().map(|b| vec![0.0; b.len()]))
                .collect(),
        }
    }
}

fn check_shapes(net: &DenseNet, grads: &GradientSet) -> Result<()> {
    if grads.layers.len() != net.layers.len() {
        return Err(Error::structural(
            "gradient layer count does not match net",
        ));
    }
    if !grads.is_finite() {
        return Err(Error::numeric("non-finite gradient; step rejected"));
    }
    Ok(())
}

pub struct AdamOptimizer {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: StateTensors,
    v: StateTensors,
    step_count: u64,
}

impl AdamOptimizer {
    /// Standard defaults: beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8.
    pub fn new(net: &DenseNet, lr: f64) -> Self {
        AdamOptimizer {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            m: StateTensors::zeros_like(net),
            v: StateTensors::zeros_like(net),
            step_count: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Sum of the second-moment accumulators; strictly increases under a
    /// constant nonzero gradient.
    pub fn second_moment_sum(&self) -> f64 {
        self.v.weights.iter().flatten().sum::<f64>()
            + self
                .v
                .biases
                .iter()
                .flatten()
                .flat_map(|b| b.iter())
                .sum::<f64>()
    }

    pub fn step(&mut self, net: &mut DenseNet, grads: &GradientSet) -> Result<()> {
        check_shapes(net, grads)?;
        self.step_count += 1;
        let t = self.step_count as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);

        for (li, layer) in net.layers.iter_mut().enumerate() {
            adam_update(
                layer.weights.as_mut_slice(),
                grads.layers[li].weights.as_slice(),
                &mut self.m.weights[li],
                &mut self.v.weights[li],
                self.lr,
                self.beta1,
                self.beta2,
                self.epsilon,
                bc1,
                bc2,
            );
            if let (Some(b), Some(gb)) = (&mut layer.bias, &grads.layers[li].bias) {
                let mb = self.m.biases[li].as_mut().unwrap();
                let vb = self.v.biases[li].as_mut().unwrap();
                adam_update(
                    b, gb, mb, vb, self.lr, self.beta1, self.beta2, self.epsilon, bc1, bc2,
                );
            }
        }
        Ok(())
    }
}

#[allow(clippy::too_many_arguments)]
fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    lr: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    bc1: f64,
    bc2: f64,
) {
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + epsilon);
    }
}

pub struct AdagradOptimizer {
    pub lr: f64,
    /// Per-step learning-rate decay: `lr_t = lr / (1 + decay * t)`.
    pub decay: f64,
    pub epsilon: f64,
    accum: StateTensors,
    step_count: u64,
}

impl AdagradOptimizer {
    pub fn new(net: &DenseNet, lr: f64, decay: f64) -> Self {
        AdagradOptimizer {
            lr,
            decay,
            epsilon: 1e-10,
            accum: StateTensors::zeros_like(net),
            step_count: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn step(&mut self, net: &mut DenseNet, grads: &GradientSet) -> Result<()> {
        check_shapes(net, grads)?;
        let lr_t = self.lr / (1.0 + self.decay * self.step_count as f64);
        self.step_count += 1;

        for (li, layer) in net.layers.iter_mut().enumerate() {
            adagrad_update(
                layer.weights.as_mut_slice(),
                grads.layers[li].weights.as_slice(),
                &mut self.accum.weights[li],
                lr_t,
                self.epsilon,
            );
            if let (Some(b), Some(gb)) = (&mut layer.bias, &grads.layers[li].bias) {
                let ab = self.accum.biases[li].as_mut().unwrap();
                adagrad_update(b, gb, ab, lr_t, self.epsilon);
            }
        }
        Ok(())
    }
}

fn adagrad_update(params: &mut [f64], grads: &[f64], accum: &mut [f64], lr: f64, epsilon: f64) {
    for i in 0..params.len() {
        let g = grads[i];
        accum[i] += g * g;
        params[i] -= lr * g / (accum[i].sqrt() + epsilon);
    }
}
