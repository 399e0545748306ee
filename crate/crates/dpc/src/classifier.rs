//! Softmax classifiers: the target model, surrogates, and shadow models all
//! come from here.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{
    accumulate_backward, Activation, DenseLayer, DenseNet, GradientSet, Optimizer, OptimizerKind,
};
use crate::rng::RngState;

/// Hidden layout for a classifier; biases present, softmax output over
/// `class_count` logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub class_count: usize,
}

impl ClassifierSpec {
    pub fn new(hidden: Vec<usize>, activation: Activation, class_count: usize) -> Result<Self> {
        if !matches!(activation, Activation::Tanh | Activation::Relu) {
            return Err(Error::parameter(
                "classifier hidden activation must be tanh or relu",
            ));
        }
        if class_count < 2 {
            return Err(Error::parameter("need at least two classes"));
        }
        if hidden.contains(&0) {
            return Err(Error::parameter("hidden widths must be positive"));
        }
        Ok(ClassifierSpec {
            hidden,
            activation,
            class_count,
        })
    }

    pub fn build(&self, input_dim: usize, rng: &mut RngState) -> Result<DenseNet> {
        let mut layers = Vec::with_capacity(self.hidden.len() + 1);
        let mut prev = input_dim;
        for &w in &self.hidden {
            layers.push(DenseLayer::init(prev, w, true, self.activation, rng));
            prev = w;
        }
        layers.push(DenseLayer::init(
            prev,
            self.class_count,
            true,
            Activation::Softmax,
            rng,
        ));
        DenseNet::new(layers, input_dim)
    }
}

/// The unknown-architecture surrogate rule: one extra hidden layer, as wide
/// as the last existing one.
pub fn widen_spec(spec: &ClassifierSpec) -> ClassifierSpec {
    let mut hidden = spec.hidden.clone();
    let width = hidden.last().copied().unwrap_or(spec.class_count.max(4));
    hidden.push(width);
    ClassifierSpec {
        hidden,
        activation: spec.activation,
        class_count: spec.class_count,
    }
}

/// Cross-entropy toward `target` over a probability vector, and the gradient
/// with respect to the probabilities (to be pulled back through softmax).
pub fn cross_entropy(probs: &[f64], target: usize) -> (f64, Vec<f64>) {
    let p = probs[target].max(1e-300);
    let loss = -p.ln();
    let mut upstream = vec![0.0; probs.len()];
    upstream[target] = -1.0 / p;
    (loss, upstream)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierReport {
    pub train_accuracy: f64,
    pub final_loss: f64,
}

/// Minimizes softmax cross-entropy over the dataset.
pub fn train_classifier(
    spec: &ClassifierSpec,
    train_data: &Dataset,
    epochs: usize,
    batch_size: usize,
    optimizer: OptimizerKind,
    rng: &RngState,
) -> Result<(DenseNet, ClassifierReport)> {
    if train_data.is_empty() {
        return Err(Error::parameter("empty training set"));
    }
    if train_data.class_count() > spec.class_count {
        return Err(Error::parameter(format!(
            "dataset has {} classes, spec covers {}",
            train_data.class_count(),
            spec.class_count
        )));
    }
    let mut net = spec.build(train_data.dim(), &mut rng.substream("init"))?;
    let mut opt = optimizer.build(&net);
    let batch_rng = rng.substream("batch");
    let mut order: Vec<usize> = (0..train_data.len()).collect();
    let mut last_loss = 0.0;

    for epoch in 0..epochs {
        batch_rng.fork(epoch as u64).shuffle(&mut order);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(batch_size.max(1)) {
            let (loss, grads) = batch_cross_entropy(&net, train_data, batch)?;
            step_with_context(&mut opt, &mut net, &grads, epoch)?;
            epoch_loss += loss;
            batches += 1;
        }
        last_loss = epoch_loss / batches.max(1) as f64;
        if !last_loss.is_finite() {
            return Err(Error::Training {
                epoch,
                detail: format!("loss is {last_loss}"),
            });
        }
    }

    let report = ClassifierReport {
        train_accuracy: accuracy(&net, train_data)?,
        final_loss: last_loss,
    };
    Ok((net, report))
}

fn step_with_context(
    opt: &mut Optimizer,
    net: &mut DenseNet,
    grads: &GradientSet,
    epoch: usize,
) -> Result<()> {
    opt.step(net, grads).map_err(|e| match e {
        Error::Numeric(detail) => Error::Training { epoch, detail },
        other => other,
    })
}

/// Mean cross-entropy and gradient over a batch of rows.
pub(crate) fn batch_cross_entropy(
    net: &DenseNet,
    data: &Dataset,
    rows: &[usize],
) -> Result<(f64, GradientSet)> {
    let mut grads = GradientSet::zeros_like(net);
    let mut total = 0.0;
    let inv = 1.0 / rows.len().max(1) as f64;
    for &i in rows {
        let acts = net.forward(data.row(i))?;
        let (loss, mut upstream) = cross_entropy(acts.output(), data.label(i));
        for u in &mut upstream {
            *u *= inv;
        }
        total += loss * inv;
        accumulate_backward(net, &acts, &upstream, 1.0, &mut grads)?;
    }
    Ok((total, grads))
}

/// Probability vector of the final softmax layer.
pub fn predict_proba(net: &DenseNet, x: &[f64]) -> Result<Vec<f64>> {
    Ok(net.forward(x)?.output().to_vec())
}

pub fn predict_label(net: &DenseNet, x: &[f64]) -> Result<usize> {
    let probs = predict_proba(net, x)?;
    Ok(probs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0))
}

/// The second-most-probable class: the natural flip target when none is
/// specified.
pub fn runner_up_class(probs: &[f64]) -> usize {
    let top = probs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    probs
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != top)
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(top)
}

/// Fraction of rows the net labels correctly.
pub fn accuracy(net: &DenseNet, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::parameter("empty evaluation set"));
    }
    let mut correct = 0usize;
    for i in 0..data.len() {
        if predict_label(net, data.row(i))? == data.label(i) {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}
