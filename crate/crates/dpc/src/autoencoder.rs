//! Autoencoder training under the perturbed objective and latent class
//! prototypes.
//!
//! The architecture is a stack of bias-free sigmoid layers; every sigmoid is
//! followed by a fixed `2h - 1` rescaling layer, so each hidden layer (and
//! the reconstruction) sees values in (-1, 1), the range the sensitivity
//! bound assumes. The decoder mirrors the encoder widths in reverse.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::mechanism::{
    aggregate_coefficients, perturb, perturbed_loss, NoisyCoefficients, PrivacyBudget,
};
use crate::numerics::{
    Activation, AdamOptimizer, DenseLayer, DenseNet, GradientSet,
};
use crate::rng::RngState;

/// Encoder layout for a mirrored autoencoder. Activation is sigmoid,
/// normalization layers are inserted around every hidden layer, and no layer
/// carries a bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderSpec {
    pub encoder_widths: Vec<usize>,
}

impl AutoencoderSpec {
    pub fn new(encoder_widths: Vec<usize>) -> Result<Self> {
        if encoder_widths.is_empty() || encoder_widths.contains(&0) {
            return Err(Error::parameter(
                "encoder widths must be a nonempty list of positive integers",
            ));
        }
        Ok(AutoencoderSpec { encoder_widths })
    }

    /// The width parameter K entering the sensitivity bound: the maximum
    /// hidden width across all layers.
    pub fn width_param(&self) -> usize {
        *self.encoder_widths.iter().max().unwrap()
    }

    pub fn latent_dim(&self) -> usize {
        *self.encoder_widths.last().unwrap()
    }

    /// Instantiates the network with seeded uniform init.
    pub fn build(&self, input_dim: usize, rng: &mut RngState) -> Result<Autoencoder> {
        let mut layers = Vec::new();
        let mut prev = input_dim;
        for &w in &self.encoder_widths {
            layers.push(DenseLayer::init(prev, w, false, Activation::Sigmoid, rng));
            layers.push(DenseLayer::normalization(w));
            prev = w;
        }
        let encoder_len = layers.len();
        let decoder_widths: Vec<usize> = self.encoder_widths[..self.encoder_widths.len() - 1]
            .iter()
            .rev()
            .copied()
            .chain(std::iter::once(input_dim))
            .collect();
        for &w in &decoder_widths {
            layers.push(DenseLayer::init(prev, w, false, Activation::Sigmoid, rng));
            layers.push(DenseLayer::normalization(w));
            prev = w;
        }
        Ok(Autoencoder {
            net: DenseNet::new(layers, input_dim)?,
            encoder_len,
        })
    }
}

/// A trained (or initializing) autoencoder, split into encoder and decoder
/// halves at `encoder_len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Autoencoder {
    pub net: DenseNet,
    pub encoder_len: usize,
}

impl Autoencoder {
    pub fn latent_dim(&self) -> usize {
        self.net.layers[self.encoder_len - 1].out_dim()
    }

    pub fn input_dim(&self) -> usize {
        self.net.input_dim
    }

    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.net.forward_range(x, 0..self.encoder_len)
    }

    pub fn decode(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.net.forward_range(z, self.encoder_len..self.net.layers.len())
    }

    pub fn reconstruct(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.decode(&self.encode(x)?)
    }

    /// The decoder half as a standalone network (for backward passes during
    /// counterfactual search).
    pub fn decoder_net(&self) -> DenseNet {
        DenseNet {
            layers: self.net.layers[self.encoder_len..].to_vec(),
            input_dim: self.latent_dim(),
        }
    }
}

/// Epoch/batch/learning-rate bundle for the training entry points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl TrainSettings {
    pub fn new(epochs: usize, batch_size: usize) -> Self {
        TrainSettings {
            epochs,
            batch_size,
            learning_rate: 0.01,
        }
    }

    pub fn with_learning_rate(mut self, lr: f64) -> Self {
        self.learning_rate = lr;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean per-entry squared reconstruction error on the held-out slice.
    pub holdout_mse: f64,
    /// Mean per-sample loss of the final epoch (includes the noise coupling).
    pub final_loss: f64,
    pub epochs_run: usize,
}

/// Fraction of rows carved off for the held-out reconstruction report.
const HOLDOUT_FRACTION: f64 = 0.1;

/// Trains the autoencoder by minimizing the perturbed objective, drawing the
/// coefficient noise once up front. Returns the trained net, the frozen
/// noise record, and the reconstruction report.
///
/// Randomness derives from `rng` through named substreams (`noise`, `init`,
/// `holdout`, `batch`), so runs sharing a seed are bit-identical.
pub fn train_autoencoder(
    spec: &AutoencoderSpec,
    dataset: &Dataset,
    budget: &PrivacyBudget,
    settings: &TrainSettings,
    rng: &RngState,
) -> Result<(Autoencoder, NoisyCoefficients, TrainReport)> {
    let width = spec.width_param();
    if budget.width() != width {
        return Err(Error::parameter(format!(
            "budget sized for K = {}, architecture needs K = {width}",
            budget.width()
        )));
    }
    let groups = aggregate_coefficients(dataset, width)?;
    let noisy = perturb(&groups, budget, &mut rng.substream("noise"));
    let ae = train_with_noise(spec, dataset, &noisy, settings, rng)?;
    let report = ae.1;
    Ok((ae.0, noisy, report))
}

/// Training core against an explicit (possibly zeroed) noise record.
pub fn train_with_noise(
    spec: &AutoencoderSpec,
    dataset: &Dataset,
    noisy: &NoisyCoefficients,
    settings: &TrainSettings,
    rng: &RngState,
) -> Result<(Autoencoder, TrainReport)> {
    let mut ae = spec.build(dataset.dim(), &mut rng.substream("init"))?;
    let (train_rows, holdout_rows) = holdout_split(dataset.len(), rng);
    let batches_per_epoch = train_rows.len().div_ceil(settings.batch_size.max(1));

    let final_loss = run_epochs(
        &mut ae.net,
        &train_rows,
        settings,
        rng,
        |net, batch| perturbed_loss(net, dataset, batch, noisy, batches_per_epoch),
    )?;

    let holdout_mse = mean_squared_reconstruction(&ae, dataset, &holdout_rows)?;
    Ok((
        ae,
        TrainReport {
            holdout_mse,
            final_loss,
            epochs_run: settings.epochs,
        },
    ))
}

/// Plain-objective route (no noise coupling at all); the reference arm of the
/// zero-noise equivalence check.
pub fn train_autoencoder_plain(
    spec: &AutoencoderSpec,
    dataset: &Dataset,
    settings: &TrainSettings,
    rng: &RngState,
) -> Result<(Autoencoder, TrainReport)> {
    let mut ae = spec.build(dataset.dim(), &mut rng.substream("init"))?;
    let (train_rows, holdout_rows) = holdout_split(dataset.len(), rng);

    let final_loss = run_epochs(&mut ae.net, &train_rows, settings, rng, |net, batch| {
        crate::mechanism::plain_loss(net, dataset, batch)
    })?;

    let holdout_mse = mean_squared_reconstruction(&ae, dataset, &holdout_rows)?;
    Ok((
        ae,
        TrainReport {
            holdout_mse,
            final_loss,
            epochs_run: settings.epochs,
        },
    ))
}

fn holdout_split(n: usize, rng: &RngState) -> (Vec<usize>, Vec<usize>) {
    let mut indices: Vec<usize> = (0..n).collect();
    let mut shuffler = rng.substream("holdout");
    shuffler.shuffle(&mut indices);
    let holdout_len = if n >= 10 {
        ((n as f64 * HOLDOUT_FRACTION) as usize).max(1)
    } else {
        0
    };
    let holdout = indices.split_off(n - holdout_len);
    (indices, holdout)
}

fn run_epochs(
    net: &mut DenseNet,
    train_rows: &[usize],
    settings: &TrainSettings,
    rng: &RngState,
    mut objective: impl FnMut(&DenseNet, &[usize]) -> Result<(f64, GradientSet)>,
) -> Result<f64> {
    let batch_rng = rng.substream("batch");
    let mut optimizer = AdamOptimizer::new(net, settings.learning_rate);
    let mut order: Vec<usize> = train_rows.to_vec();
    let mut last_epoch_loss = 0.0;

    for epoch in 0..settings.epochs {
        batch_rng.fork(epoch as u64).shuffle(&mut order);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(settings.batch_size.max(1)) {
            let (loss, mut grads) = objective(net, batch).map_err(|e| match e {
                Error::Numeric(detail) => Error::Training { epoch, detail },
                other => other,
            })?;
            if !loss.is_finite() {
                return Err(Error::Training {
                    epoch,
                    detail: format!("loss is {loss}"),
                });
            }
            grads.freeze_like(net);
            optimizer.step(net, &grads).map_err(|e| match e {
                Error::Numeric(detail) => Error::Training { epoch, detail },
                other => other,
            })?;
            epoch_loss += loss;
            batches += 1;
        }
        last_epoch_loss = epoch_loss / batches.max(1) as f64;
    }
    Ok(last_epoch_loss)
}

/// Mean per-entry squared reconstruction error over the given rows; falls
/// back to the whole dataset when `rows` is empty.
pub fn mean_squared_reconstruction(
    ae: &Autoencoder,
    dataset: &Dataset,
    rows: &[usize],
) -> Result<f64> {
    let all: Vec<usize>;
    let rows = if rows.is_empty() {
        all = (0..dataset.len()).collect();
        &all
    } else {
        rows
    };
    let mut total = 0.0;
    for &i in rows {
        let x = dataset.row(i);
        let xhat = ae.reconstruct(x)?;
        total += x
            .iter()
            .zip(&xhat)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
    }
    Ok(total / (rows.len() * dataset.dim()) as f64)
}

/// Per-class mean latent vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prototype {
    pub class_id: usize,
    pub vector: Vec<f64>,
    pub member_count: usize,
}

/// Prototypes for every class present in the dataset; classes with zero
/// members are listed in `missing_classes` instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrototypeSet {
    pub prototypes: Vec<Prototype>,
    pub missing_classes: Vec<usize>,
}

impl PrototypeSet {
    pub fn for_class(&self, class_id: usize) -> Option<&Prototype> {
        self.prototypes.iter().find(|p| p.class_id == class_id)
    }
}

/// Averages encoder outputs per class.
pub fn build_prototypes(ae: &Autoencoder, dataset: &Dataset) -> Result<PrototypeSet> {
    let latent = ae.latent_dim();
    let mut sums = vec![vec![0.0; latent]; dataset.class_count()];
    let mut counts = vec![0usize; dataset.class_count()];
    for i in 0..dataset.len() {
        let z = ae.encode(dataset.row(i))?;
        let class = dataset.label(i);
        counts[class] += 1;
        for (acc, v) in sums[class].iter_mut().zip(&z) {
            *acc += v;
        }
    }
    let mut prototypes = Vec::new();
    let mut missing_classes = Vec::new();
    for (class_id, (sum, &count)) in sums.iter().zip(&counts).enumerate() {
        if count == 0 {
            missing_classes.push(class_id);
            continue;
        }
        prototypes.push(Prototype {
            class_id,
            vector: sum.iter().map(|s| s / count as f64).collect(),
            member_count: count,
        });
    }
    Ok(PrototypeSet {
        prototypes,
        missing_classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_blobs, FeatureSchema};
    use crate::numerics::Matrix;

    fn blob_data(seed: u64, n_per_class: usize) -> Dataset {
        synth_blobs(&mut RngState::from_seed(seed), n_per_class, 4, 2, 1.5).unwrap()
    }

    #[test]
    fn spec_builds_mirrored_layers() {
        let spec = AutoencoderSpec::new(vec![8, 3]).unwrap();
        let ae = spec.build(5, &mut RngState::from_seed(1)).unwrap();
        assert_eq!(ae.encoder_len, 4);
        assert_eq!(ae.net.layers.len(), 8);
        assert_eq!(ae.latent_dim(), 3);
        // Dense widths: 5->8->3 encoding, 3->8->5 decoding.
        let dense_dims: Vec<(usize, usize)> = ae
            .net
            .layers
            .iter()
            .filter(|l| !l.is_frozen())
            .map(|l| (l.in_dim(), l.out_dim()))
            .collect();
        assert_eq!(dense_dims, vec![(5, 8), (8, 3), (3, 8), (8, 5)]);
        assert_eq!(spec.width_param(), 8);
        // No biases anywhere.
        assert!(ae.net.layers.iter().all(|l| l.bias.is_none()));
    }

    #[test]
    fn hidden_inputs_and_output_stay_in_symmetric_range() {
        let spec = AutoencoderSpec::new(vec![6, 3]).unwrap();
        let ae = spec.build(4, &mut RngState::from_seed(2)).unwrap();
        let acts = ae.net.forward(&[0.9, -0.9, 0.4, -0.2]).unwrap();
        // Every normalization output (input of the next dense layer, and the
        // final reconstruction) lies strictly inside (-1, 1).
        for (layer, out) in ae.net.layers.iter().zip(acts.values.iter().skip(1)) {
            if layer.is_frozen() {
                assert!(out.iter().all(|&v| v > -1.0 && v < 1.0));
            }
        }
        assert!(acts.output().iter().all(|&v| v > -1.0 && v < 1.0));
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let spec = AutoencoderSpec::new(vec![4, 2]).unwrap();
        let data = blob_data(3, 30);
        let budget = PrivacyBudget::new(1.0, spec.width_param()).unwrap();
        let rng = RngState::from_seed(5);
        let settings = TrainSettings::new(0, 16);
        let (trained, _, report) = train_autoencoder(&spec, &data, &budget, &settings, &rng).unwrap();
        let init = spec.build(data.dim(), &mut rng.substream("init")).unwrap();
        assert_eq!(trained.net, init.net);
        assert_eq!(report.epochs_run, 0);
    }

    #[test]
    fn training_is_seed_deterministic() {
        let spec = AutoencoderSpec::new(vec![4, 2]).unwrap();
        let data = blob_data(7, 40);
        let budget = PrivacyBudget::new(0.5, spec.width_param()).unwrap();
        let settings = TrainSettings::new(5, 16);
        let a = train_autoencoder(&spec, &data, &budget, &settings, &RngState::from_seed(11)).unwrap();
        let b = train_autoencoder(&spec, &data, &budget, &settings, &RngState::from_seed(11)).unwrap();
        assert_eq!(a.0.net, b.0.net);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn prototype_of_single_member_is_its_encoding() {
        let spec = AutoencoderSpec::new(vec![3, 2]).unwrap();
        let ae = spec.build(2, &mut RngState::from_seed(4)).unwrap();
        let data = Dataset::new(
            Matrix::from_rows(&[vec![0.2, -0.4]]),
            vec![1],
            2,
            FeatureSchema::dense(2, 2),
        )
        .unwrap();
        let set = build_prototypes(&ae, &data).unwrap();
        assert_eq!(set.missing_classes, vec![0]);
        let proto = set.for_class(1).unwrap();
        assert_eq!(proto.member_count, 1);
        assert_eq!(proto.vector, ae.encode(&[0.2, -0.4]).unwrap());
    }

    #[test]
    fn prototype_invariant_under_duplication() {
        let spec = AutoencoderSpec::new(vec![3, 2]).unwrap();
        let ae = spec.build(2, &mut RngState::from_seed(4)).unwrap();
        let rows = vec![vec![0.2, -0.4], vec![-0.6, 0.1], vec![0.5, 0.5]];
        let doubled: Vec<Vec<f64>> = rows.iter().chain(rows.iter()).cloned().collect();
        let schema = FeatureSchema::dense(2, 1);
        let single = Dataset::new(Matrix::from_rows(&rows), vec![0; 3], 1, schema.clone()).unwrap();
        let both = Dataset::new(Matrix::from_rows(&doubled), vec![0; 6], 1, schema).unwrap();
        let p1 = build_prototypes(&ae, &single).unwrap();
        let p2 = build_prototypes(&ae, &both).unwrap();
        for (a, b) in p1.prototypes[0].vector.iter().zip(&p2.prototypes[0].vector) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn prototype_matches_external_mean() {
        let spec = AutoencoderSpec::new(vec![4, 3]).unwrap();
        let ae = spec.build(3, &mut RngState::from_seed(9)).unwrap();
        let mut rng = RngState::from_seed(21);
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..3).map(|_| rng.uniform(-1.0, 1.0)).collect())
            .collect();
        let data = Dataset::new(
            Matrix::from_rows(&rows),
            vec![0; 5],
            1,
            FeatureSchema::dense(3, 1),
        )
        .unwrap();
        // Independent mean computed outside the module.
        let mut expected = vec![0.0; ae.latent_dim()];
        for r in &rows {
            let z = ae.encode(r).unwrap();
            for (e, v) in expected.iter_mut().zip(&z) {
                *e += v / 5.0;
            }
        }
        let set = build_prototypes(&ae, &data).unwrap();
        for (got, want) in set.prototypes[0].vector.iter().zip(&expected) {
            assert!((got - want).abs() < 1e-9);
        }
    }

    #[test]
    fn budget_width_mismatch_is_rejected() {
        let spec = AutoencoderSpec::new(vec![4, 2]).unwrap();
        let data = blob_data(1, 20);
        let budget = PrivacyBudget::new(1.0, 7).unwrap();
        let settings = TrainSettings::new(1, 8);
        assert!(matches!(
            train_autoencoder(&spec, &data, &budget, &settings, &RngState::from_seed(1)),
            Err(Error::Parameter(_))
        ));
    }
}
