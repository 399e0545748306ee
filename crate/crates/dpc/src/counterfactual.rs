//! Counterfactual search from latent class prototypes, plus the non-private
//! gradient baseline and the unbiasedness probe.
//!
//! The search minimizes
//! `L(delta) = alpha * L_pred + beta * L_dist + gamma * L_prot` over a latent
//! perturbation `delta` of the target-class prototype, where `L_pred` is the
//! cross-entropy of the target model toward the desired class, `L_dist` the
//! Euclidean distance between the decoded sample and the query, and `L_prot`
//! the norm of `delta` itself. It reads only prototypes, the autoencoder, and
//! the target model; no operation here takes a dataset, which is what makes
//! everything downstream of prototype construction pure post-processing.

use serde::{Deserialize, Serialize};

use crate::autoencoder::{Autoencoder, Prototype};
use crate::classifier::cross_entropy;
use crate::error::{Error, Result};
use crate::exec;
use crate::numerics::{backward, laplace::laplace_draw, DenseNet};
use crate::rng::RngState;

/// Balancing coefficients and optimization budget for one search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub iterations: usize,
    pub step_size: f64,
    pub target_class: usize,
    /// Scale of the random start offset; distinct seeds then yield distinct
    /// counterfactuals for the same query. Zero starts exactly at the
    /// prototype.
    pub init_jitter: f64,
}

impl SearchConfig {
    pub fn new(alpha: f64, beta: f64, gamma: f64, target_class: usize) -> Result<Self> {
        if !(alpha >= 0.0 && beta >= 0.0 && gamma >= 0.0) {
            return Err(Error::parameter("coefficients must be non-negative"));
        }
        if alpha + beta + gamma <= 0.0 {
            return Err(Error::parameter(
                "at least one of alpha, beta, gamma must be positive",
            ));
        }
        Ok(SearchConfig {
            alpha,
            beta,
            gamma,
            iterations: 500,
            step_size: 0.05,
            target_class,
            init_jitter: 0.01,
        })
    }

    /// Preset for mixed tabular data.
    pub fn mixed(target_class: usize) -> Self {
        SearchConfig::new(1.0, 0.5, 0.1, target_class).unwrap()
    }

    /// Preset for image data.
    pub fn image(target_class: usize) -> Self {
        SearchConfig::new(1.0, 0.2, 20.0, target_class).unwrap()
    }

    /// Preset for wide binary data.
    pub fn binary(target_class: usize) -> Self {
        SearchConfig::new(1.0, 0.5, 10.0, target_class).unwrap()
    }

    pub fn with_iterations(mut self, iterations: usize, step_size: f64) -> Self {
        self.iterations = iterations;
        self.step_size = step_size;
        self
    }

    pub fn with_jitter(mut self, jitter: f64) -> Self {
        self.init_jitter = jitter;
        self
    }
}

/// Outcome of one search: the best-loss iterate and its decoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualResult {
    /// Latent perturbation (for the baseline generator: the data-space
    /// perturbation from the query).
    pub delta: Vec<f64>,
    /// Decoded counterfactual sample in data space.
    pub sample: Vec<f64>,
    pub predicted_class: usize,
    /// Objective value at every evaluated iterate; entry 0 is the value at
    /// `delta = 0`.
    pub loss_trace: Vec<f64>,
    /// Whether the returned sample is predicted as the target class.
    pub flipped: bool,
    /// False when no iterate improved on `delta = 0` (best-iterate tracking
    /// makes this impossible unless the trace is empty, but the flag is part
    /// of the reporting contract).
    pub converged: bool,
}

fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Searches a counterfactual for `query` toward `config.target_class`,
/// starting from that class's prototype. Reads only released artifacts:
/// prototypes, the autoencoder, and the target model.
pub fn search_counterfactual(
    prototypes: &[Prototype],
    query: &[f64],
    target_model: &DenseNet,
    autoencoder: &Autoencoder,
    config: &SearchConfig,
    rng: &mut RngState,
) -> Result<CounterfactualResult> {
    let proto = prototypes
        .iter()
        .find(|p| p.class_id == config.target_class)
        .ok_or_else(|| {
            Error::parameter(format!(
                "no prototype for target class {}",
                config.target_class
            ))
        })?;
    if query.len() != autoencoder.input_dim() {
        return Err(Error::structural(format!(
            "query length {} does not match input dim {}",
            query.len(),
            autoencoder.input_dim()
        )));
    }
    let decoder = autoencoder.decoder_net();
    let latent = proto.vector.len();

    // Evaluates the objective and its gradient in `delta`.
    let eval = |delta: &[f64]| -> Result<(f64, Vec<f64>, Vec<f64>, usize)> {
        let z: Vec<f64> = proto.vector.iter().zip(delta).map(|(p, d)| p + d).collect();
        let dec_acts = decoder.forward(&z)?;
        let sample = dec_acts.output().to_vec();

        let cls_acts = target_model.forward(&sample)?;
        let probs = cls_acts.output();
        let (ce, ce_upstream) = cross_entropy(probs, config.target_class);

        let diff: Vec<f64> = sample.iter().zip(query).map(|(s, q)| s - q).collect();
        let dist = norm(&diff);
        let delta_norm = norm(delta);

        let loss = config.alpha * ce + config.beta * dist + config.gamma * delta_norm;
        if !loss.is_finite() {
            return Err(Error::numeric(format!(
                "search objective is not finite (pred {ce}, dist {dist}, prot {delta_norm})"
            )));
        }

        // Pull the prediction and distance terms back through the decoder.
        let cls_input_grad = backward(target_model, &cls_acts, &ce_upstream)?.input;
        let mut sample_grad = vec![0.0; sample.len()];
        for (i, g) in sample_grad.iter_mut().enumerate() {
            *g = config.alpha * cls_input_grad[i];
            if dist > 1e-12 {
                *g += config.beta * diff[i] / dist;
            }
        }
        let mut grad = backward(&decoder, &dec_acts, &sample_grad)?.input;
        if delta_norm > 1e-12 {
            for (g, d) in grad.iter_mut().zip(delta) {
                *g += config.gamma * d / delta_norm;
            }
        }
        Ok((loss, grad, sample, argmax(probs)))
    };

    let mut delta = vec![0.0; latent];
    let (base_loss, _, base_sample, base_pred) = eval(&delta)?;
    let mut trace = vec![base_loss];
    let mut best = (base_loss, delta.clone(), base_sample, base_pred);

    if config.init_jitter > 0.0 {
        for d in &mut delta {
            *d = config.init_jitter * rng.gaussian();
        }
    }

    for _ in 0..config.iterations {
        let (loss, grad, sample, pred) = eval(&delta)?;
        trace.push(loss);
        if loss < best.0 {
            best = (loss, delta.clone(), sample, pred);
        }
        for (d, g) in delta.iter_mut().zip(&grad) {
            *d -= config.step_size * g;
        }
    }

    let (best_loss, delta, sample, predicted_class) = best;
    Ok(CounterfactualResult {
        delta,
        sample,
        predicted_class,
        flipped: predicted_class == config.target_class,
        converged: best_loss <= trace[0],
        loss_trace: trace,
    })
}

/// Non-private reference generator: projected gradient ascent on the target
/// class log-probability (the cross-entropy direction, which does not vanish
/// where the model is confident), directly in data space from the query. The
/// walk stops at the first iterate that flips, so samples land just past the
/// boundary, and stays in the normalized [-1, 1] cube.
pub fn baseline_counterfactual(
    query: &[f64],
    target_model: &DenseNet,
    target_class: usize,
    steps: usize,
    step_size: f64,
) -> Result<CounterfactualResult> {
    if target_class >= target_model.output_dim() {
        return Err(Error::parameter(format!(
            "target class {target_class} out of range for {} outputs",
            target_model.output_dim()
        )));
    }
    let mut x = query.to_vec();
    let mut trace = Vec::with_capacity(steps + 1);
    let mut last_pred = 0;

    for step in 0..=steps {
        let acts = target_model.forward(&x)?;
        let probs = acts.output();
        last_pred = argmax(probs);
        trace.push(-probs[target_class]);
        if step == steps || last_pred == target_class {
            break;
        }
        // Ascend ln p_target: the negated cross-entropy gradient.
        let (_, ce_upstream) = cross_entropy(probs, target_class);
        let input_grad = backward(target_model, &acts, &ce_upstream)?.input;
        for (xi, g) in x.iter_mut().zip(&input_grad) {
            *xi = (*xi - step_size * g).clamp(-1.0, 1.0);
        }
    }

    let delta: Vec<f64> = x.iter().zip(query).map(|(a, b)| a - b).collect();
    let converged = trace.last().unwrap() <= &trace[0];
    Ok(CounterfactualResult {
        delta,
        sample: x,
        predicted_class: last_pred,
        flipped: last_pred == target_class,
        loss_trace: trace,
        converged,
    })
}

/// Monte Carlo estimate of the search bias under symmetric prototype noise.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    /// Per-coordinate absolute deviation of the trial mean from the
    /// noise-free search output.
    pub deviation: Vec<f64>,
    /// Per-coordinate standard error of that mean.
    pub std_error: Vec<f64>,
}

impl ProbeResult {
    pub fn max_deviation(&self) -> f64 {
        self.deviation.iter().cloned().fold(0.0, f64::max)
    }

    /// True when every coordinate's deviation sits within `k` standard
    /// errors of zero.
    pub fn within(&self, k: f64) -> bool {
        self.deviation
            .iter()
            .zip(&self.std_error)
            .all(|(d, se)| *d <= k * se.max(1e-300))
    }
}

/// Probes whether the search commutes with symmetric prototype noise in the
/// mean. The toy search is affine in the prototype: identity decoder,
/// quadratic pull toward a fixed target plus a quadratic perturbation
/// penalty, minimized by fixed-step gradient descent. Such a map commutes
/// with reflection through the prototype, so the expected output under
/// symmetric Laplace noise equals the noise-free output.
pub fn unbiasedness_probe(
    toy_dim: usize,
    noise_scale: f64,
    trials: usize,
    rng: &RngState,
) -> Result<ProbeResult> {
    if trials < 10_000 {
        return Err(Error::parameter("need at least 10^4 trials"));
    }
    if toy_dim == 0 {
        return Err(Error::parameter("toy dimension must be positive"));
    }
    let mut setup = rng.substream("toy");
    let proto: Vec<f64> = (0..toy_dim).map(|_| setup.uniform(-0.5, 0.5)).collect();
    let target: Vec<f64> = (0..toy_dim).map(|_| setup.uniform(-0.5, 0.5)).collect();

    // 25 fixed-step gradient steps on ||(rho + delta) - t||^2 + 0.5 ||delta||^2;
    // the result is affine in rho.
    let toy_search = |rho: &[f64]| -> Vec<f64> {
        let gamma = 0.5;
        let step = 0.1;
        let mut delta = vec![0.0; rho.len()];
        for _ in 0..25 {
            for j in 0..rho.len() {
                let grad = 2.0 * (rho[j] + delta[j] - target[j]) + 2.0 * gamma * delta[j];
                delta[j] -= step * grad;
            }
        }
        rho.iter().zip(&delta).map(|(r, d)| r + d).collect()
    };

    let truth = toy_search(&proto);
    let noise_rng = rng.substream("probe");
    // Accumulate per-trial differences from the noise-free output; with zero
    // noise every difference is exactly 0, so the reported deviation is too.
    let diffs: Vec<Vec<f64>> = exec::run(trials, |t| {
        let mut local = noise_rng.fork(t as u64);
        let noisy: Vec<f64> = proto
            .iter()
            .map(|p| {
                if noise_scale > 0.0 {
                    p + laplace_draw(&mut local, noise_scale)
                } else {
                    *p
                }
            })
            .collect();
        toy_search(&noisy)
            .iter()
            .zip(&truth)
            .map(|(s, t)| s - t)
            .collect()
    });

    let n = trials as f64;
    let mut mean = vec![0.0; toy_dim];
    for d in &diffs {
        for (m, v) in mean.iter_mut().zip(d) {
            *m += v / n;
        }
    }
    let mut var = vec![0.0; toy_dim];
    for d in &diffs {
        for (j, v) in d.iter().enumerate() {
            let c = v - mean[j];
            var[j] += c * c / (n - 1.0);
        }
    }
    Ok(ProbeResult {
        deviation: mean.iter().map(|m| m.abs()).collect(),
        std_error: var.iter().map(|v| (v / n).sqrt()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autoencoder::{build_prototypes, AutoencoderSpec};
    use crate::classifier::{train_classifier, ClassifierSpec};
    use crate::data::{synth_blobs, Dataset};
    use crate::numerics::{Activation, DenseLayer, Matrix, OptimizerKind};

    fn toy_pipeline(seed: u64) -> (Vec<Prototype>, Autoencoder, DenseNet, Dataset) {
        let rng = RngState::from_seed(seed);
        let data = synth_blobs(&mut rng.substream("data"), 60, 4, 2, 1.5).unwrap();
        let spec = AutoencoderSpec::new(vec![5, 3]).unwrap();
        let ae = spec.build(4, &mut rng.substream("ae")).unwrap();
        let protos = build_prototypes(&ae, &data).unwrap().prototypes;
        let cls_spec = ClassifierSpec::new(vec![8], Activation::Tanh, 2).unwrap();
        let (model, _) = train_classifier(
            &cls_spec,
            &data,
            30,
            16,
            OptimizerKind::Adam { lr: 1e-2 },
            &rng.substream("cls"),
        )
        .unwrap();
        (protos, ae, model, data)
    }

    #[test]
    fn pure_regularizer_stays_at_prototype() {
        let (protos, ae, model, _) = toy_pipeline(1);
        let config = SearchConfig::new(0.0, 0.0, 1.0, 0).unwrap().with_jitter(0.0);
        let query = vec![0.1; 4];
        let result =
            search_counterfactual(&protos, &query, &model, &ae, &config, &mut RngState::from_seed(2))
                .unwrap();
        assert!(norm(&result.delta) < 1e-12);
        let expected = ae.decode(&protos[0].vector).unwrap();
        assert_eq!(result.sample, expected);
        assert!(result.converged);
    }

    #[test]
    fn huge_gamma_pins_delta_near_zero() {
        let (protos, ae, model, _) = toy_pipeline(3);
        let config = SearchConfig::new(1.0, 0.5, 1e6, 0)
            .unwrap()
            .with_iterations(200, 0.05);
        let query = vec![-0.2; 4];
        let result =
            search_counterfactual(&protos, &query, &model, &ae, &config, &mut RngState::from_seed(4))
                .unwrap();
        assert!(
            norm(&result.delta) < 1e-2,
            "delta norm {} should be dominated away",
            norm(&result.delta)
        );
    }

    #[test]
    fn missing_prototype_is_a_parameter_error() {
        let (protos, ae, model, _) = toy_pipeline(5);
        let config = SearchConfig::mixed(9);
        assert!(matches!(
            search_counterfactual(
                &protos,
                &[0.0; 4],
                &model,
                &ae,
                &config,
                &mut RngState::from_seed(1)
            ),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn best_loss_never_exceeds_start() {
        let (protos, ae, model, _) = toy_pipeline(7);
        let config = SearchConfig::mixed(1).with_iterations(50, 0.1);
        let result = search_counterfactual(
            &protos,
            &[0.3, -0.1, 0.2, 0.0],
            &model,
            &ae,
            &config,
            &mut RngState::from_seed(8),
        )
        .unwrap();
        let best = result.loss_trace.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(best <= result.loss_trace[0]);
        assert!(result.converged);
    }

    #[test]
    fn distinct_seeds_give_distinct_samples() {
        let (protos, ae, model, _) = toy_pipeline(9);
        let config = SearchConfig::mixed(0).with_iterations(20, 0.05);
        let query = vec![0.25, 0.1, -0.3, 0.4];
        let a = search_counterfactual(&protos, &query, &model, &ae, &config, &mut RngState::from_seed(1))
            .unwrap();
        let b = search_counterfactual(&protos, &query, &model, &ae, &config, &mut RngState::from_seed(2))
            .unwrap();
        assert_ne!(a.sample, b.sample);
    }

    #[test]
    fn baseline_zero_steps_returns_query() {
        let (_, _, model, _) = toy_pipeline(11);
        let query = vec![0.4, -0.4, 0.2, 0.0];
        let result = baseline_counterfactual(&query, &model, 1, 0, 0.1).unwrap();
        assert_eq!(result.sample, query);
        assert!(result.delta.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn baseline_direction_follows_linear_weights() {
        // Single softmax layer: the ascent direction for class 1 is parallel
        // to w_1 - w_0. The query starts on the class-0 side.
        let weights = Matrix::from_rows(&[vec![0.5, -0.25], vec![-0.3, 0.65]]);
        let layer = DenseLayer::new(weights, None, Activation::Softmax).unwrap();
        let model = DenseNet::new(vec![layer], 2).unwrap();
        let query = vec![0.1, -0.1];
        let result = baseline_counterfactual(&query, &model, 1, 1, 0.01).unwrap();
        let dir = [-0.3 - 0.5, 0.65 - (-0.25)];
        let cross = result.delta[0] * dir[1] - result.delta[1] * dir[0];
        assert!(cross.abs() < 1e-12, "delta {:?} not parallel to {dir:?}", result.delta);
        assert!(result.delta[0] * dir[0] + result.delta[1] * dir[1] > 0.0);
    }

    #[test]
    fn baseline_stays_in_normalized_cube() {
        let (_, _, model, _) = toy_pipeline(13);
        let result =
            baseline_counterfactual(&[0.9, 0.9, -0.9, 0.9], &model, 0, 300, 0.5).unwrap();
        assert!(result.sample.iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn probe_zero_noise_has_zero_deviation() {
        let result = unbiasedness_probe(3, 0.0, 10_000, &RngState::from_seed(1)).unwrap();
        assert!(result.deviation.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn probe_deviation_within_monte_carlo_error() {
        let result = unbiasedness_probe(3, 0.5, 100_000, &RngState::from_seed(4)).unwrap();
        assert!(
            result.within(3.0),
            "deviation {:?} vs se {:?}",
            result.deviation,
            result.std_error
        );
    }

    #[test]
    fn probe_error_shrinks_with_sqrt_trials() {
        let small = unbiasedness_probe(2, 0.5, 20_000, &RngState::from_seed(3)).unwrap();
        let large = unbiasedness_probe(2, 0.5, 80_000, &RngState::from_seed(3)).unwrap();
        for (s, l) in small.std_error.iter().zip(&large.std_error) {
            let ratio = s / l;
            assert!(
                (ratio - 2.0).abs() < 0.25,
                "quadrupling trials should halve the standard error, ratio {ratio}"
            );
        }
    }

    #[test]
    fn probe_rejects_tiny_trial_counts() {
        assert!(unbiasedness_probe(3, 0.5, 100, &RngState::from_seed(1)).is_err());
    }
}
