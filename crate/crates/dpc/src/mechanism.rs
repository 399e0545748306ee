//! The functional mechanism: privacy by perturbing the training objective.
//!
//! The reconstruction loss of a sigmoid autoencoder expands over a polynomial
//! basis built from `g(x, w) = sigmoid(sigmoid(w.x) * w)`. Grouped by degree,
//! its aggregated coefficients over a dataset are
//!
//! - degree 0: `c0 = sum_i ||x_i||^2`,
//! - degree 1: one coefficient vector `-2 * sum_i x_i` per hidden unit,
//! - degree 2: the sample count `N`, one per unordered unit pair.
//!
//! Replacing one record moves these coefficients by a bounded amount
//! ([`CoefficientGroups::l1_difference`], bounded by [`sensitivity_bound`]),
//! so adding one Laplace draw of scale `sensitivity / epsilon` to each scalar
//! coefficient makes the objective differentially private. Training then
//! minimizes the perturbed objective; no per-step gradient noise is involved,
//! and the draws are frozen for the whole run.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::exec;
use crate::numerics::{
    accumulate_backward, laplace::laplace_draw, sigmoid, DenseNet, GradientSet, Matrix,
};
use crate::rng::RngState;

/// Sensitivity upper bound for the coefficient groups: `4 * (K + 1)` where
/// `K` is the width parameter (maximum hidden-layer width).
pub fn sensitivity_bound(width: usize) -> f64 {
    4.0 * (width as f64 + 1.0)
}

/// Privacy budget with its derived noise scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    /// Global sensitivity of the coefficient groups, `4 (K + 1)`.
    pub sensitivity: f64,
    /// Laplace scale `sensitivity / epsilon`.
    pub noise_scale: f64,
}

impl PrivacyBudget {
    /// `epsilon` may be infinite, in which case the noise scale is zero and
    /// training reduces to the plain objective.
    pub fn new(epsilon: f64, width: usize) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::parameter(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if width == 0 {
            return Err(Error::parameter("width parameter K must be at least 1"));
        }
        let sensitivity = sensitivity_bound(width);
        Ok(PrivacyBudget {
            epsilon,
            sensitivity,
            noise_scale: sensitivity / epsilon,
        })
    }

    pub fn width(&self) -> usize {
        (self.sensitivity / 4.0 - 1.0).round() as usize
    }
}

/// Polynomial basis vector `g(x, w) = sigmoid(sigmoid(w.x) * w)`, elementwise
/// over `w`.
pub fn basis_g(x: &[f64], w: &[f64]) -> Vec<f64> {
    let dot: f64 = w.iter().zip(x).map(|(wi, xi)| wi * xi).sum();
    let s = sigmoid(dot);
    w.iter().map(|&wi| sigmoid(s * wi)).collect()
}

/// Aggregated objective coefficients of one dataset, grouped by degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientGroups {
    /// Degree 0: `sum_i ||x_i||^2`.
    pub c0: f64,
    /// Degree 1, `K x d`: row `p` holds `-2 * sum_i x_i`, the coefficient
    /// attached to the basis of hidden unit `p`. Rows are identical by
    /// construction; they are stored per unit because the mechanism draws
    /// independent noise for each one.
    pub c1: Matrix,
    /// Degree 2: the coefficient of every unordered pair `(p, q)` is the
    /// sample count.
    pub c2: f64,
    pub width: usize,
    pub dim: usize,
    pub sample_count: usize,
}

impl CoefficientGroups {
    pub fn pair_count(&self) -> usize {
        self.width * (self.width + 1) / 2
    }

    /// Coefficient distance between two datasets under the accounting the
    /// sensitivity bound covers: the degree-0 scalar, one scalar per hidden
    /// unit for degree 1 (unit `p` reads input dimension `p`; units beyond
    /// the input dimension contribute nothing), and one scalar per unordered
    /// pair for degree 2. For inputs in [-1, 1] this never exceeds
    /// `4 (K + 1)` on neighbor datasets.
    pub fn l1_difference(&self, other: &CoefficientGroups) -> Result<f64> {
        if self.width != other.width || self.dim != other.dim {
            return Err(Error::structural(
                "coefficient groups have different shapes",
            ));
        }
        let mut total = (self.c0 - other.c0).abs();
        for p in 0..self.width.min(self.dim) {
            total += (self.c1.get(p, p) - other.c1.get(p, p)).abs();
        }
        total += self.pair_count() as f64 * (self.c2 - other.c2).abs();
        Ok(total)
    }
}

/// Sums the per-record coefficients of `dataset` for the given width.
pub fn aggregate_coefficients(dataset: &Dataset, width: usize) -> Result<CoefficientGroups> {
    if dataset.is_empty() {
        return Err(Error::parameter("cannot aggregate an empty dataset"));
    }
    if width == 0 {
        return Err(Error::parameter("width parameter K must be at least 1"));
    }
    let d = dataset.dim();
    let mut c0 = 0.0;
    let mut row_sum = vec![0.0; d];
    for i in 0..dataset.len() {
        let x = dataset.row(i);
        for (acc, &v) in row_sum.iter_mut().zip(x) {
            *acc += v;
        }
        c0 += x.iter().map(|&v| v * v).sum::<f64>();
    }
    let degree1: Vec<f64> = row_sum.iter().map(|&s| -2.0 * s).collect();
    let mut c1 = Matrix::zeros(width, d);
    for p in 0..width {
        c1.row_mut(p).copy_from_slice(&degree1);
    }
    Ok(CoefficientGroups {
        c0,
        c1,
        c2: dataset.len() as f64,
        width,
        dim: d,
        sample_count: dataset.len(),
    })
}

/// The frozen Laplace draws attached to one training run. Immutable once
/// constructed: the mechanism perturbs the objective once, not per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyCoefficients {
    pub eta0: f64,
    /// `K x d`, one draw per degree-1 coefficient entry.
    pub eta1: Matrix,
    /// One draw per unordered pair `(p, q)` with `p <= q`, row-major over the
    /// upper triangle.
    pub eta2: Vec<f64>,
    pub budget: PrivacyBudget,
    pub seed: u64,
}

impl NoisyCoefficients {
    pub fn width(&self) -> usize {
        self.eta1.rows()
    }

    pub fn dim(&self) -> usize {
        self.eta1.cols()
    }

    pub fn draw_count(&self) -> usize {
        1 + self.eta1.as_slice().len() + self.eta2.len()
    }

    /// Index into `eta2` for pair `(p, q)` with `p <= q < K`.
    pub fn pair_index(&self, p: usize, q: usize) -> usize {
        debug_assert!(p <= q && q < self.width());
        // Upper triangle walked row by row.
        p * self.width() - p * (p + 1) / 2 + q
    }

    /// All-zero noise record: the infinite-budget limit, under which the
    /// perturbed objective coincides with the plain one.
    pub fn zeroed(width: usize, dim: usize, budget: PrivacyBudget) -> Self {
        NoisyCoefficients {
            eta0: 0.0,
            eta1: Matrix::zeros(width, dim),
            eta2: vec![0.0; width * (width + 1) / 2],
            budget,
            seed: 0,
        }
    }
}

/// Draws one Laplace(sensitivity/epsilon) value per scalar coefficient.
pub fn perturb(
    groups: &CoefficientGroups,
    budget: &PrivacyBudget,
    rng: &mut RngState,
) -> NoisyCoefficients {
    let seed = rng.seed();
    let scale = budget.noise_scale;
    if scale == 0.0 {
        return NoisyCoefficients::zeroed(groups.width, groups.dim, *budget);
    }
    let eta0 = laplace_draw(rng, scale);
    let mut eta1 = Matrix::zeros(groups.width, groups.dim);
    for v in eta1.as_mut_slice() {
        *v = laplace_draw(rng, scale);
    }
    let eta2 = (0..groups.pair_count())
        .map(|_| laplace_draw(rng, scale))
        .collect();
    NoisyCoefficients {
        eta0,
        eta1,
        eta2,
        budget: *budget,
        seed,
    }
}

/// The data-independent coupling of the noise draws to the first encoder
/// layer's weights: each unit's basis is evaluated at the zero input,
/// `g(0, w_p) = sigmoid(w_p / 2)`.
pub fn eta_term(noisy: &NoisyCoefficients, first_layer_weights: &Matrix) -> f64 {
    let units = first_layer_weights.rows().min(noisy.width());
    let g: Vec<Vec<f64>> = (0..units)
        .map(|p| {
            first_layer_weights
                .row(p)
                .iter()
                .map(|&w| sigmoid(0.5 * w))
                .collect()
        })
        .collect();

    let mut total = noisy.eta0;
    for (p, gp) in g.iter().enumerate() {
        let eta_row = noisy.eta1.row(p);
        for (e, v) in eta_row.iter().zip(gp) {
            total += e * v;
        }
    }
    for p in 0..units {
        for q in p..units {
            let dot: f64 = g[p].iter().zip(&g[q]).map(|(a, b)| a * b).sum();
            total += noisy.eta2[noisy.pair_index(p, q)] * dot;
        }
    }
    total
}

/// Analytic gradient of [`eta_term`] with respect to the first layer's
/// weights.
pub fn eta_term_gradient(noisy: &NoisyCoefficients, first_layer_weights: &Matrix) -> Matrix {
    let units = first_layer_weights.rows().min(noisy.width());
    let dim = first_layer_weights.cols();
    let g: Vec<Vec<f64>> = (0..units)
        .map(|p| {
            first_layer_weights
                .row(p)
                .iter()
                .map(|&w| sigmoid(0.5 * w))
                .collect()
        })
        .collect();
    // d g_m / d w_m = 0.5 * g_m (1 - g_m)
    let dg: Vec<Vec<f64>> = g
        .iter()
        .map(|gp| gp.iter().map(|&v| 0.5 * v * (1.0 - v)).collect())
        .collect();

    let mut grad = Matrix::zeros(first_layer_weights.rows(), dim);
    for p in 0..units {
        let row = grad.row_mut(p);
        for m in 0..dim {
            row[m] = noisy.eta1.get(p, m) * dg[p][m];
        }
    }
    for p in 0..units {
        for q in p..units {
            let eta = noisy.eta2[noisy.pair_index(p, q)];
            if p == q {
                for m in 0..dim {
                    // d (g_m^2) / d w_m = 2 g_m dg_m
                    grad.row_mut(p)[m] += eta * 2.0 * g[p][m] * dg[p][m];
                }
            } else {
                for m in 0..dim {
                    grad.row_mut(p)[m] += eta * g[q][m] * dg[p][m];
                    grad.row_mut(q)[m] += eta * g[p][m] * dg[q][m];
                }
            }
        }
    }
    grad
}

/// Mean reconstruction loss `||x - net(x)||^2` over the given rows, with its
/// gradient. Accumulation is in index order, so results are reproducible.
pub fn plain_loss(net: &DenseNet, data: &Dataset, rows: &[usize]) -> Result<(f64, GradientSet)> {
    if rows.is_empty() {
        return Err(Error::parameter("empty batch"));
    }
    let mut total = 0.0;
    let mut grads = GradientSet::zeros_like(net);
    let inv = 1.0 / rows.len() as f64;
    for &i in rows {
        let x = data.row(i);
        let acts = net.forward(x)?;
        let out = acts.output();
        let mut upstream = vec![0.0; out.len()];
        let mut loss = 0.0;
        for (j, (&o, &t)) in out.iter().zip(x).enumerate() {
            let diff = o - t;
            loss += diff * diff;
            upstream[j] = 2.0 * diff * inv;
        }
        total += loss * inv;
        accumulate_backward(net, &acts, &upstream, 1.0, &mut grads)?;
    }
    if !total.is_finite() {
        return Err(Error::numeric("reconstruction loss is not finite"));
    }
    Ok((total, grads))
}

/// Perturbed objective on one batch: the plain batch loss plus the noise
/// coupling scaled by `1 / batches_per_epoch`, so a full epoch accumulates
/// exactly one copy of the noise term.
pub fn perturbed_loss(
    net: &DenseNet,
    data: &Dataset,
    rows: &[usize],
    noisy: &NoisyCoefficients,
    batches_per_epoch: usize,
) -> Result<(f64, GradientSet)> {
    let first = net
        .layers
        .first()
        .ok_or_else(|| Error::structural("empty network"))?;
    if first.weights.rows() > noisy.width() {
        return Err(Error::parameter(format!(
            "first encoder layer has {} units, noise record covers {}",
            first.weights.rows(),
            noisy.width()
        )));
    }
    let (mut loss, mut grads) = plain_loss(net, data, rows)?;
    let share = 1.0 / batches_per_epoch.max(1) as f64;

    let eta = eta_term(noisy, &first.weights);
    loss += eta * share;
    if !loss.is_finite() {
        return Err(Error::numeric(format!(
            "perturbed loss is not finite (noise coupling term {eta})"
        )));
    }
    let eta_grad = eta_term_gradient(noisy, &first.weights);
    for (g, e) in grads.layers[0]
        .weights
        .as_mut_slice()
        .iter_mut()
        .zip(eta_grad.as_slice())
    {
        *g += e * share;
    }
    Ok((loss, grads))
}

/// Monte Carlo check of the privacy ratio on a pair of neighbor datasets:
/// perturbs each dataset's degree-0 coefficient `trials` times, histograms
/// the noisy values over shared bins, and returns the largest binwise
/// probability ratio among bins where both sides have at least 50 counts.
///
/// The trials are paired: both coefficients receive the same draw, which
/// leaves each marginal distribution untouched but concentrates the
/// estimator on the actual distribution shift instead of binwise count
/// noise.
pub fn empirical_privacy_ratio(
    dataset_a: &Dataset,
    dataset_b: &Dataset,
    budget: &PrivacyBudget,
    trials: usize,
    bins: usize,
) -> Result<f64> {
    if trials < 10_000 {
        return Err(Error::parameter("need at least 10^4 trials"));
    }
    if bins < 2 {
        return Err(Error::parameter("need at least 2 bins"));
    }
    ensure_neighbors(dataset_a, dataset_b)?;
    if budget.noise_scale == 0.0 {
        return Err(Error::parameter(
            "zero noise scale makes the ratio degenerate",
        ));
    }

    let width = budget.width();
    let c0_a = aggregate_coefficients(dataset_a, width)?.c0;
    let c0_b = aggregate_coefficients(dataset_b, width)?.c0;
    let scale = budget.noise_scale;

    let base = RngState::from_seed(0x5eed_ba5e);
    let draws: Vec<(f64, f64)> = exec::run(trials, |t| {
        let mut rng = base.fork(t as u64);
        let eta = laplace_draw(&mut rng, scale);
        (c0_a + eta, c0_b + eta)
    });

    let lo = draws
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .fold(f64::INFINITY, f64::min);
    let hi = draws
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .fold(f64::NEG_INFINITY, f64::max);
    let bin_width = ((hi - lo) / bins as f64).max(f64::MIN_POSITIVE);
    let mut count_a = vec![0usize; bins];
    let mut count_b = vec![0usize; bins];
    for &(a, b) in &draws {
        let ia = (((a - lo) / bin_width) as usize).min(bins - 1);
        let ib = (((b - lo) / bin_width) as usize).min(bins - 1);
        count_a[ia] += 1;
        count_b[ib] += 1;
    }

    let mut max_ratio: f64 = 1.0;
    for (&ca, &cb) in count_a.iter().zip(&count_b) {
        if ca >= 50 && cb >= 50 {
            let ratio = ca as f64 / cb as f64;
            max_ratio = max_ratio.max(ratio).max(1.0 / ratio);
        }
    }
    Ok(max_ratio)
}

/// Neighbor check: equal shapes, rows differing in exactly one position
/// (identical datasets also pass, for the degenerate-ratio test).
fn ensure_neighbors(a: &Dataset, b: &Dataset) -> Result<()> {
    if a.len() != b.len() || a.dim() != b.dim() {
        return Err(Error::parameter(
            "neighbor datasets must have equal shape",
        ));
    }
    let differing = (0..a.len()).filter(|&i| a.row(i) != b.row(i)).count();
    if differing > 1 {
        return Err(Error::parameter(format!(
            "datasets differ in {differing} rows, neighbors differ in at most one"
        )));
    }
    Ok(())
}
