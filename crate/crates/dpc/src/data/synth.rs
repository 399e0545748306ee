//! Seeded Gaussian blob generator for desk-scale experiments.

use super::{Dataset, FeatureSchema};
use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::rng::RngState;

/// Noise level around each class mean, before clamping into [-1, 1].
pub const BLOB_STD: f64 = 0.3;

/// Draws `n_per_class` samples per class from Gaussian blobs whose means sit
/// at the vertices of a regular simplex with pairwise distance `separation`.
/// Samples clamp into [-1, 1]. Requires `d >= class_count` so the simplex
/// embeds.
pub fn synth_blobs(
    rng: &mut RngState,
    n_per_class: usize,
    d: usize,
    class_count: usize,
    separation: f64,
) -> Result<Dataset> {
    if d < 2 {
        return Err(Error::parameter("blob dimension must be at least 2"));
    }
    if !(separation >= 0.0) {
        return Err(Error::parameter("separation must be non-negative"));
    }
    if class_count < 1 || class_count > d {
        return Err(Error::parameter(format!(
            "class_count {class_count} must be in 1..=d ({d}) for simplex placement"
        )));
    }

    // Simplex vertices: scaled, centered unit basis vectors. The distance
    // between any two means is exactly `separation`.
    let scale = separation / std::f64::consts::SQRT_2;
    let centroid = scale / class_count as f64;
    let mean = |class: usize, dim: usize| -> f64 {
        let vertex = if dim == class { scale } else { 0.0 };
        vertex - if dim < class_count { centroid } else { 0.0 }
    };

    let n = n_per_class * class_count;
    let mut features = Matrix::zeros(n, d);
    let mut labels = Vec::with_capacity(n);
    for class in 0..class_count {
        for s in 0..n_per_class {
            let row = features.row_mut(class * n_per_class + s);
            for (dim, out) in row.iter_mut().enumerate() {
                let v = mean(class, dim) + BLOB_STD * rng.gaussian();
                *out = v.clamp(-1.0, 1.0);
            }
            labels.push(class);
            let _ = s;
        }
    }

    Dataset::new(features, labels, class_count, FeatureSchema::dense(d, class_count))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_dataset() {
        let a = synth_blobs(&mut RngState::from_seed(4), 50, 3, 2, 1.0).unwrap();
        let b = synth_blobs(&mut RngState::from_seed(4), 50, 3, 2, 1.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_separation_collapses_class_means() {
        let data = synth_blobs(&mut RngState::from_seed(4), 400, 2, 2, 0.0).unwrap();
        let mut means = [[0.0; 2]; 2];
        let mut counts = [0usize; 2];
        for i in 0..data.len() {
            let c = data.label(i);
            counts[c] += 1;
            for (m, v) in means[c].iter_mut().zip(data.row(i)) {
                *m += v;
            }
        }
        for c in 0..2 {
            for m in &mut means[c] {
                *m /= counts[c] as f64;
            }
        }
        // Class-conditional distributions are identical up to sampling noise.
        for dim in 0..2 {
            assert!(
                (means[0][dim] - means[1][dim]).abs() < 0.1,
                "means diverged at separation 0: {means:?}"
            );
        }
    }

    #[test]
    fn simplex_means_are_separated() {
        let data = synth_blobs(&mut RngState::from_seed(7), 1000, 4, 3, 1.2).unwrap();
        let d = data.dim();
        let mut means = vec![vec![0.0; d]; 3];
        let mut counts = vec![0usize; 3];
        for i in 0..data.len() {
            let c = data.label(i);
            counts[c] += 1;
            for (m, v) in means[c].iter_mut().zip(data.row(i)) {
                *m += v;
            }
        }
        for c in 0..3 {
            for m in &mut means[c] {
                *m /= counts[c] as f64;
            }
        }
        for a in 0..3 {
            for b in (a + 1)..3 {
                let dist: f64 = means[a]
                    .iter()
                    .zip(&means[b])
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
                // Clamping pulls empirical means slightly inward.
                assert!(
                    (dist - 1.2).abs() < 0.12,
                    "pairwise mean distance {dist} for classes {a},{b}"
                );
            }
        }
    }

    #[test]
    fn rejects_more_classes_than_dims() {
        assert!(synth_blobs(&mut RngState::from_seed(1), 10, 2, 3, 1.0).is_err());
    }
}
