//! Laplace sampling by inverse CDF.

use crate::error::{Error, Result};
use crate::rng::RngState;

/// Draws `count` i.i.d. Laplace(0, scale) values.
///
/// Uses the inverse CDF: `u ~ Uniform(-0.5, 0.5)`,
/// `x = -scale * sign(u) * ln(1 - 2|u|)`.
pub fn sample_laplace(rng: &mut RngState, scale: f64, count: usize) -> Result<Vec<f64>> {
    if !(scale > 0.0) {
        return Err(Error::parameter(format!(
            "laplace scale must be positive, got {scale}"
        )));
    }
    Ok((0..count).map(|_| laplace_draw(rng, scale)).collect())
}

pub(crate) fn laplace_draw(rng: &mut RngState, scale: f64) -> f64 {
    let u = rng.next_f64() - 0.5;
    // u = -0.5 exactly would hit ln(0); the clamp keeps the draw finite
    // without disturbing the stream position.
    let t = (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE);
    -scale * u.signum() * t.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_positive_scale() {
        let mut rng = RngState::from_seed(1);
        assert!(sample_laplace(&mut rng, 0.0, 1).is_err());
        assert!(sample_laplace(&mut rng, -2.0, 1).is_err());
    }

    #[test]
    fn median_draw_is_zero() {
        // u = 0 gives x = -b * 0 * ln(1) = 0.
        let u: f64 = 0.0;
        let x = -2.0 * u.signum() * (1.0 - 2.0 * u.abs()).ln();
        assert_eq!(x, 0.0);
    }

    #[test]
    fn moments_match_scale() {
        let mut rng = RngState::from_seed(42);
        let scale = 2.0;
        let draws = sample_laplace(&mut rng, scale, 1_000_000).unwrap();
        let mean: f64 = draws.iter().sum::<f64>() / draws.len() as f64;
        let mean_abs: f64 = draws.iter().map(|v| v.abs()).sum::<f64>() / draws.len() as f64;
        assert!(mean.abs() < 0.02, "mean {mean}");
        // E|X| = b for Laplace(0, b).
        assert!((mean_abs - scale).abs() < 0.02, "mean abs {mean_abs}");
    }

    #[test]
    fn ks_statistic_small_for_most_seeds() {
        // Kolmogorov-Smirnov fit over 10^5 draws, 20 seeds; at least 95%
        // must land under 0.01.
        let scale = 1.7;
        let cdf = |x: f64| {
            if x < 0.0 {
                0.5 * (x / scale).exp()
            } else {
                1.0 - 0.5 * (-x / scale).exp()
            }
        };
        let mut passing = 0;
        for seed in 0..20 {
            let mut rng = RngState::from_seed(1000 + seed);
            let mut draws = sample_laplace(&mut rng, scale, 100_000).unwrap();
            draws.sort_by(f64::total_cmp);
            let n = draws.len() as f64;
            let mut ks: f64 = 0.0;
            for (i, &x) in draws.iter().enumerate() {
                let f = cdf(x);
                ks = ks
                    .max((f - i as f64 / n).abs())
                    .max(((i + 1) as f64 / n - f).abs());
            }
            if ks < 0.01 {
                passing += 1;
            }
        }
        assert!(passing >= 19, "only {passing}/20 seeds passed the KS bound");
    }

    #[test]
    fn same_seed_reproduces_draws() {
        let mut a = RngState::from_seed(99);
        let mut b = RngState::from_seed(99);
        let da = sample_laplace(&mut a, 1.5, 1000).unwrap();
        let db = sample_laplace(&mut b, 1.5, 1000).unwrap();
        assert_eq!(da, db);
    }
}
