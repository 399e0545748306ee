//! Property tests for the structural invariants: split disjointness,
//! normalization round trips, sampler determinism, and the perturbed-loss
//! decomposition.

use proptest::prelude::*;

use dpc::autoencoder::AutoencoderSpec;
use dpc::data::{
    make_split_plan, scale_numeric, synth_blobs, unscale_numeric, Dataset, FeatureSchema,
};
use dpc::mechanism::{
    aggregate_coefficients, eta_term, perturb, perturbed_loss, plain_loss, PrivacyBudget,
};
use dpc::numerics::{sample_laplace, Matrix};
use dpc::RngState;

fn uniform_dataset(seed: u64, n: usize, d: usize) -> Dataset {
    let mut rng = RngState::from_seed(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.uniform(-1.0, 1.0)).collect())
        .collect();
    Dataset::new(
        Matrix::from_rows(&rows),
        vec![0; n],
        1,
        FeatureSchema::dense(d, 1),
    )
    .unwrap()
}

proptest! {
    // Four-way splits stay disjoint and balanced across many seeds.
    #![proptest_config(ProptestConfig::with_cases(1000))]
    #[test]
    fn split_plan_disjoint_and_balanced(seed in 0u64..1_000_000, subset in 1usize..25) {
        let data = uniform_dataset(seed, 4 * subset + seed as usize % 7, 3);
        let plan = make_split_plan(&mut RngState::from_seed(seed), &data, subset).unwrap();
        let mut seen = std::collections::HashSet::new();
        for s in &plan.subsets {
            prop_assert!(s.train.len().abs_diff(s.test.len()) <= 1);
            prop_assert_eq!(s.train.len() + s.test.len(), subset);
            for &i in s.train.iter().chain(s.test.iter()) {
                prop_assert!(seen.insert(i), "index {} appeared twice", i);
                prop_assert!(i < data.len());
            }
        }
    }
}

proptest! {
    #[test]
    fn numeric_scaling_round_trips(raw in -1000.0f64..1000.0, lo in -500.0f64..499.0) {
        let hi = lo + 1.0 + raw.abs() % 100.0;
        let (scaled, clamped) = scale_numeric(raw, lo, hi);
        prop_assert!((-1.0..=1.0).contains(&scaled));
        if !clamped {
            let back = unscale_numeric(scaled, lo, hi);
            prop_assert!((back - raw).abs() <= 1e-9 * raw.abs().max(1.0));
        }
    }

    // Already-normalized values are fixed points of the scaling.
    #[test]
    fn normalization_is_idempotent(v in -1.0f64..=1.0) {
        let (scaled, clamped) = scale_numeric(v, -1.0, 1.0);
        prop_assert!(!clamped);
        prop_assert!((scaled - v).abs() < 1e-12);
    }

    #[test]
    fn laplace_streams_are_seed_determined(seed in 0u64..u64::MAX / 2, scale in 0.1f64..50.0) {
        let a = sample_laplace(&mut RngState::from_seed(seed), scale, 64).unwrap();
        let b = sample_laplace(&mut RngState::from_seed(seed), scale, 64).unwrap();
        prop_assert_eq!(a, b);
    }

    // The noise coupling shifts the objective by a batch-independent amount:
    // perturbed - plain is the same for any two batches of one dataset and
    // equals the independently evaluated coupling term.
    #[test]
    fn perturbed_loss_decomposes(seed in 0u64..100_000) {
        let rng = RngState::from_seed(seed);
        let data = synth_blobs(&mut rng.substream("data"), 30, 3, 2, 1.0).unwrap();
        let spec = AutoencoderSpec::new(vec![4, 2]).unwrap();
        let ae = spec.build(data.dim(), &mut rng.substream("net")).unwrap();
        let groups = aggregate_coefficients(&data, spec.width_param()).unwrap();
        let budget = PrivacyBudget::new(0.5, spec.width_param()).unwrap();
        let noisy = perturb(&groups, &budget, &mut rng.substream("noise"));

        let batch_a: Vec<usize> = (0..10).collect();
        let batch_b: Vec<usize> = (30..45).collect();
        let eta = eta_term(&noisy, &ae.net.layers[0].weights);
        for batch in [&batch_a, &batch_b] {
            let (plain, _) = plain_loss(&ae.net, &data, batch).unwrap();
            let (pert, _) = perturbed_loss(&ae.net, &data, batch, &noisy, 1).unwrap();
            prop_assert!(
                ((pert - plain) - eta).abs() <= 1e-9 * eta.abs().max(1.0),
                "batch shift {} vs eta term {}", pert - plain, eta
            );
        }
    }
}
