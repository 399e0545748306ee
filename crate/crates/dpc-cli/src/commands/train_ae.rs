//! `dpc train-ae`: train the private autoencoder, build prototypes, write
//! the release bundle, and report reconstruction MSE.

use dpc::error::Result;

use crate::config::{write_metric_csv, ExperimentConfig, MetricRow};

use super::{run_owner_pipeline, save_owner_artifacts, ArtifactPaths};

pub fn run(config: &ExperimentConfig) -> Result<()> {
    std::fs::create_dir_all(&config.out_dir)?;
    for &seed in &config.seeds {
        let pipeline = run_owner_pipeline(config, config.epsilon, seed)?;
        let paths = ArtifactPaths::new(&config.out_dir, seed);
        save_owner_artifacts(&pipeline, &paths)?;

        let row = MetricRow {
            metric: "MSE".into(),
            dataset: config.dataset.name(),
            epsilon: config.epsilon,
            generator: String::new(),
            scenario: String::new(),
            seed,
            value: pipeline.holdout_mse,
        };
        write_metric_csv(
            &config.out_dir.join(format!("metrics_train_ae_s{seed}.csv")),
            &[row],
        )?;
        println!(
            "seed {seed}: holdout MSE {:.6} (epsilon {}); artifacts in {}",
            pipeline.holdout_mse,
            config.epsilon,
            config.out_dir.display()
        );
    }
    Ok(())
}
