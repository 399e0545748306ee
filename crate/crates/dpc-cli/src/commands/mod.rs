//! Subcommand implementations.

pub mod attack;
pub mod explain;
pub mod report;
pub mod sweep;
pub mod train_ae;

use std::path::{Path, PathBuf};

use dpc::autoencoder::{build_prototypes, train_autoencoder, Autoencoder, PrototypeSet};
use dpc::classifier::train_classifier;
use dpc::data::Dataset;
use dpc::error::{Error, Result};
use dpc::mechanism::{NoisyCoefficients, PrivacyBudget};
use dpc::model_io::{self, ModelFile};
use dpc::numerics::{DenseNet, OptimizerKind};
use dpc::RngState;

use crate::config::ExperimentConfig;

/// Canonical artifact locations for one (out_dir, seed) pair.
pub struct ArtifactPaths {
    pub model: PathBuf,
    pub prototypes: PathBuf,
    pub noise: PathBuf,
    pub target: PathBuf,
}

impl ArtifactPaths {
    pub fn new(out_dir: &Path, seed: u64) -> Self {
        ArtifactPaths {
            model: out_dir.join(format!("model_s{seed}.json")),
            prototypes: out_dir.join(format!("prototypes_s{seed}.json")),
            noise: out_dir.join(format!("noise_s{seed}.json")),
            target: out_dir.join(format!("target_s{seed}.json")),
        }
    }

    pub fn require(path: &Path) -> Result<()> {
        if path.exists() {
            Ok(())
        } else {
            Err(Error::parameter(format!(
                "required artifact not found: {} (run train-ae first)",
                path.display()
            )))
        }
    }
}

/// Everything the model owner produces in one run.
pub struct OwnerPipeline {
    pub dataset: Dataset,
    pub autoencoder: Autoencoder,
    pub noise: NoisyCoefficients,
    pub prototypes: PrototypeSet,
    pub target: DenseNet,
    pub holdout_mse: f64,
}

/// Trains the autoencoder under the configured budget, builds prototypes,
/// and trains the target classifier, all from one seed.
pub fn run_owner_pipeline(
    config: &ExperimentConfig,
    epsilon: f64,
    seed: u64,
) -> Result<OwnerPipeline> {
    let rng = RngState::from_seed(seed);
    let dataset = config.dataset.load(&rng)?;

    let spec = config.autoencoder.spec()?;
    let budget = PrivacyBudget::new(epsilon, spec.width_param())?;
    let (autoencoder, noise, report) = train_autoencoder(
        &spec,
        &dataset,
        &budget,
        &config.autoencoder.settings(),
        &rng.substream("autoencoder"),
    )?;
    let prototypes = build_prototypes(&autoencoder, &dataset)?;
    if !prototypes.missing_classes.is_empty() {
        eprintln!(
            "warning: no training members for classes {:?}; prototypes omitted",
            prototypes.missing_classes
        );
    }

    let cls_spec = config.classifier.spec(dataset.class_count())?;
    let (target, _) = train_classifier(
        &cls_spec,
        &dataset,
        config.classifier.epochs,
        config.classifier.batch_size,
        OptimizerKind::Adam { lr: 1e-3 },
        &rng.substream("target"),
    )?;

    Ok(OwnerPipeline {
        dataset,
        autoencoder,
        noise,
        prototypes,
        target,
        holdout_mse: report.holdout_mse,
    })
}

/// Writes the owner's release bundle to disk.
pub fn save_owner_artifacts(pipeline: &OwnerPipeline, paths: &ArtifactPaths) -> Result<()> {
    model_io::save_noise_record(&pipeline.noise, &paths.noise)?;
    let noise_ref = paths
        .noise
        .file_name()
        .map(|n| n.to_string_lossy().into_owned());
    model_io::save_model(
        &ModelFile::for_autoencoder(&pipeline.autoencoder, noise_ref),
        &paths.model,
    )?;
    model_io::save_prototypes(&pipeline.prototypes.prototypes, &paths.prototypes)?;
    model_io::save_model(&ModelFile::for_classifier(pipeline.target.clone()), &paths.target)?;
    Ok(())
}
