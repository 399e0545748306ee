//! Experiment configuration (one JSON file, flag overrides win) and the
//! metric-row CSV format shared by every subcommand.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use dpc::autoencoder::{AutoencoderSpec, TrainSettings};
use dpc::classifier::ClassifierSpec;
use dpc::counterfactual::SearchConfig;
use dpc::data::{load_csv, load_idx, synth_blobs, Dataset, FeatureSchema};
use dpc::error::{Error, Result};
use dpc::numerics::Activation;
use dpc::RngState;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSource {
    Synth {
        n_per_class: usize,
        dim: usize,
        classes: usize,
        separation: f64,
    },
    Csv {
        path: PathBuf,
        schema: PathBuf,
    },
    Idx {
        images: PathBuf,
        labels: PathBuf,
    },
}

impl DatasetSource {
    /// Loads or generates the dataset; synth sources draw from the seed's
    /// "data" substream.
    pub fn load(&self, rng: &RngState) -> Result<Dataset> {
        match self {
            DatasetSource::Synth {
                n_per_class,
                dim,
                classes,
                separation,
            } => synth_blobs(
                &mut rng.substream("data"),
                *n_per_class,
                *dim,
                *classes,
                *separation,
            ),
            DatasetSource::Csv { path, schema } => {
                if !schema.exists() {
                    return Err(Error::parameter(format!(
                        "schema file not found: {}",
                        schema.display()
                    )));
                }
                if !path.exists() {
                    return Err(Error::parameter(format!(
                        "dataset file not found: {}",
                        path.display()
                    )));
                }
                let schema = FeatureSchema::load(schema)?;
                let (data, stats) = load_csv(path, &schema)?;
                if stats.clamped > 0 {
                    eprintln!(
                        "warning: {} out-of-bounds numeric values clamped into [-1, 1]",
                        stats.clamped
                    );
                }
                Ok(data)
            }
            DatasetSource::Idx { images, labels } => load_idx(images, labels),
        }
    }

    pub fn name(&self) -> String {
        match self {
            DatasetSource::Synth { dim, classes, .. } => format!("synth_d{dim}_c{classes}"),
            DatasetSource::Csv { path, .. } => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "csv".into()),
            DatasetSource::Idx { images, .. } => images
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "idx".into()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AutoencoderConfig {
    pub encoder_widths: Vec<usize>,
    #[serde(default = "default_ae_epochs")]
    pub epochs: usize,
    #[serde(default = "default_ae_batch")]
    pub batch_size: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
}

fn default_ae_epochs() -> usize {
    150
}
fn default_ae_batch() -> usize {
    64
}
fn default_lr() -> f64 {
    0.01
}

impl AutoencoderConfig {
    pub fn spec(&self) -> Result<AutoencoderSpec> {
        AutoencoderSpec::new(self.encoder_widths.clone())
    }

    pub fn settings(&self) -> TrainSettings {
        TrainSettings::new(self.epochs, self.batch_size).with_learning_rate(self.learning_rate)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub hidden: Vec<usize>,
    #[serde(default = "default_activation")]
    pub activation: Activation,
    #[serde(default = "default_cls_epochs")]
    pub epochs: usize,
    #[serde(default = "default_cls_batch")]
    pub batch_size: usize,
}

fn default_activation() -> Activation {
    Activation::Tanh
}
fn default_cls_epochs() -> usize {
    100
}
fn default_cls_batch() -> usize {
    64
}

impl ClassifierConfig {
    pub fn spec(&self, class_count: usize) -> Result<ClassifierSpec> {
        ClassifierSpec::new(self.hidden.clone(), self.activation, class_count)
    }
}

/// Search settings: a named preset or explicit coefficients.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchSettings {
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_step")]
    pub step_size: f64,
    /// Counterfactuals per query for AD reporting.
    #[serde(default = "default_samples_per_query")]
    pub samples_per_query: usize,
}

fn default_iterations() -> usize {
    500
}
fn default_step() -> f64 {
    0.05
}
fn default_samples_per_query() -> usize {
    10
}

impl Default for SearchSettings {
    fn default() -> Self {
        SearchSettings {
            preset: Some("mixed".into()),
            alpha: None,
            beta: None,
            gamma: None,
            iterations: default_iterations(),
            step_size: default_step(),
            samples_per_query: default_samples_per_query(),
        }
    }
}

impl SearchSettings {
    pub fn config(&self, target_class: usize) -> Result<SearchConfig> {
        let base = match (self.preset.as_deref(), self.alpha, self.beta, self.gamma) {
            (_, Some(a), Some(b), Some(g)) => SearchConfig::new(a, b, g, target_class)?,
            (Some("mixed") | None, ..) => SearchConfig::mixed(target_class),
            (Some("image"), ..) => SearchConfig::image(target_class),
            (Some("binary"), ..) => SearchConfig::binary(target_class),
            (Some(other), ..) => {
                return Err(Error::parameter(format!(
                    "unknown search preset '{other}' (expected mixed, image, or binary)"
                )))
            }
        };
        Ok(base.with_iterations(self.iterations, self.step_size))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub autoencoder: AutoencoderConfig,
    pub classifier: ClassifierConfig,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub search: SearchSettings,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Number of explanation queries for FR/AD evaluation.
    #[serde(default = "default_queries")]
    pub queries: usize,
    /// Subset size for the four-way attack split.
    #[serde(default)]
    pub subset_size: Option<usize>,
    /// Query-set sizes for the extraction sweep.
    #[serde(default = "default_query_sizes")]
    pub query_sizes: Vec<usize>,
    /// Counterfactuals per query in transfer sets.
    #[serde(default = "default_per_query")]
    pub per_query: usize,
    /// Sensitive attribute for attribute-inference attacks.
    #[serde(default)]
    pub attribute: Option<String>,
    /// Budgets for the sweep subcommand.
    #[serde(default = "default_sweep_epsilons")]
    pub sweep_epsilons: Vec<f64>,
}

fn default_epsilon() -> f64 {
    1.0
}
fn default_seeds() -> Vec<u64> {
    vec![1]
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("runs")
}
fn default_queries() -> usize {
    500
}
fn default_query_sizes() -> Vec<usize> {
    vec![250, 500, 1000, 2000]
}
fn default_per_query() -> usize {
    1
}
fn default_sweep_epsilons() -> Vec<f64> {
    vec![0.005, 0.05, 0.5, 5.0]
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::parameter(format!(
                "config file not found: {}",
                path.display()
            )));
        }
        let text = std::fs::read_to_string(path)?;
        let config: ExperimentConfig = serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::parameter(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::parameter("seeds list must not be empty"));
        }
        Ok(())
    }
}

/// One emitted measurement, traceable to its (configuration, seed) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub metric: String,
    pub dataset: String,
    pub epsilon: f64,
    pub generator: String,
    pub scenario: String,
    pub seed: u64,
    pub value: f64,
}

pub const CSV_HEADER: &str = "metric,dataset,epsilon,generator,scenario,seed,value";

/// 17 significant digits, enough to reproduce any f64 exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

impl MetricRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.metric,
            self.dataset,
            fmt_f64(self.epsilon),
            self.generator,
            self.scenario,
            self.seed,
            fmt_f64(self.value)
        )
    }

    pub fn parse_csv_line(line: &str) -> Option<MetricRow> {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 7 {
            return None;
        }
        Some(MetricRow {
            metric: parts[0].into(),
            dataset: parts[1].into(),
            epsilon: parts[2].parse().ok()?,
            generator: parts[3].into(),
            scenario: parts[4].into(),
            seed: parts[5].parse().ok()?,
            value: parts[6].parse().ok()?,
        })
    }
}

/// Writes a metric CSV (header plus rows) atomically enough for reruns to be
/// byte-identical.
pub fn write_metric_csv(path: &Path, rows: &[MetricRow]) -> Result<()> {
    let mut text = String::from(CSV_HEADER);
    text.push('\n');
    for row in rows {
        text.push_str(&row.csv_line());
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}
