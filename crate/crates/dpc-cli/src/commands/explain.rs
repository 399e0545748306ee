//! `dpc explain`: derive counterfactuals for a query set from stored
//! artifacts, then report the flipping ratio and average distance.

use std::path::Path;

use serde::{Deserialize, Serialize};

use dpc::classifier::{predict_label, predict_proba, runner_up_class};
use dpc::counterfactual::search_counterfactual;
use dpc::data::{load_csv, Dataset, FeatureSchema};
use dpc::error::{Error, Result};
use dpc::exec;
use dpc::model_io;
use dpc::RngState;

use crate::config::{write_metric_csv, ExperimentConfig, MetricRow};

use super::ArtifactPaths;

/// One stored counterfactual; FR and AD are recomputable from these records
/// alone.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CounterfactualRecord {
    pub query_index: usize,
    pub sample_index: usize,
    pub query: Vec<f64>,
    pub sample: Vec<f64>,
    pub predicted_class: usize,
    pub target_class: usize,
    pub flipped: bool,
    pub distance: f64,
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// FR over the first sample of each query, AD over all samples.
pub fn scores_from_records(records: &[CounterfactualRecord]) -> (f64, f64) {
    let query_count = records
        .iter()
        .map(|r| r.query_index)
        .max()
        .map_or(0, |m| m + 1);
    let flips = records
        .iter()
        .filter(|r| r.sample_index == 0 && r.flipped)
        .count();
    let fr = flips as f64 / query_count.max(1) as f64;

    let mut ad = 0.0;
    for q in 0..query_count {
        let of_query: Vec<&CounterfactualRecord> =
            records.iter().filter(|r| r.query_index == q).collect();
        let mean: f64 =
            of_query.iter().map(|r| r.distance).sum::<f64>() / of_query.len().max(1) as f64;
        ad += mean / query_count as f64;
    }
    (fr, ad)
}

fn load_queries(
    config: &ExperimentConfig,
    queries_path: Option<&Path>,
    rng: &RngState,
) -> Result<Dataset> {
    match queries_path {
        Some(path) => {
            if !path.exists() {
                return Err(Error::parameter(format!(
                    "queries file not found: {}",
                    path.display()
                )));
            }
            let schema_path = match &config.dataset {
                crate::config::DatasetSource::Csv { schema, .. } => schema.clone(),
                _ => {
                    return Err(Error::parameter(
                        "a queries file needs a csv dataset source (for its schema)",
                    ))
                }
            };
            let schema = FeatureSchema::load(&schema_path)?;
            Ok(load_csv(path, &schema)?.0)
        }
        None => {
            let data = config.dataset.load(rng)?;
            let mut order: Vec<usize> = (0..data.len()).collect();
            rng.substream("queries").shuffle(&mut order);
            let take = config.queries.min(order.len());
            Ok(data.select(&order[..take]))
        }
    }
}

pub fn run(config: &ExperimentConfig, queries_path: Option<&Path>) -> Result<()> {
    std::fs::create_dir_all(&config.out_dir)?;
    for &seed in &config.seeds {
        let paths = ArtifactPaths::new(&config.out_dir, seed);
        ArtifactPaths::require(&paths.model)?;
        ArtifactPaths::require(&paths.prototypes)?;
        ArtifactPaths::require(&paths.target)?;

        let autoencoder = model_io::load_model(&paths.model)?.into_autoencoder()?;
        let prototypes = model_io::load_prototypes(&paths.prototypes)?;
        let target = model_io::load_model(&paths.target)?.net;

        let rng = RngState::from_seed(seed);
        let queries = load_queries(config, queries_path, &rng)?;
        let per_query = config.search.samples_per_query.max(1);

        let search_rng = rng.substream("search");
        let records: Vec<Result<Vec<CounterfactualRecord>>> =
            exec::run(queries.len(), |qi| {
                let query = queries.row(qi);
                let probs = predict_proba(&target, query)?;
                let target_class = runner_up_class(&probs);
                let cfg = config.search.config(target_class)?;
                let mut out = Vec::with_capacity(per_query);
                for k in 0..per_query {
                    let mut local = search_rng.fork((qi * per_query + k) as u64);
                    let result = search_counterfactual(
                        &prototypes,
                        query,
                        &target,
                        &autoencoder,
                        &cfg,
                        &mut local,
                    )?;
                    out.push(CounterfactualRecord {
                        query_index: qi,
                        sample_index: k,
                        query: query.to_vec(),
                        distance: euclidean(query, &result.sample),
                        predicted_class: predict_label(&target, &result.sample)?,
                        target_class,
                        flipped: result.flipped,
                        sample: result.sample,
                    });
                }
                Ok(out)
            });
        let records: Vec<CounterfactualRecord> = {
            let mut flat = Vec::new();
            for r in records {
                flat.extend(r?);
            }
            flat
        };

        let cf_path = config.out_dir.join(format!("counterfactuals_s{seed}.json"));
        std::fs::write(
            &cf_path,
            serde_json::to_string_pretty(&records).expect("records serialize"),
        )?;

        let (fr, ad) = scores_from_records(&records);
        let dataset = config.dataset.name();
        let rows = vec![
            MetricRow {
                metric: "FR".into(),
                dataset: dataset.clone(),
                epsilon: config.epsilon,
                generator: "dpc".into(),
                scenario: String::new(),
                seed,
                value: fr,
            },
            MetricRow {
                metric: "AD".into(),
                dataset,
                epsilon: config.epsilon,
                generator: "dpc".into(),
                scenario: String::new(),
                seed,
                value: ad,
            },
        ];
        write_metric_csv(
            &config.out_dir.join(format!("metrics_explain_s{seed}.csv")),
            &rows,
        )?;
        println!(
            "seed {seed}: FR = {fr:.4}, AD = {ad:.4} over {} queries ({} samples each) -> {}",
            queries.len(),
            per_query,
            cf_path.display()
        );
    }
    Ok(())
}
