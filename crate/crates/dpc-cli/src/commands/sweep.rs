//! `dpc sweep`: one full pipeline run per (epsilon, seed) cell, long-format
//! CSV plus per-epsilon aggregates for plotting.

use std::collections::BTreeMap;

use dpc::classifier::{predict_proba, runner_up_class};
use dpc::counterfactual::search_counterfactual;
use dpc::error::Result;
use dpc::exec;
use dpc::RngState;

use crate::config::{fmt_f64, write_metric_csv, ExperimentConfig, MetricRow};

use super::run_owner_pipeline;

fn cell_rows(config: &ExperimentConfig, epsilon: f64, seed: u64) -> Result<Vec<MetricRow>> {
    let pipeline = run_owner_pipeline(config, epsilon, seed)?;
    let dataset_name = config.dataset.name();
    let rng = RngState::from_seed(seed);

    // Query sample for FR/AD.
    let mut order: Vec<usize> = (0..pipeline.dataset.len()).collect();
    rng.substream("queries").shuffle(&mut order);
    let take = config.queries.min(order.len());
    let queries = pipeline.dataset.select(&order[..take]);
    let per_query = config.search.samples_per_query.max(1);

    let search_rng = rng.substream("search");
    let per_query_scores: Vec<Result<(bool, f64)>> = exec::run(queries.len(), |qi| {
        let query = queries.row(qi);
        let probs = predict_proba(&pipeline.target, query)?;
        let cfg = config.search.config(runner_up_class(&probs))?;
        let mut first_flip = false;
        let mut mean_distance = 0.0;
        for k in 0..per_query {
            let mut local = search_rng.fork((qi * per_query + k) as u64);
            let result = search_counterfactual(
                &pipeline.prototypes.prototypes,
                query,
                &pipeline.target,
                &pipeline.autoencoder,
                &cfg,
                &mut local,
            )?;
            if k == 0 {
                first_flip = result.flipped;
            }
            let dist = query
                .iter()
                .zip(&result.sample)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            mean_distance += dist / per_query as f64;
        }
        Ok((first_flip, mean_distance))
    });

    let mut flips = 0usize;
    let mut ad = 0.0;
    for score in per_query_scores {
        let (flip, dist) = score?;
        flips += usize::from(flip);
        ad += dist / queries.len().max(1) as f64;
    }
    let fr = flips as f64 / queries.len().max(1) as f64;

    let row = |metric: &str, value: f64| MetricRow {
        metric: metric.into(),
        dataset: dataset_name.clone(),
        epsilon,
        generator: "dpc".into(),
        scenario: String::new(),
        seed,
        value,
    };
    Ok(vec![
        row("MSE", pipeline.holdout_mse),
        row("FR", fr),
        row("AD", ad),
    ])
}

pub fn run(config: &ExperimentConfig, epsilons: &[f64]) -> Result<()> {
    std::fs::create_dir_all(&config.out_dir)?;
    let epsilons: Vec<f64> = if epsilons.is_empty() {
        config.sweep_epsilons.clone()
    } else {
        epsilons.to_vec()
    };

    let cells: Vec<(f64, u64)> = epsilons
        .iter()
        .flat_map(|&e| config.seeds.iter().map(move |&s| (e, s)))
        .collect();

    // Worker pool over cells; each owns its seed-derived randomness.
    let outcomes: Vec<(f64, u64, Result<Vec<MetricRow>>)> = exec::run(cells.len(), |i| {
        let (epsilon, seed) = cells[i];
        (epsilon, seed, cell_rows(config, epsilon, seed))
    });

    let mut rows: Vec<MetricRow> = Vec::new();
    let mut failures: Vec<String> = Vec::new();
    for (epsilon, seed, outcome) in outcomes {
        match outcome {
            Ok(cell) => rows.extend(cell),
            Err(e) => failures.push(format!("epsilon {epsilon} seed {seed}: {e}")),
        }
    }

    // Long-format sweep file.
    let mut sweep_text = String::from("metric,epsilon,seed,value\n");
    for r in &rows {
        sweep_text.push_str(&format!(
            "{},{},{},{}\n",
            r.metric,
            fmt_f64(r.epsilon),
            r.seed,
            fmt_f64(r.value)
        ));
    }
    std::fs::write(config.out_dir.join("sweep.csv"), sweep_text)?;

    // Full 7-column rows so `report` can consolidate them.
    write_metric_csv(&config.out_dir.join("metrics_sweep.csv"), &rows)?;

    // Per-(metric, epsilon) mean and standard deviation.
    let mut groups: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for r in &rows {
        groups
            .entry((r.metric.clone(), fmt_f64(r.epsilon)))
            .or_default()
            .push(r.value);
    }
    let mut plot_text = String::from("metric,epsilon,mean,std,n\n");
    for ((metric, epsilon), values) in &groups {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        plot_text.push_str(&format!(
            "{metric},{epsilon},{},{},{}\n",
            fmt_f64(mean),
            fmt_f64(var.sqrt()),
            values.len()
        ));
    }
    std::fs::write(config.out_dir.join("plot_data.csv"), plot_text)?;

    if !failures.is_empty() {
        std::fs::write(
            config.out_dir.join("sweep_errors.txt"),
            failures.join("\n") + "\n",
        )?;
        for f in &failures {
            eprintln!("sweep cell failed: {f}");
        }
    }
    println!(
        "swept {} cells ({} failed); wrote {}",
        cells.len(),
        failures.len(),
        config.out_dir.join("sweep.csv").display()
    );
    Ok(())
}
