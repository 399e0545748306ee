//! End-to-end tests of the `dpc` binary via its public interface.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dpc"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dpc_cli_{tag}_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, out_dir: &Path) -> PathBuf {
    let config = serde_json::json!({
        "dataset": {"kind": "synth", "n_per_class": 150, "dim": 4, "classes": 2, "separation": 1.5},
        "autoencoder": {"encoder_widths": [5, 3], "epochs": 40, "batch_size": 32},
        "classifier": {"hidden": [8], "activation": "tanh", "epochs": 30, "batch_size": 32},
        "epsilon": 2.0,
        "search": {"preset": "mixed", "iterations": 80, "step_size": 0.05, "samples_per_query": 2},
        "seeds": [7],
        "queries": 40,
        "out_dir": out_dir,
    });
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn train_ae_is_byte_identical_across_reruns() {
    let dir = temp_dir("train");
    let out_dir = dir.join("runs");
    let config = write_config(&dir, &out_dir);

    run_ok(bin().args(["train-ae", "--config"]).arg(&config));
    let model = out_dir.join("model_s7.json");
    let first = std::fs::read(&model).unwrap();
    let first_metrics = std::fs::read(out_dir.join("metrics_train_ae_s7.csv")).unwrap();

    run_ok(bin().args(["train-ae", "--config"]).arg(&config));
    let second = std::fs::read(&model).unwrap();
    let second_metrics = std::fs::read(out_dir.join("metrics_train_ae_s7.csv")).unwrap();

    assert_eq!(first, second, "model file changed across identical reruns");
    assert_eq!(first_metrics, second_metrics);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn missing_config_file_exits_2() {
    let out = bin()
        .args(["train-ae", "--config", "/nonexistent/config.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("/nonexistent/config.json"),
        "stderr must name the path: {stderr}"
    );
}

#[test]
fn missing_schema_file_exits_2_naming_path() {
    let dir = temp_dir("schema");
    let out_dir = dir.join("runs");
    let config = write_config(&dir, &out_dir);
    let out = bin()
        .args(["train-ae", "--config"])
        .arg(&config)
        .args(["--dataset", "data.csv", "--schema", "/missing/schema.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("/missing/schema.json"), "stderr: {stderr}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn explain_requires_artifacts_then_reports_scores() {
    let dir = temp_dir("explain");
    let out_dir = dir.join("runs");
    let config = write_config(&dir, &out_dir);

    // Without artifacts: exit 2 naming the missing file.
    let out = bin().args(["explain", "--config"]).arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("model_s7.json"));

    run_ok(bin().args(["train-ae", "--config"]).arg(&config));
    let out = run_ok(bin().args(["explain", "--config"]).arg(&config));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("FR ="), "stdout: {stdout}");

    // FR and AD recomputed from the stored counterfactual file match the
    // emitted metric rows exactly.
    let records: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out_dir.join("counterfactuals_s7.json")).unwrap(),
    )
    .unwrap();
    let records = records.as_array().unwrap();
    let query_count = 1 + records
        .iter()
        .map(|r| r["query_index"].as_u64().unwrap())
        .max()
        .unwrap();
    let flips = records
        .iter()
        .filter(|r| r["sample_index"] == 0 && r["flipped"] == true)
        .count();
    let fr_expected = flips as f64 / query_count as f64;

    let mut ad_expected = 0.0;
    for q in 0..query_count {
        let of_query: Vec<&serde_json::Value> = records
            .iter()
            .filter(|r| r["query_index"].as_u64().unwrap() == q)
            .collect();
        let mean = of_query
            .iter()
            .map(|r| r["distance"].as_f64().unwrap())
            .sum::<f64>()
            / of_query.len() as f64;
        ad_expected += mean / query_count as f64;
    }

    let metrics = std::fs::read_to_string(out_dir.join("metrics_explain_s7.csv")).unwrap();
    let mut fr_row = None;
    let mut ad_row = None;
    for line in metrics.lines().skip(1) {
        let parts: Vec<&str> = line.split(',').collect();
        match parts[0] {
            "FR" => fr_row = Some(parts[6].parse::<f64>().unwrap()),
            "AD" => ad_row = Some(parts[6].parse::<f64>().unwrap()),
            _ => {}
        }
    }
    assert_eq!(fr_row.unwrap(), fr_expected);
    assert_eq!(ad_row.unwrap(), ad_expected);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn sweep_aggregates_match_cell_rows() {
    let dir = temp_dir("sweep");
    let out_dir = dir.join("runs");
    let config_value = serde_json::json!({
        "dataset": {"kind": "synth", "n_per_class": 100, "dim": 4, "classes": 2, "separation": 1.5},
        "autoencoder": {"encoder_widths": [4, 2], "epochs": 25, "batch_size": 32},
        "classifier": {"hidden": [6], "activation": "tanh", "epochs": 20, "batch_size": 32},
        "epsilon": 1.0,
        "search": {"preset": "mixed", "iterations": 50, "step_size": 0.05, "samples_per_query": 1},
        "seeds": [1, 2],
        "queries": 20,
        "out_dir": out_dir,
    });
    let config = dir.join("config.json");
    std::fs::write(&config, serde_json::to_string(&config_value).unwrap()).unwrap();

    run_ok(
        bin()
            .args(["sweep", "--config"])
            .arg(&config)
            .args(["--epsilons", "0.05,5.0"]),
    );

    let sweep = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    // 2 epsilons x 2 seeds x 3 metrics.
    assert_eq!(sweep.lines().count(), 1 + 12, "sweep rows:\n{sweep}");

    // Plot-data means equal the arithmetic mean of the matching sweep rows.
    let mut rows: Vec<(String, f64, f64)> = Vec::new();
    for line in sweep.lines().skip(1) {
        let parts: Vec<&str> = line.split(',').collect();
        rows.push((
            parts[0].to_string(),
            parts[1].parse().unwrap(),
            parts[3].parse().unwrap(),
        ));
    }
    let plot = std::fs::read_to_string(out_dir.join("plot_data.csv")).unwrap();
    let mut checked = 0;
    for line in plot.lines().skip(1) {
        let parts: Vec<&str> = line.split(',').collect();
        let (metric, epsilon) = (parts[0], parts[1].parse::<f64>().unwrap());
        let mean: f64 = parts[2].parse().unwrap();
        let n: usize = parts[4].parse().unwrap();
        let matching: Vec<f64> = rows
            .iter()
            .filter(|(m, e, _)| m == metric && *e == epsilon)
            .map(|(_, _, v)| *v)
            .collect();
        assert_eq!(matching.len(), n);
        let expected = matching.iter().sum::<f64>() / n as f64;
        assert!(
            (mean - expected).abs() < 1e-12,
            "{metric}@{epsilon}: plot mean {mean} vs rows {expected}"
        );
        checked += 1;
    }
    assert_eq!(checked, 6);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn attack_without_a_viable_split_exits_2() {
    let dir = temp_dir("attack_split");
    let out_dir = dir.join("runs");
    let config_value = serde_json::json!({
        "dataset": {"kind": "synth", "n_per_class": 50, "dim": 4, "classes": 2, "separation": 1.5},
        "autoencoder": {"encoder_widths": [4, 2], "epochs": 5, "batch_size": 16},
        "classifier": {"hidden": [4], "activation": "tanh", "epochs": 5, "batch_size": 16},
        "seeds": [1],
        // Four subsets of 500 cannot come out of 100 rows.
        "subset_size": 500,
        "out_dir": out_dir,
    });
    let config = dir.join("config.json");
    std::fs::write(&config, serde_json::to_string(&config_value).unwrap()).unwrap();
    let out = bin()
        .args(["attack", "--config"])
        .arg(&config)
        .arg("membership")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn attribute_attack_without_categorical_column_exits_2() {
    let dir = temp_dir("attack_attr");
    let out_dir = dir.join("runs");
    let config_value = serde_json::json!({
        "dataset": {"kind": "synth", "n_per_class": 100, "dim": 4, "classes": 2, "separation": 1.5},
        "autoencoder": {"encoder_widths": [4, 2], "epochs": 5, "batch_size": 16},
        "classifier": {"hidden": [4], "activation": "tanh", "epochs": 5, "batch_size": 16},
        "seeds": [1],
        "attribute": "race",
        "query_sizes": [50],
        "out_dir": out_dir,
    });
    let config = dir.join("config.json");
    std::fs::write(&config, serde_json::to_string(&config_value).unwrap()).unwrap();
    let out = bin()
        .args(["attack", "--config"])
        .arg(&config)
        .arg("attribute")
        .output()
        .unwrap();
    // Synth schemas carry no categorical feature columns.
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn report_merges_files_idempotently() {
    let dir = temp_dir("report");
    let out_dir = dir.join("runs");
    std::fs::create_dir_all(&out_dir).unwrap();

    // Empty directory: header-only CSV.
    run_ok(bin().arg("report").arg(&out_dir));
    let consolidated = out_dir.join("consolidated.csv");
    let text = std::fs::read_to_string(&consolidated).unwrap();
    assert_eq!(text, "metric,dataset,epsilon,generator,scenario,seed,value\n");

    // Three well-formed metric files, one malformed, one attack report.
    let header = "metric,dataset,epsilon,generator,scenario,seed,value";
    for (i, value) in [0.91, 0.88].iter().enumerate() {
        std::fs::write(
            out_dir.join(format!("metrics_explain_s{i}.csv")),
            format!("{header}\nFR,synth,1.0000000000000000e0,dpc,,{i},{value:.16e}\n"),
        )
        .unwrap();
    }
    std::fs::write(out_dir.join("metrics_broken.csv"), "not,a,header\n1,2,3\n").unwrap();
    let report = serde_json::json!({
        "kind": "extraction",
        "metric": "surrogate_accuracy",
        "value": 0.7,
        "config": {"dataset": "synth", "queries": 250, "epsilon": 0.025,
                    "generator": "non_dp", "scenario": "known_architecture", "seed": 3},
        "per_class": [],
        "details": [],
        "skipped_rows": 0,
    });
    std::fs::write(
        out_dir.join("attack_extract_non_dp_known_q250_s3.json"),
        serde_json::to_string_pretty(&report).unwrap(),
    )
    .unwrap();

    run_ok(bin().arg("report").arg(&out_dir));
    let first = std::fs::read_to_string(&consolidated).unwrap();
    // 2 FR rows + 1 attack row + 1 warning row for the malformed file.
    assert_eq!(first.lines().count(), 1 + 4, "consolidated:\n{first}");
    assert!(first.contains("warning,metrics_broken.csv"));
    assert!(first.contains("surrogate_accuracy"));

    // Idempotent: a second run (which sees its own previous output) is
    // byte-identical.
    run_ok(bin().arg("report").arg(&out_dir));
    let second = std::fs::read_to_string(&consolidated).unwrap();
    assert_eq!(first, second);
    std::fs::remove_dir_all(&dir).ok();
}
