//! `dpc report`: consolidate every metric CSV and attack report under a
//! directory into one stable-ordered CSV.

use std::path::Path;

use dpc::attacks::AttackReport;
use dpc::error::Result;

use crate::config::{MetricRow, CSV_HEADER};

const OUTPUT_NAME: &str = "consolidated.csv";

fn rows_from_csv(text: &str) -> Option<Vec<MetricRow>> {
    let mut lines = text.lines();
    if lines.next()? != CSV_HEADER {
        return None;
    }
    let mut rows = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        rows.push(MetricRow::parse_csv_line(line)?);
    }
    Some(rows)
}

fn row_from_attack_report(text: &str) -> Option<MetricRow> {
    let report: AttackReport = serde_json::from_str(text).ok()?;
    Some(MetricRow {
        metric: report.metric,
        dataset: report.config.dataset,
        epsilon: report.config.epsilon.unwrap_or(f64::INFINITY),
        generator: report.config.generator,
        scenario: report.config.scenario,
        seed: report.config.seed,
        value: report.value,
    })
}

pub fn run(directory: &Path) -> Result<()> {
    if !directory.is_dir() {
        return Err(dpc::error::Error::parameter(format!(
            "not a directory: {}",
            directory.display()
        )));
    }
    let mut names: Vec<_> = std::fs::read_dir(directory)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_file())
        .collect();
    names.sort();

    let mut rows: Vec<MetricRow> = Vec::new();
    for path in &names {
        let name = path.file_name().unwrap_or_default().to_string_lossy();
        if name == OUTPUT_NAME {
            continue;
        }
        match path.extension().and_then(|e| e.to_str()) {
            // Attack campaigns are consolidated from their per-campaign JSON
            // reports; their aggregate CSVs would double-count them.
            Some("csv") if name.starts_with("metrics_") && !name.starts_with("metrics_attack") => {
                let text = std::fs::read_to_string(path)?;
                match rows_from_csv(&text) {
                    Some(parsed) => rows.extend(parsed),
                    None => rows.push(warning_row(&name)),
                }
            }
            Some("json") if name.starts_with("attack_") => {
                let text = std::fs::read_to_string(path)?;
                match row_from_attack_report(&text) {
                    Some(row) => rows.push(row),
                    None => rows.push(warning_row(&name)),
                }
            }
            _ => {}
        }
    }

    rows.sort_by(|a, b| {
        (
            &a.metric, &a.dataset, &a.generator, &a.scenario, a.seed,
        )
            .cmp(&(&b.metric, &b.dataset, &b.generator, &b.scenario, b.seed))
            .then(a.epsilon.total_cmp(&b.epsilon))
            .then(a.value.total_cmp(&b.value))
    });

    let mut text = String::from(CSV_HEADER);
    text.push('\n');
    for row in &rows {
        text.push_str(&row.csv_line());
        text.push('\n');
    }
    let out_path = directory.join(OUTPUT_NAME);
    std::fs::write(&out_path, text)?;
    println!("wrote {} ({} rows)", out_path.display(), rows.len());
    Ok(())
}

fn warning_row(file: &str) -> MetricRow {
    MetricRow {
        metric: "warning".into(),
        dataset: file.into(),
        epsilon: 0.0,
        generator: String::new(),
        scenario: "malformed_file_skipped".into(),
        seed: 0,
        value: 0.0,
    }
}
