//! CSV ingestion against a declared schema.

use std::path::Path;

use super::{scale_numeric, ColumnKind, Dataset, FeatureSchema};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Warning counters from one ingestion run.
#[derive(Debug, Default, Clone, Copy)]
pub struct IngestStats {
    /// Numeric values outside schema bounds, clamped into [-1, 1].
    pub clamped: usize,
}

/// Loads a header-carrying CSV and encodes it per the schema: numerics
/// min-max scaled into [-1, 1], categoricals one-hot with hot = 1, cold = -1.
pub fn load_csv(path: &Path, schema: &FeatureSchema) -> Result<(Dataset, IngestStats)> {
    schema.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Format {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;

    let headers = reader
        .headers()
        .map_err(|e| Error::Format {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?
        .clone();

    // Map each schema column to its position in the file.
    let mut positions = Vec::with_capacity(schema.columns.len());
    for col in &schema.columns {
        let pos = headers.iter().position(|h| h == col.name).ok_or_else(|| {
            Error::Ingestion {
                location: format!("{}:header", path.display()),
                detail: format!("schema column '{}' missing from header", col.name),
            }
        })?;
        positions.push(pos);
    }

    let class_names = schema.class_names();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    let mut stats = IngestStats::default();

    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Ingestion {
            location: format!("{}:{}", path.display(), row_idx + 2),
            detail: e.to_string(),
        })?;
        let mut encoded = Vec::with_capacity(schema.encoded_dim());
        let mut label = None;

        for (col, &pos) in schema.columns.iter().zip(&positions) {
            let raw = record.get(pos).unwrap_or("").trim();
            let location = || format!("{}:{} column '{}'", path.display(), row_idx + 2, col.name);

            if col.name == schema.label {
                let idx = class_names.iter().position(|v| v == raw).ok_or_else(|| {
                    Error::Ingestion {
                        location: location(),
                        detail: format!("unknown label value '{raw}'"),
                    }
                })?;
                label = Some(idx);
                continue;
            }

            match &col.kind {
                ColumnKind::Numeric { min, max } => {
                    let value: f64 = raw.parse().map_err(|_| Error::Ingestion {
                        location: location(),
                        detail: format!("cannot parse '{raw}' as a number"),
                    })?;
                    let (scaled, clamped) = scale_numeric(value, *min, *max);
                    if clamped {
                        stats.clamped += 1;
                    }
                    encoded.push(scaled);
                }
                ColumnKind::Categorical { values } => {
                    let hot = values.iter().position(|v| v == raw).ok_or_else(|| {
                        Error::Ingestion {
                            location: location(),
                            detail: format!("unknown categorical value '{raw}'"),
                        }
                    })?;
                    for i in 0..values.len() {
                        encoded.push(if i == hot { 1.0 } else { -1.0 });
                    }
                }
            }
        }

        rows.push(encoded);
        labels.push(label.expect("label column visited"));
    }

    if rows.is_empty() {
        return Err(Error::Ingestion {
            location: path.display().to_string(),
            detail: "file contains no data rows".into(),
        });
    }

    let dataset = Dataset::new(
        Matrix::from_rows(&rows),
        labels,
        schema.class_count(),
        schema.clone(),
    )?;
    Ok((dataset, stats))
}
