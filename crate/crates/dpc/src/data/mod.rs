//! Dataset ingestion and the disjoint-subset splits the attack protocol
//! needs. Every feature entry is normalized into [-1, 1]: numeric columns by
//! min-max scaling against schema bounds, categorical columns as one-hot
//! blocks coded +1/-1. That range is what the sensitivity bound assumes.

mod csv_io;
mod idx;
mod synth;

pub use csv_io::load_csv;
pub use idx::load_idx;
pub use synth::synth_blobs;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::rng::RngState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric { min: f64, max: f64 },
    Categorical { values: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

/// Declares how raw columns map onto the encoded feature vector. The label
/// column must be categorical; its value list fixes the class indexing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub columns: Vec<Column>,
    pub label: String,
}

impl FeatureSchema {
    /// Reads a schema from its JSON file.
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let schema: FeatureSchema =
            serde_json::from_str(&text).map_err(|e| Error::Format {
                path: path.display().to_string(),
                detail: e.to_string(),
            })?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("schema serializes");
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let label_col = self
            .columns
            .iter()
            .find(|c| c.name == self.label)
            .ok_or_else(|| {
                Error::parameter(format!("label column '{}' not declared", self.label))
            })?;
        match &label_col.kind {
            ColumnKind::Categorical { values } if values.len() >= 2 => {}
            ColumnKind::Categorical { .. } => {
                return Err(Error::parameter("label column needs at least two values"))
            }
            ColumnKind::Numeric { .. } => {
                return Err(Error::parameter("label column must be categorical"))
            }
        }
        for c in &self.columns {
            if let ColumnKind::Numeric { min, max } = c.kind {
                if !(max > min) {
                    return Err(Error::parameter(format!(
                        "column '{}' has empty numeric range [{min}, {max}]",
                        c.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Feature columns in declaration order, label excluded.
    pub fn feature_columns(&self) -> impl Iterator<Item = &Column> {
        self.columns.iter().filter(move |c| c.name != self.label)
    }

    /// Width of the encoded feature vector.
    pub fn encoded_dim(&self) -> usize {
        self.feature_columns()
            .map(|c| match &c.kind {
                ColumnKind::Numeric { .. } => 1,
                ColumnKind::Categorical { values } => values.len(),
            })
            .sum()
    }

    pub fn class_count(&self) -> usize {
        self.columns
            .iter()
            .find(|c| c.name == self.label)
            .map(|c| match &c.kind {
                ColumnKind::Categorical { values } => values.len(),
                ColumnKind::Numeric { .. } => 0,
            })
            .unwrap_or(0)
    }

    pub fn class_names(&self) -> Vec<String> {
        self.columns
            .iter()
            .find(|c| c.name == self.label)
            .and_then(|c| match &c.kind {
                ColumnKind::Categorical { values } => Some(values.clone()),
                ColumnKind::Numeric { .. } => None,
            })
            .unwrap_or_default()
    }

    /// Offset of a feature column's block in the encoded vector.
    pub fn block_offset(&self, column: &str) -> Option<(usize, usize)> {
        let mut offset = 0;
        for c in self.feature_columns() {
            let width = match &c.kind {
                ColumnKind::Numeric { .. } => 1,
                ColumnKind::Categorical { values } => values.len(),
            };
            if c.name == column {
                return Some((offset, width));
            }
            offset += width;
        }
        None
    }

    /// Synthetic all-numeric schema with bounds [-1, 1], used by the idx and
    /// blob loaders.
    pub fn dense(dim: usize, class_count: usize) -> Self {
        let mut columns: Vec<Column> = (0..dim)
            .map(|i| Column {
                name: format!("f{i}"),
                kind: ColumnKind::Numeric {
                    min: -1.0,
                    max: 1.0,
                },
            })
            .collect();
        columns.push(Column {
            name: "label".into(),
            kind: ColumnKind::Categorical {
                values: (0..class_count).map(|c| c.to_string()).collect(),
            },
        });
        FeatureSchema {
            columns,
            label: "label".into(),
        }
    }
}

/// Scales a raw numeric value into [-1, 1] against schema bounds, clamping
/// out-of-range values. Returns (scaled, clamped?).
pub fn scale_numeric(value: f64, min: f64, max: f64) -> (f64, bool) {
    let scaled = 2.0 * (value - min) / (max - min) - 1.0;
    if scaled < -1.0 {
        (-1.0, true)
    } else if scaled > 1.0 {
        (1.0, true)
    } else {
        (scaled, false)
    }
}

/// Inverse of [`scale_numeric`] for reporting.
pub fn unscale_numeric(scaled: f64, min: f64, max: f64) -> f64 {
    (scaled + 1.0) / 2.0 * (max - min) + min
}

/// A decoded feature value for human-readable output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum DecodedValue {
    Numeric(f64),
    Categorical(String),
}

/// Normalized feature matrix with labels; the unit every stage consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<usize>,
    class_count: usize,
    schema: FeatureSchema,
}

impl Dataset {
    pub fn new(
        features: Matrix,
        labels: Vec<usize>,
        class_count: usize,
        schema: FeatureSchema,
    ) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::structural(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        const TOL: f64 = 1e-9;
        if features
            .as_slice()
            .iter()
            .any(|v| !v.is_finite() || v.abs() > 1.0 + TOL)
        {
            return Err(Error::parameter(
                "feature entries must be finite and lie in [-1, 1]",
            ));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_count) {
            return Err(Error::parameter(format!(
                "label {bad} out of range for {class_count} classes"
            )));
        }
        Ok(Dataset {
            features,
            labels,
            class_count,
            schema,
        })
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Copies the given rows into a new dataset.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let rows: Vec<Vec<f64>> = indices.iter().map(|&i| self.row(i).to_vec()).collect();
        let labels: Vec<usize> = indices.iter().map(|&i| self.labels[i]).collect();
        Dataset {
            features: if rows.is_empty() {
                Matrix::zeros(0, self.dim())
            } else {
                Matrix::from_rows(&rows)
            },
            labels,
            class_count: self.class_count,
            schema: self.schema.clone(),
        }
    }

    /// Decodes an encoded feature vector back to schema space: inverse
    /// min-max for numerics, argmax over each one-hot block.
    pub fn decode_row(schema: &FeatureSchema, encoded: &[f64]) -> Vec<(String, DecodedValue)> {
        let mut out = Vec::new();
        let mut offset = 0;
        for c in schema.feature_columns() {
            match &c.kind {
                ColumnKind::Numeric { min, max } => {
                    out.push((
                        c.name.clone(),
                        DecodedValue::Numeric(unscale_numeric(encoded[offset], *min, *max)),
                    ));
                    offset += 1;
                }
                ColumnKind::Categorical { values } => {
                    let block = &encoded[offset..offset + values.len()];
                    let best = block
                        .iter()
                        .enumerate()
                        .max_by(|a, b| a.1.total_cmp(b.1))
                        .map(|(i, _)| i)
                        .unwrap_or(0);
                    out.push((
                        c.name.clone(),
                        DecodedValue::Categorical(values[best].clone()),
                    ));
                    offset += values.len();
                }
            }
        }
        out
    }
}

/// Four pairwise-disjoint subsets of a parent dataset, each split 50/50 into
/// train and test halves. One subset trains the target model; the other
/// three belong to the adversary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub subsets: Vec<SubsetSplit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetSplit {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

pub const SPLIT_COUNT: usize = 4;

/// Samples four disjoint subsets of `subset_size` rows and halves each.
pub fn make_split_plan(rng: &mut RngState, dataset: &Dataset, subset_size: usize) -> Result<SplitPlan> {
    if subset_size == 0 {
        return Err(Error::parameter("subset_size must be positive"));
    }
    let needed = SPLIT_COUNT * subset_size;
    if needed > dataset.len() {
        return Err(Error::parameter(format!(
            "need {needed} rows for four subsets of {subset_size}, dataset has {}",
            dataset.len()
        )));
    }
    let mut indices: Vec<usize> = (0..dataset.len()).collect();
    rng.shuffle(&mut indices);
    let subsets = (0..SPLIT_COUNT)
        .map(|s| {
            let chunk = &indices[s * subset_size..(s + 1) * subset_size];
            let train_len = subset_size / 2;
            SubsetSplit {
                train: chunk[..train_len].to_vec(),
                test: chunk[train_len..].to_vec(),
            }
        })
        .collect();
    Ok(SplitPlan { subsets })
}
