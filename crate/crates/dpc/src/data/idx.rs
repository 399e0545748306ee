//! IDX image/label ingestion (the MNIST byte layout: big-endian magic and
//! dimensions, then raw u8 payload).

use std::path::Path;

use super::{Dataset, FeatureSchema};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

fn read_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    let slice = bytes.get(offset..offset + 4).ok_or_else(|| Error::Ingestion {
        location: format!("{}:byte {offset}", path.display()),
        detail: "file truncated".into(),
    })?;
    Ok(u32::from_be_bytes([slice[0], slice[1], slice[2], slice[3]]))
}

/// Loads an IDX image/label pair; pixels map to [-1, 1] via `x/127.5 - 1`
/// and images flatten row-major.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let image_bytes = std::fs::read(images_path)?;
    let label_bytes = std::fs::read(labels_path)?;

    let magic = read_u32(&image_bytes, 0, images_path)?;
    if magic != IMAGE_MAGIC {
        return Err(Error::Ingestion {
            location: format!("{}:byte 0", images_path.display()),
            detail: format!("bad image magic {magic:#010x}, expected {IMAGE_MAGIC:#010x}"),
        });
    }
    let count = read_u32(&image_bytes, 4, images_path)? as usize;
    let rows = read_u32(&image_bytes, 8, images_path)? as usize;
    let cols = read_u32(&image_bytes, 12, images_path)? as usize;
    let dim = rows * cols;
    let pixel_data = &image_bytes[16..];
    if pixel_data.len() != count * dim {
        return Err(Error::Ingestion {
            location: format!("{}:byte 16", images_path.display()),
            detail: format!(
                "expected {} pixel bytes for {count} images of {rows}x{cols}, found {}",
                count * dim,
                pixel_data.len()
            ),
        });
    }

    let magic = read_u32(&label_bytes, 0, labels_path)?;
    if magic != LABEL_MAGIC {
        return Err(Error::Ingestion {
            location: format!("{}:byte 0", labels_path.display()),
            detail: format!("bad label magic {magic:#010x}, expected {LABEL_MAGIC:#010x}"),
        });
    }
    let label_count = read_u32(&label_bytes, 4, labels_path)? as usize;
    if label_count != count {
        return Err(Error::Ingestion {
            location: format!("{}:byte 4", labels_path.display()),
            detail: format!("{label_count} labels for {count} images"),
        });
    }
    let label_data = label_bytes.get(8..8 + count).ok_or_else(|| Error::Ingestion {
        location: format!("{}:byte 8", labels_path.display()),
        detail: "file truncated".into(),
    })?;

    let mut features = Matrix::zeros(count, dim);
    for (i, chunk) in pixel_data.chunks_exact(dim).enumerate() {
        let row = features.row_mut(i);
        for (out, &px) in row.iter_mut().zip(chunk) {
            *out = f64::from(px) / 127.5 - 1.0;
        }
    }
    let labels: Vec<usize> = label_data.iter().map(|&l| l as usize).collect();
    let class_count = labels.iter().max().map_or(1, |&m| m + 1);

    Dataset::new(
        features,
        labels,
        class_count,
        FeatureSchema::dense(dim, class_count),
    )
}
