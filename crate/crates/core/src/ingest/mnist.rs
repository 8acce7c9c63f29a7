//! MNIST IDX format parser (big-endian headers, unsigned pixel bytes).

use std::path::Path;

use crate::error::{Error, Result};

use super::{ImageTensor, LabeledDataset};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::DatasetNotFound { path: path.into() }
        } else {
            Error::io(path, e)
        }
    })
}

fn read_u32_be(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::FormatError {
            path: path.into(),
            reason: "file too short for IDX header".into(),
        })
}

/// Load an MNIST-style image/label file pair into 28x28x1 tensors
/// (or whatever row/column counts the image header declares).
pub fn load_mnist(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let images_path = images_path.as_ref();
    let labels_path = labels_path.as_ref();

    let image_bytes = read_file(images_path)?;
    let magic = read_u32_be(&image_bytes, 0, images_path)?;
    if magic != IMAGES_MAGIC {
        return Err(Error::FormatError {
            path: images_path.into(),
            reason: format!("magic 0x{magic:08x}, expected 0x{IMAGES_MAGIC:08x} for an images file"),
        });
    }
    let count = read_u32_be(&image_bytes, 4, images_path)? as usize;
    let rows = read_u32_be(&image_bytes, 8, images_path)? as usize;
    let cols = read_u32_be(&image_bytes, 12, images_path)? as usize;
    let expected = 16 + count * rows * cols;
    if image_bytes.len() != expected {
        return Err(Error::FormatError {
            path: images_path.into(),
            reason: format!("file size {} != header-implied {expected}", image_bytes.len()),
        });
    }

    let label_bytes = read_file(labels_path)?;
    let magic = read_u32_be(&label_bytes, 0, labels_path)?;
    if magic != LABELS_MAGIC {
        return Err(Error::FormatError {
            path: labels_path.into(),
            reason: format!("magic 0x{magic:08x}, expected 0x{LABELS_MAGIC:08x} for a labels file"),
        });
    }
    let label_count = read_u32_be(&label_bytes, 4, labels_path)? as usize;
    if label_bytes.len() != 8 + label_count {
        return Err(Error::FormatError {
            path: labels_path.into(),
            reason: format!(
                "file size {} != header-implied {}",
                label_bytes.len(),
                8 + label_count
            ),
        });
    }
    if label_count != count {
        return Err(Error::InconsistentPair {
            reason: format!("{count} images but {label_count} labels"),
        });
    }

    let stem = images_path
        .file_stem()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "mnist".into());
    let pixels_per_image = rows * cols;
    let mut images = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    let mut ids = Vec::with_capacity(count);
    for i in 0..count {
        let start = 16 + i * pixels_per_image;
        let pixels: Vec<f64> = image_bytes[start..start + pixels_per_image]
            .iter()
            .map(|&b| f64::from(b) / 255.0)
            .collect();
        images.push(ImageTensor {
            height: rows,
            width: cols,
            channels: 1,
            pixels,
        });
        let label = usize::from(label_bytes[8 + i]);
        if label > 9 {
            return Err(Error::CorruptRecord {
                path: labels_path.into(),
                index: i,
                reason: format!("label byte {label} > 9"),
            });
        }
        labels.push(label);
        ids.push(format!("{stem}:{i}"));
    }

    LabeledDataset::new(
        images,
        labels,
        (0..10).map(|d| d.to_string()).collect(),
        ids,
    )
}
