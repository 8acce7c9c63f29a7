//! Generic image-directory loader: one subdirectory per class, PNG files.

use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};

use super::{resize_bilinear, ImageTensor, LabeledDataset};

/// Load a class-per-subdirectory tree of PNGs, decoding to 3 channels and
/// resizing every image to `(target_height, target_width)` with bilinear
/// interpolation.
///
/// Class indices follow lexicographic subdirectory order and images are
/// ordered by their lexicographically sorted relative paths, so the result is
/// independent of directory-listing order. Undecodable files are skipped with
/// a warning; the warnings are returned alongside the dataset.
pub fn load_image_dir(
    root_path: impl AsRef<Path>,
    target_height: usize,
    target_width: usize,
) -> Result<(LabeledDataset, Vec<String>)> {
    let root = root_path.as_ref();
    if !root.is_dir() {
        return Err(Error::DatasetNotFound { path: root.into() });
    }

    let mut class_dirs: Vec<(String, std::path::PathBuf)> = std::fs::read_dir(root)
        .map_err(|e| Error::io(root, e))?
        .filter_map(|entry| entry.ok())
        .filter(|entry| entry.path().is_dir())
        .map(|entry| (entry.file_name().to_string_lossy().into_owned(), entry.path()))
        .collect();
    class_dirs.sort_by(|a, b| a.0.cmp(&b.0));
    if class_dirs.is_empty() {
        return Err(Error::EmptyDataset {
            context: format!("no class subdirectories under {}", root.display()),
        });
    }

    let mut tasks = Vec::new(); // (class index, relative path, absolute path)
    for (class_index, (class_name, dir)) in class_dirs.iter().enumerate() {
        let mut files: Vec<String> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|entry| entry.ok())
            .filter(|entry| entry.path().is_file())
            .map(|entry| entry.file_name().to_string_lossy().into_owned())
            .filter(|name| name.to_ascii_lowercase().ends_with(".png"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(Error::EmptyClassDir { path: dir.clone() });
        }
        for name in files {
            tasks.push((class_index, format!("{class_name}/{name}"), dir.join(&name)));
        }
    }

    let decoded: Vec<(usize, String, std::result::Result<ImageTensor, String>)> = tasks
        .into_par_iter()
        .map(|(class_index, rel, abs)| {
            let result = decode_png(&abs)
                .and_then(|img| resize_bilinear(&img, target_height, target_width))
                .map_err(|e| format!("skipped {rel}: {e}"));
            (class_index, rel, result)
        })
        .collect();

    let mut images = Vec::new();
    let mut labels = Vec::new();
    let mut ids = Vec::new();
    let mut warnings = Vec::new();
    for (class_index, rel, result) in decoded {
        match result {
            Ok(img) => {
                images.push(img);
                labels.push(class_index);
                ids.push(rel);
            }
            Err(warning) => warnings.push(warning),
        }
    }
    if images.is_empty() {
        return Err(Error::EmptyDataset {
            context: format!("no decodable images under {}", root.display()),
        });
    }

    let class_names = class_dirs.into_iter().map(|(name, _)| name).collect();
    let dataset = LabeledDataset::new(images, labels, class_names, ids)?;
    Ok((dataset, warnings))
}

fn decode_png(path: &Path) -> Result<ImageTensor> {
    let decoded = image::open(path).map_err(|e| Error::FormatError {
        path: path.into(),
        reason: e.to_string(),
    })?;
    let rgb = decoded.into_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let mut pixels = vec![0.0; h * w * 3];
    let plane = h * w;
    for (i, px) in rgb.pixels().enumerate() {
        pixels[i] = f64::from(px.0[0]) / 255.0;
        pixels[plane + i] = f64::from(px.0[1]) / 255.0;
        pixels[2 * plane + i] = f64::from(px.0[2]) / 255.0;
    }
    ImageTensor::new(h, w, 3, pixels)
}
