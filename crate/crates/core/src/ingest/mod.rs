//! Dataset ingestion: binary CIFAR/MNIST parsers, PNG class directories, and
//! deterministic preprocessing (normalization, grayscale, bilinear resize).
//!
//! All loaders normalize pixels to [0, 1] as byte/255 and keep the on-disk
//! record order. Pixel storage is channel-planar: all of channel 0 row-major,
//! then channel 1, and so on, mirroring the CIFAR binary layout.

mod cifar;
mod image_dir;
mod mnist;

use std::collections::HashSet;

use crate::error::{Error, Result};

pub use cifar::{load_cifar10, load_cifar100, Cifar100LabelMode, Split, CIFAR10_CLASS_NAMES};
pub use image_dir::load_image_dir;
pub use mnist::load_mnist;

/// One image as a normalized floating-point pixel grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    height: usize,
    width: usize,
    channels: usize,
    pixels: Vec<f64>,
}

impl ImageTensor {
    /// Pixels are channel-planar row-major and must lie in [0, 1].
    pub fn new(height: usize, width: usize, channels: usize, pixels: Vec<f64>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::invalid(
                "channels",
                format!("{channels} (expected 1 or 3)"),
            ));
        }
        if pixels.len() != height * width * channels {
            return Err(Error::ShapeMismatch {
                context: "image pixels",
                expected: format!("{} values", height * width * channels),
                actual: format!("{} values", pixels.len()),
            });
        }
        if let Some(bad) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::invalid(
                "pixels",
                format!("value {bad} outside [0, 1]"),
            ));
        }
        Ok(Self {
            height,
            width,
            channels,
            pixels,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    #[inline]
    pub fn channel_plane(&self, channel: usize) -> &[f64] {
        let plane = self.height * self.width;
        &self.pixels[channel * plane..(channel + 1) * plane]
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, channel: usize) -> f64 {
        self.pixels[channel * self.height * self.width + y * self.width + x]
    }
}

/// Ordered images with integer labels, class names, and stable per-image ids.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub images: Vec<ImageTensor>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    pub source_ids: Vec<String>,
}

impl LabeledDataset {
    pub fn new(
        images: Vec<ImageTensor>,
        labels: Vec<usize>,
        class_names: Vec<String>,
        source_ids: Vec<String>,
    ) -> Result<Self> {
        if labels.len() != images.len() || source_ids.len() != images.len() {
            return Err(Error::InconsistentPair {
                reason: format!(
                    "{} images, {} labels, {} ids",
                    images.len(),
                    labels.len(),
                    source_ids.len()
                ),
            });
        }
        if let Some(first) = images.first() {
            let shape = first.shape();
            if let Some(bad) = images.iter().position(|im| im.shape() != shape) {
                return Err(Error::ShapeMismatch {
                    context: "dataset images",
                    expected: format!("{shape:?}"),
                    actual: format!("{:?} at index {bad}", images[bad].shape()),
                });
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::InconsistentPair {
                reason: format!("label {bad} >= {} class names", class_names.len()),
            });
        }
        let mut seen = HashSet::with_capacity(source_ids.len());
        for id in &source_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::InconsistentPair {
                    reason: format!("duplicate source id {id:?}"),
                });
            }
        }
        Ok(Self {
            images,
            labels,
            class_names,
            source_ids,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Shape shared by every image; (0, 0, 0) for an empty dataset.
    pub fn image_shape(&self) -> (usize, usize, usize) {
        self.images.first().map_or((0, 0, 0), ImageTensor::shape)
    }

    /// Subset containing only the images of one class, preserving order,
    /// labels, and source ids.
    pub fn filter_class(&self, class_index: usize) -> Result<Self> {
        if class_index >= self.class_names.len() {
            return Err(Error::invalid(
                "class_filter",
                format!(
                    "index {class_index} out of range ({} classes)",
                    self.class_names.len()
                ),
            ));
        }
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| self.labels[i] == class_index)
            .collect();
        if keep.is_empty() {
            return Err(Error::EmptyDataset {
                context: format!("class {:?}", self.class_names[class_index]),
            });
        }
        Ok(Self {
            images: keep.iter().map(|&i| self.images[i].clone()).collect(),
            labels: keep.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
            source_ids: keep.iter().map(|&i| self.source_ids[i].clone()).collect(),
        })
    }

    /// Resolve a class filter given either an index or a class name.
    pub fn class_index(&self, filter: &str) -> Result<usize> {
        if let Ok(idx) = filter.parse::<usize>() {
            if idx < self.class_names.len() {
                return Ok(idx);
            }
            return Err(Error::invalid(
                "class_filter",
                format!("index {idx} out of range ({} classes)", self.class_names.len()),
            ));
        }
        self.class_names
            .iter()
            .position(|n| n == filter)
            .ok_or_else(|| Error::invalid("class_filter", format!("unknown class {filter:?}")))
    }
}

/// ITU-R BT.601 luma conversion; identity for single-channel input.
pub fn to_grayscale(image: &ImageTensor) -> ImageTensor {
    if image.channels == 1 {
        return image.clone();
    }
    let plane = image.height * image.width;
    let r = &image.pixels[..plane];
    let g = &image.pixels[plane..2 * plane];
    let b = &image.pixels[2 * plane..3 * plane];
    let pixels: Vec<f64> = (0..plane)
        .map(|i| 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i])
        .collect();
    ImageTensor {
        height: image.height,
        width: image.width,
        channels: 1,
        pixels,
    }
}

/// Bilinear resize with corner-aligned sampling, applied per channel.
pub fn resize_bilinear(image: &ImageTensor, target_height: usize, target_width: usize) -> Result<ImageTensor> {
    if target_height == 0 || target_width == 0 {
        return Err(Error::invalid("resize target", "dimensions must be positive"));
    }
    let (h, w, c) = image.shape();
    let scale_y = if target_height > 1 {
        (h - 1) as f64 / (target_height - 1) as f64
    } else {
        0.0
    };
    let scale_x = if target_width > 1 {
        (w - 1) as f64 / (target_width - 1) as f64
    } else {
        0.0
    };
    let mut pixels = Vec::with_capacity(target_height * target_width * c);
    for ch in 0..c {
        let plane = image.channel_plane(ch);
        for oy in 0..target_height {
            let sy = oy as f64 * scale_y;
            let y0 = sy.floor() as usize;
            let y1 = (y0 + 1).min(h - 1);
            let fy = sy - y0 as f64;
            for ox in 0..target_width {
                let sx = ox as f64 * scale_x;
                let x0 = sx.floor() as usize;
                let x1 = (x0 + 1).min(w - 1);
                let fx = sx - x0 as f64;
                let v = plane[y0 * w + x0] * (1.0 - fy) * (1.0 - fx)
                    + plane[y0 * w + x1] * (1.0 - fy) * fx
                    + plane[y1 * w + x0] * fy * (1.0 - fx)
                    + plane[y1 * w + x1] * fy * fx;
                pixels.push(v.clamp(0.0, 1.0));
            }
        }
    }
    ImageTensor::new(target_height, target_width, c, pixels)
}
