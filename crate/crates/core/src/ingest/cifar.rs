//! CIFAR-10 / CIFAR-100 binary parsers.
//!
//! CIFAR-10 files are consecutive 3,073-byte records: 1 label byte followed
//! by 1,024 red, 1,024 green, and 1,024 blue bytes, row-major within each
//! plane. CIFAR-100 records are 3,074 bytes: coarse label, fine label, then
//! the same 3,072 pixel bytes.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::{ImageTensor, LabeledDataset};

const SIDE: usize = 32;
const PLANE: usize = SIDE * SIDE;
const PIXELS: usize = 3 * PLANE;

pub const CIFAR10_CLASS_NAMES: [&str; 10] = [
    "airplane",
    "automobile",
    "bird",
    "cat",
    "deer",
    "dog",
    "frog",
    "horse",
    "ship",
    "truck",
];

const CIFAR100_FINE_NAMES: [&str; 100] = [
    "apple",
    "aquarium_fish",
    "baby",
    "bear",
    "beaver",
    "bed",
    "bee",
    "beetle",
    "bicycle",
    "bottle",
    "bowl",
    "boy",
    "bridge",
    "bus",
    "butterfly",
    "camel",
    "can",
    "castle",
    "caterpillar",
    "cattle",
    "chair",
    "chimpanzee",
    "clock",
    "cloud",
    "cockroach",
    "couch",
    "crab",
    "crocodile",
    "cup",
    "dinosaur",
    "dolphin",
    "elephant",
    "flatfish",
    "forest",
    "fox",
    "girl",
    "hamster",
    "house",
    "kangaroo",
    "keyboard",
    "lamp",
    "lawn_mower",
    "leopard",
    "lion",
    "lizard",
    "lobster",
    "man",
    "maple_tree",
    "motorcycle",
    "mountain",
    "mouse",
    "mushroom",
    "oak_tree",
    "orange",
    "orchid",
    "otter",
    "palm_tree",
    "pear",
    "pickup_truck",
    "pine_tree",
    "plain",
    "plate",
    "poppy",
    "porcupine",
    "possum",
    "rabbit",
    "raccoon",
    "ray",
    "road",
    "rocket",
    "rose",
    "sea",
    "seal",
    "shark",
    "shrew",
    "skunk",
    "skyscraper",
    "snail",
    "snake",
    "spider",
    "squirrel",
    "streetcar",
    "sunflower",
    "sweet_pepper",
    "table",
    "tank",
    "telephone",
    "television",
    "tiger",
    "tractor",
    "train",
    "trout",
    "tulip",
    "turtle",
    "wardrobe",
    "whale",
    "willow_tree",
    "wolf",
    "woman",
    "worm",
];

const CIFAR100_COARSE_NAMES: [&str; 20] = [
    "aquatic_mammals",
    "fish",
    "flowers",
    "food_containers",
    "fruit_and_vegetables",
    "household_electrical_devices",
    "household_furniture",
    "insects",
    "large_carnivores",
    "large_man-made_outdoor_things",
    "large_natural_outdoor_scenes",
    "large_omnivores_and_herbivores",
    "medium_mammals",
    "non-insect_invertebrates",
    "people",
    "reptiles",
    "small_mammals",
    "trees",
    "vehicles_1",
    "vehicles_2",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::invalid(
                "dataset.split",
                format!("unknown split {other:?} (expected train or test)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cifar100LabelMode {
    Coarse,
    Fine,
}

impl Cifar100LabelMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "coarse" => Ok(Cifar100LabelMode::Coarse),
            "fine" => Ok(Cifar100LabelMode::Fine),
            other => Err(Error::invalid(
                "dataset.label_mode",
                format!("unknown label mode {other:?} (expected coarse or fine)"),
            )),
        }
    }
}

fn read_records(path: &Path, record_size: usize) -> Result<Vec<u8>> {
    let bytes = std::fs::read(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::DatasetNotFound { path: path.into() }
        } else {
            Error::io(path, e)
        }
    })?;
    if bytes.is_empty() || bytes.len() % record_size != 0 {
        return Err(Error::MalformedDataset {
            path: path.into(),
            reason: format!(
                "file size {} is not a positive multiple of the {record_size}-byte record size",
                bytes.len()
            ),
        });
    }
    Ok(bytes)
}

/// Decode the 3,072 plane bytes starting at `offset` into a 32x32x3 tensor.
fn decode_planes(bytes: &[u8], offset: usize) -> ImageTensor {
    let pixels: Vec<f64> = bytes[offset..offset + PIXELS]
        .iter()
        .map(|&b| f64::from(b) / 255.0)
        .collect();
    ImageTensor {
        height: SIDE,
        width: SIDE,
        channels: 3,
        pixels,
    }
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Load the CIFAR-10 train batches (`data_batch_1..5.bin`) or the test batch
/// (`test_batch.bin`) from `directory_path`.
pub fn load_cifar10(directory_path: impl AsRef<Path>, split: Split) -> Result<LabeledDataset> {
    let dir = directory_path.as_ref();
    if !dir.is_dir() {
        return Err(Error::DatasetNotFound { path: dir.into() });
    }
    let files: Vec<PathBuf> = match split {
        Split::Train => (1..=5).map(|i| dir.join(format!("data_batch_{i}.bin"))).collect(),
        Split::Test => vec![dir.join("test_batch.bin")],
    };
    load_cifar10_files(&files)
}

/// Load an explicit list of CIFAR-10 batch files, in the given order.
pub fn load_cifar10_files(files: &[PathBuf]) -> Result<LabeledDataset> {
    const RECORD: usize = 1 + PIXELS;
    let mut images = Vec::new();
    let mut labels = Vec::new();
    let mut ids = Vec::new();
    for path in files {
        let bytes = read_records(path, RECORD)?;
        let name = file_name(path);
        for (index, record) in bytes.chunks_exact(RECORD).enumerate() {
            let label = usize::from(record[0]);
            if label > 9 {
                return Err(Error::CorruptRecord {
                    path: path.clone(),
                    index,
                    reason: format!("label byte {label} > 9"),
                });
            }
            images.push(decode_planes(record, 1));
            labels.push(label);
            ids.push(format!("{name}:{index}"));
        }
    }
    LabeledDataset::new(
        images,
        labels,
        CIFAR10_CLASS_NAMES.iter().map(|s| s.to_string()).collect(),
        ids,
    )
}

fn read_names_file(path: &Path, expected: usize) -> Option<Vec<String>> {
    let text = std::fs::read_to_string(path).ok()?;
    let names: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect();
    (names.len() == expected).then_some(names)
}

/// Load CIFAR-100 (`train.bin` / `test.bin`) with coarse or fine labels.
///
/// Class names come from `fine_label_names.txt` / `coarse_label_names.txt`
/// next to the data files when present, falling back to the canonical lists.
pub fn load_cifar100(
    directory_path: impl AsRef<Path>,
    label_mode: Cifar100LabelMode,
    split: Split,
) -> Result<LabeledDataset> {
    const RECORD: usize = 2 + PIXELS;
    let dir = directory_path.as_ref();
    if !dir.is_dir() {
        return Err(Error::DatasetNotFound { path: dir.into() });
    }
    let path = dir.join(match split {
        Split::Train => "train.bin",
        Split::Test => "test.bin",
    });
    let bytes = read_records(&path, RECORD)?;
    let name = file_name(&path);

    let (label_offset, max_label) = match label_mode {
        Cifar100LabelMode::Coarse => (0, 19),
        Cifar100LabelMode::Fine => (1, 99),
    };
    let mut images = Vec::new();
    let mut labels = Vec::new();
    let mut ids = Vec::new();
    for (index, record) in bytes.chunks_exact(RECORD).enumerate() {
        let label = usize::from(record[label_offset]);
        if label > max_label {
            return Err(Error::CorruptRecord {
                path: path.clone(),
                index,
                reason: format!("label byte {label} > {max_label}"),
            });
        }
        images.push(decode_planes(record, 2));
        labels.push(label);
        ids.push(format!("{name}:{index}"));
    }

    let class_names = match label_mode {
        Cifar100LabelMode::Fine => read_names_file(&dir.join("fine_label_names.txt"), 100)
            .unwrap_or_else(|| CIFAR100_FINE_NAMES.iter().map(|s| s.to_string()).collect()),
        Cifar100LabelMode::Coarse => read_names_file(&dir.join("coarse_label_names.txt"), 20)
            .unwrap_or_else(|| CIFAR100_COARSE_NAMES.iter().map(|s| s.to_string()).collect()),
    };
    LabeledDataset::new(images, labels, class_names, ids)
}
