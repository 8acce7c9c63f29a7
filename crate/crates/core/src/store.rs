//! On-disk formats: little-endian f64 binary matrices with JSON sidecars,
//! plus CSV exports for inspection.
//!
//! A matrix saved under stem `foo` produces `foo.bin` (row-major f64,
//! little-endian) and `foo.json` (shape and provenance metadata).

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::similarity::SimilarityMatrix;
use crate::wavelet::{CoefficientMatrix, WaveletBasis};

fn bin_path(stem: &Path) -> PathBuf {
    stem.with_extension("bin")
}

fn json_path(stem: &Path) -> PathBuf {
    stem.with_extension("json")
}

fn write_matrix_values(path: &Path, matrix: &DenseMatrix) -> Result<()> {
    let mut bytes = Vec::with_capacity(matrix.values().len() * 8);
    for v in matrix.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_matrix_values(path: &Path, rows: usize, cols: usize) -> Result<DenseMatrix> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != rows * cols * 8 {
        return Err(Error::MalformedDataset {
            path: path.into(),
            reason: format!(
                "expected {} bytes for a {rows}x{cols} f64 matrix, found {}",
                rows * cols * 8,
                bytes.len()
            ),
        });
    }
    let data: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes([c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]]))
        .collect();
    DenseMatrix::from_vec(rows, cols, data)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("sidecar serializes");
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::MalformedDataset {
        path: path.into(),
        reason: e.to_string(),
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct CoefficientSidecar {
    n: usize,
    d: usize,
    basis: WaveletBasis,
    levels: u32,
    image_ids: Vec<String>,
}

pub fn save_coefficient_matrix(stem: &Path, matrix: &CoefficientMatrix) -> Result<()> {
    write_matrix_values(&bin_path(stem), &matrix.values)?;
    write_json(
        &json_path(stem),
        &CoefficientSidecar {
            n: matrix.values.rows(),
            d: matrix.values.cols(),
            basis: matrix.basis,
            levels: matrix.levels,
            image_ids: matrix.image_ids.clone(),
        },
    )
}

pub fn load_coefficient_matrix(stem: &Path) -> Result<CoefficientMatrix> {
    let sidecar: CoefficientSidecar = read_json(&json_path(stem))?;
    if sidecar.image_ids.len() != sidecar.n {
        return Err(Error::MalformedDataset {
            path: json_path(stem),
            reason: format!("{} ids for {} rows", sidecar.image_ids.len(), sidecar.n),
        });
    }
    let values = read_matrix_values(&bin_path(stem), sidecar.n, sidecar.d)?;
    Ok(CoefficientMatrix {
        values,
        image_ids: sidecar.image_ids,
        basis: sidecar.basis,
        levels: sidecar.levels,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct SimilaritySidecar {
    rows: usize,
    cols: usize,
    measure: String,
    symmetric: bool,
    row_ids: Vec<String>,
    col_ids: Vec<String>,
}

pub fn save_similarity_matrix(stem: &Path, matrix: &SimilarityMatrix) -> Result<()> {
    write_matrix_values(&bin_path(stem), &matrix.values)?;
    write_json(
        &json_path(stem),
        &SimilaritySidecar {
            rows: matrix.values.rows(),
            cols: matrix.values.cols(),
            measure: matrix.measure.clone(),
            symmetric: matrix.symmetric,
            row_ids: matrix.row_ids.clone(),
            col_ids: matrix.col_ids.clone(),
        },
    )
}

pub fn load_similarity_matrix(stem: &Path) -> Result<SimilarityMatrix> {
    let sidecar: SimilaritySidecar = read_json(&json_path(stem))?;
    if sidecar.row_ids.len() != sidecar.rows || sidecar.col_ids.len() != sidecar.cols {
        return Err(Error::MalformedDataset {
            path: json_path(stem),
            reason: "id counts do not match the declared shape".into(),
        });
    }
    let values = read_matrix_values(&bin_path(stem), sidecar.rows, sidecar.cols)?;
    Ok(SimilarityMatrix {
        values,
        row_ids: sidecar.row_ids,
        col_ids: sidecar.col_ids,
        measure: sidecar.measure,
        symmetric: sidecar.symmetric,
    })
}

/// Row-major CSV with 6 significant digits per entry.
pub fn write_matrix_csv(path: &Path, matrix: &DenseMatrix) -> Result<()> {
    let mut out = std::io::BufWriter::new(
        std::fs::File::create(path).map_err(|e| Error::io(path, e))?,
    );
    for i in 0..matrix.rows() {
        let row = matrix.row(i);
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.write_all(b",").map_err(|e| Error::io(path, e))?;
            }
            write!(out, "{v:.5e}").map_err(|e| Error::io(path, e))?;
        }
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// `index,eigenvalue` per line, full precision.
pub fn write_spectrum_csv(path: &Path, eigenvalues: &[f64]) -> Result<()> {
    let mut text = String::from("index,eigenvalue\n");
    for (i, v) in eigenvalues.iter().enumerate() {
        text.push_str(&format!("{i},{v}\n"));
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Minimal CSV field quoting for ids that may contain separators.
pub fn csv_field(value: &str) -> String {
    if value.contains([',', '"', '\n']) {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn coefficient_matrix_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("coeffs");
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let data: Vec<f64> = (0..12).map(|_| rng.random::<f64>()).collect();
        let matrix = CoefficientMatrix {
            values: DenseMatrix::from_vec(3, 4, data).unwrap(),
            image_ids: vec!["a".into(), "b".into(), "c".into()],
            basis: WaveletBasis::Db2,
            levels: 2,
        };
        save_coefficient_matrix(&stem, &matrix).unwrap();
        let loaded = load_coefficient_matrix(&stem).unwrap();
        assert_eq!(loaded.values, matrix.values);
        assert_eq!(loaded.image_ids, matrix.image_ids);
        assert_eq!(loaded.basis, matrix.basis);
        assert_eq!(loaded.levels, 2);
    }

    #[test]
    fn similarity_matrix_roundtrip_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("sim");
        let values = DenseMatrix::from_vec(2, 2, vec![1.0, 0.25, 0.25, 1.0]).unwrap();
        let matrix = SimilarityMatrix {
            values,
            row_ids: vec!["x".into(), "y".into()],
            col_ids: vec!["x".into(), "y".into()],
            measure: "ssim".into(),
            symmetric: true,
        };
        save_similarity_matrix(&stem, &matrix).unwrap();
        let loaded = load_similarity_matrix(&stem).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(loaded.values.get(i, j).to_bits(), matrix.values.get(i, j).to_bits());
            }
        }
        assert!(loaded.symmetric);
        assert_eq!(loaded.measure, "ssim");
    }

    #[test]
    fn truncated_binary_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("bad");
        let matrix = SimilarityMatrix {
            values: DenseMatrix::identity(2),
            row_ids: vec!["x".into(), "y".into()],
            col_ids: vec!["x".into(), "y".into()],
            measure: "ssim".into(),
            symmetric: true,
        };
        save_similarity_matrix(&stem, &matrix).unwrap();
        std::fs::write(stem.with_extension("bin"), [0u8; 7]).unwrap();
        assert!(load_similarity_matrix(&stem).is_err());
    }

    #[test]
    fn csv_formats() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let m = DenseMatrix::from_vec(1, 2, vec![0.0880012345, 1.0]).unwrap();
        write_matrix_csv(&path, &m).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "8.80012e-2,1.00000e0\n");

        let spec = dir.path().join("s.csv");
        write_spectrum_csv(&spec, &[0.0, 1.5]).unwrap();
        let text = std::fs::read_to_string(&spec).unwrap();
        assert_eq!(text, "index,eigenvalue\n0,0\n1,1.5\n");

        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("q\"q"), "\"q\"\"q\"");
    }
}
