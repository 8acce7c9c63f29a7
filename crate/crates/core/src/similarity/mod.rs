//! Pairwise image-similarity measures and similarity-matrix construction.
//!
//! Three measures: SSIM on grayscale pixels, cosine similarity between
//! wavelet-coefficient vectors, and a Gaussian kernel over Euclidean
//! distances between coefficient vectors. Symmetric matrices compute the
//! upper triangle once and mirror it, so S = Sᵀ holds bitwise.

mod ssim;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{to_grayscale, LabeledDataset};
use crate::matrix::{dot, squared_distance, DenseMatrix};
use crate::wavelet::{decompose_dataset, CoefficientMatrix, WaveletBasis};

pub use ssim::{ssim, SsimParams};
pub(crate) use ssim::SsimEngine;

/// Pairwise score matrix; square and mirrored when `symmetric`, rectangular
/// (rows = test set, columns = train set) for cross-set comparisons.
#[derive(Debug, Clone)]
pub struct SimilarityMatrix {
    pub values: DenseMatrix,
    pub row_ids: Vec<String>,
    pub col_ids: Vec<String>,
    pub measure: String,
    pub symmetric: bool,
}

impl SimilarityMatrix {
    pub fn n(&self) -> usize {
        self.values.rows()
    }

    /// Mean and standard deviation of the off-diagonal entries
    /// (all entries for rectangular matrices).
    pub fn off_diagonal_stats(&self) -> (f64, f64) {
        let mut count = 0usize;
        let mut mean = 0.0;
        for i in 0..self.values.rows() {
            for j in 0..self.values.cols() {
                if self.symmetric && i == j {
                    continue;
                }
                mean += self.values.get(i, j);
                count += 1;
            }
        }
        mean /= count.max(1) as f64;
        let mut var = 0.0;
        for i in 0..self.values.rows() {
            for j in 0..self.values.cols() {
                if self.symmetric && i == j {
                    continue;
                }
                var += (self.values.get(i, j) - mean).powi(2);
            }
        }
        (mean, (var / count.max(1) as f64).sqrt())
    }

    /// Smallest off-diagonal entry and its index pair.
    pub fn min_off_diagonal(&self) -> Option<(f64, usize, usize)> {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..self.values.rows() {
            for j in 0..self.values.cols() {
                if self.symmetric && i == j {
                    continue;
                }
                let v = self.values.get(i, j);
                if best.is_none_or(|(b, _, _)| v < b) {
                    best = Some((v, i, j));
                }
            }
        }
        best
    }
}

/// Similarity measure plus whatever feature extraction it needs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "measure", rename_all = "lowercase")]
pub enum SimilarityMeasure {
    Ssim { params: SsimParams },
    Cosine { basis: WaveletBasis, levels: u32 },
    Gaussian {
        basis: WaveletBasis,
        levels: u32,
        /// Kernel bandwidth; `None` selects the median off-diagonal distance.
        sigma: Option<f64>,
    },
}

impl SimilarityMeasure {
    pub fn name(&self) -> &'static str {
        match self {
            SimilarityMeasure::Ssim { .. } => "ssim",
            SimilarityMeasure::Cosine { .. } => "cosine",
            SimilarityMeasure::Gaussian { .. } => "gaussian",
        }
    }
}

/// Cosine similarity of two equal-length vectors. The boolean flags the
/// degenerate case of a zero-norm input, for which the score is 0.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<(f64, bool)> {
    if u.len() != v.len() {
        return Err(Error::ShapeMismatch {
            context: "cosine_similarity",
            expected: format!("{} values", u.len()),
            actual: format!("{} values", v.len()),
        });
    }
    let nu = dot(u, u).sqrt();
    let nv = dot(v, v).sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Ok((0.0, true));
    }
    Ok((dot(u, v) / (nu * nv), false))
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn resolve_sigma(sigma: Option<f64>, distances: impl Fn() -> Vec<f64>) -> Result<f64> {
    let sigma = match sigma {
        Some(s) => s,
        None => median(distances()),
    };
    if !(sigma > 0.0) {
        return Err(Error::invalid(
            "sigma",
            format!("{sigma} (bandwidth must be positive; auto selection degenerates when most pairs coincide)"),
        ));
    }
    Ok(sigma)
}

/// Gaussian-kernel similarity S_ij = exp(-d_ij^2 / (2 sigma^2)) over the
/// coefficient rows. `None` sigma uses the median off-diagonal distance.
pub fn gaussian_similarity_matrix(coeffs: &CoefficientMatrix, sigma: Option<f64>) -> Result<SimilarityMatrix> {
    gaussian_from_rows(&coeffs.values, &coeffs.image_ids, sigma)
}

pub(crate) fn gaussian_from_rows(
    rows: &DenseMatrix,
    ids: &[String],
    sigma: Option<f64>,
) -> Result<SimilarityMatrix> {
    let n = rows.rows();
    if n < 2 {
        return Err(Error::invalid("similarity input", "need at least 2 images"));
    }
    let pairs = upper_pairs(n);
    let dist2: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| squared_distance(rows.row(i), rows.row(j)))
        .collect();
    let sigma = resolve_sigma(sigma, || dist2.iter().map(|d| d.sqrt()).collect())?;
    let scores: Vec<f64> = dist2
        .iter()
        .map(|&d2| (-d2 / (2.0 * sigma * sigma)).exp())
        .collect();
    Ok(assemble_symmetric(n, &pairs, &scores, ids, "gaussian"))
}

fn upper_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            pairs.push((i, j));
        }
    }
    pairs
}

fn assemble_symmetric(
    n: usize,
    pairs: &[(usize, usize)],
    scores: &[f64],
    ids: &[String],
    measure: &str,
) -> SimilarityMatrix {
    let mut values = DenseMatrix::zeros(n, n);
    for i in 0..n {
        values.set(i, i, 1.0);
    }
    for (&(i, j), &s) in pairs.iter().zip(scores) {
        values.set(i, j, s);
        values.set(j, i, s);
    }
    SimilarityMatrix {
        values,
        row_ids: ids.to_vec(),
        col_ids: ids.to_vec(),
        measure: measure.to_string(),
        symmetric: true,
    }
}

/// Full pairwise similarity matrix of a dataset under the given measure.
pub fn similarity_matrix(dataset: &LabeledDataset, measure: &SimilarityMeasure) -> Result<SimilarityMatrix> {
    let n = dataset.len();
    if n < 2 {
        return Err(Error::invalid("similarity input", "need at least 2 images"));
    }
    match measure {
        SimilarityMeasure::Ssim { params } => {
            let (h, w, _) = dataset.image_shape();
            let engine = SsimEngine::new(params, h, w)?;
            let planes: Vec<Vec<f64>> = dataset
                .images
                .par_iter()
                .map(|img| to_grayscale(img).pixels().to_vec())
                .collect();
            let stats: Vec<_> = planes.par_iter().map(|p| engine.plane_stats(p)).collect();
            let pairs = upper_pairs(n);
            let scores: Vec<f64> = pairs
                .par_iter()
                .map(|&(i, j)| engine.score(&planes[i], &planes[j], &stats[i], &stats[j]))
                .collect();
            Ok(assemble_symmetric(n, &pairs, &scores, &dataset.source_ids, "ssim"))
        }
        SimilarityMeasure::Cosine { basis, levels } => {
            let coeffs = decompose_dataset(dataset, *basis, *levels)?;
            let pairs = upper_pairs(n);
            let scores: Vec<f64> = pairs
                .par_iter()
                .map(|&(i, j)| {
                    cosine_similarity(coeffs.values.row(i), coeffs.values.row(j))
                        .map(|(v, _)| v)
                        .expect("equal-length rows")
                })
                .collect();
            Ok(assemble_symmetric(n, &pairs, &scores, &dataset.source_ids, "cosine"))
        }
        SimilarityMeasure::Gaussian { basis, levels, sigma } => {
            let coeffs = decompose_dataset(dataset, *basis, *levels)?;
            gaussian_similarity_matrix(&coeffs, *sigma)
        }
    }
}

/// Rectangular cross-set similarity: values[t][r] = F(test_t, train_r).
pub fn cross_similarity(
    train: &LabeledDataset,
    test: &LabeledDataset,
    measure: &SimilarityMeasure,
) -> Result<SimilarityMatrix> {
    if train.is_empty() || test.is_empty() {
        return Err(Error::EmptyDataset {
            context: "cross_similarity".into(),
        });
    }
    if train.image_shape() != test.image_shape() {
        return Err(Error::ShapeMismatch {
            context: "cross_similarity",
            expected: format!("{:?}", train.image_shape()),
            actual: format!("{:?}", test.image_shape()),
        });
    }
    let rows = test.len();
    let cols = train.len();
    let values = match measure {
        SimilarityMeasure::Ssim { params } => {
            let (h, w, _) = train.image_shape();
            let engine = SsimEngine::new(params, h, w)?;
            let train_planes: Vec<Vec<f64>> = train
                .images
                .par_iter()
                .map(|img| to_grayscale(img).pixels().to_vec())
                .collect();
            let test_planes: Vec<Vec<f64>> = test
                .images
                .par_iter()
                .map(|img| to_grayscale(img).pixels().to_vec())
                .collect();
            let train_stats: Vec<_> = train_planes.par_iter().map(|p| engine.plane_stats(p)).collect();
            let test_stats: Vec<_> = test_planes.par_iter().map(|p| engine.plane_stats(p)).collect();
            let mut values = DenseMatrix::zeros(rows, cols);
            par_fill_rows(&mut values, |t, out| {
                for (r, cell) in out.iter_mut().enumerate() {
                    *cell = engine.score(&test_planes[t], &train_planes[r], &test_stats[t], &train_stats[r]);
                }
            });
            values
        }
        SimilarityMeasure::Cosine { basis, levels } => {
            let train_coeffs = decompose_dataset(train, *basis, *levels)?;
            let test_coeffs = decompose_dataset(test, *basis, *levels)?;
            let mut values = DenseMatrix::zeros(rows, cols);
            par_fill_rows(&mut values, |t, out| {
                for (r, cell) in out.iter_mut().enumerate() {
                    *cell = cosine_similarity(test_coeffs.values.row(t), train_coeffs.values.row(r))
                        .map(|(v, _)| v)
                        .expect("equal-length rows");
                }
            });
            values
        }
        SimilarityMeasure::Gaussian { basis, levels, sigma } => {
            let train_coeffs = decompose_dataset(train, *basis, *levels)?;
            let test_coeffs = decompose_dataset(test, *basis, *levels)?;
            let dist2: Vec<Vec<f64>> = (0..rows)
                .into_par_iter()
                .map(|t| {
                    (0..cols)
                        .map(|r| squared_distance(test_coeffs.values.row(t), train_coeffs.values.row(r)))
                        .collect()
                })
                .collect();
            let sigma = resolve_sigma(*sigma, || {
                dist2.iter().flatten().map(|d| d.sqrt()).collect()
            })?;
            let mut values = DenseMatrix::zeros(rows, cols);
            par_fill_rows(&mut values, |t, out| {
                for (r, cell) in out.iter_mut().enumerate() {
                    *cell = (-dist2[t][r] / (2.0 * sigma * sigma)).exp();
                }
            });
            values
        }
    };
    Ok(SimilarityMatrix {
        values,
        row_ids: test.source_ids.clone(),
        col_ids: train.source_ids.clone(),
        measure: measure.name().to_string(),
        symmetric: false,
    })
}

fn par_fill_rows(matrix: &mut DenseMatrix, fill: impl Fn(usize, &mut [f64]) + Sync) {
    let cols = matrix.cols();
    matrix
        .values_mut()
        .par_chunks_mut(cols)
        .enumerate()
        .for_each(|(i, row)| fill(i, row));
}
