//! Graph-Laplacian construction and spectral analysis of similarity
//! matrices: eigen-gap cluster counting, spectral clustering, isolation
//! scoring, and DOT export.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::numerics::{kmeans, symmetric_eigenpairs, symmetric_eigenvalues, ClusterAssignment, KmeansOptions};
use crate::similarity::SimilarityMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LaplacianKind {
    Unnormalized,
    NormalizedSymmetric,
}

impl LaplacianKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "unnormalized" => Ok(LaplacianKind::Unnormalized),
            "normalized" | "normalized-symmetric" => Ok(LaplacianKind::NormalizedSymmetric),
            other => Err(Error::invalid(
                "graph.laplacian",
                format!("unknown kind {other:?} (expected unnormalized or normalized)"),
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Laplacian {
    pub matrix: DenseMatrix,
    pub kind: LaplacianKind,
    /// Number of negative similarities clamped to zero during construction.
    pub clamped_count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct LaplacianSpectrum {
    pub eigenvalues: Vec<f64>,
    pub n: usize,
    pub construction: LaplacianKind,
    pub clamped_count: usize,
}

fn require_symmetric(s: &SimilarityMatrix) -> Result<usize> {
    if !s.symmetric || s.values.rows() != s.values.cols() {
        return Err(Error::NotSymmetric {
            deviation: f64::NAN,
        });
    }
    Ok(s.values.rows())
}

/// L = D - W with weights w_ij = max(S_ij, 0) for i != j; the diagonal of S
/// is ignored. The normalized-symmetric variant is D^(-1/2) L D^(-1/2) with
/// zero-degree nodes contributing an all-zero row and column.
pub fn laplacian(s: &SimilarityMatrix, kind: LaplacianKind) -> Result<Laplacian> {
    let n = require_symmetric(s)?;
    let mut weights = DenseMatrix::zeros(n, n);
    let mut clamped = 0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let v = s.values.get(i, j);
            if v < 0.0 {
                clamped += 1;
                continue;
            }
            weights.set(i, j, v);
        }
    }
    let degrees: Vec<f64> = (0..n).map(|i| weights.row(i).iter().sum()).collect();
    let mut matrix = DenseMatrix::zeros(n, n);
    match kind {
        LaplacianKind::Unnormalized => {
            for i in 0..n {
                for j in 0..n {
                    let v = if i == j {
                        degrees[i]
                    } else {
                        -weights.get(i, j)
                    };
                    matrix.set(i, j, v);
                }
            }
        }
        LaplacianKind::NormalizedSymmetric => {
            let inv_sqrt: Vec<f64> = degrees
                .iter()
                .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
                .collect();
            for i in 0..n {
                for j in 0..n {
                    let l = if i == j {
                        degrees[i]
                    } else {
                        -weights.get(i, j)
                    };
                    matrix.set(i, j, inv_sqrt[i] * l * inv_sqrt[j]);
                }
            }
        }
    }
    Ok(Laplacian {
        matrix,
        kind,
        clamped_count: clamped,
    })
}

/// Ascending Laplacian eigenvalues with the construction metadata attached.
pub fn laplacian_spectrum(s: &SimilarityMatrix, kind: LaplacianKind) -> Result<LaplacianSpectrum> {
    let lap = laplacian(s, kind)?;
    let eigenvalues = symmetric_eigenvalues(&lap.matrix)?;
    Ok(LaplacianSpectrum {
        n: eigenvalues.len(),
        eigenvalues,
        construction: kind,
        clamped_count: lap.clamped_count,
    })
}

/// Number of consecutive eigen-gaps larger than `gamma` (at least 1).
pub fn eigen_gap_count(eigenvalues: &[f64], gamma: f64) -> usize {
    let gaps = eigenvalues
        .windows(2)
        .filter(|w| w[1] - w[0] > gamma)
        .count();
    gaps.max(1)
}

/// Rows of the eigenvector matrix for the `n_c` smallest Laplacian
/// eigenvalues; row-normalized when the normalized Laplacian is used.
pub fn spectral_embedding(s: &SimilarityMatrix, n_c: usize, kind: LaplacianKind) -> Result<DenseMatrix> {
    let n = require_symmetric(s)?;
    if n_c == 0 || n_c > n {
        return Err(Error::invalid(
            "n_c",
            format!("{n_c} clusters for {n} nodes"),
        ));
    }
    let lap = laplacian(s, kind)?;
    let (_, mut vectors) = symmetric_eigenpairs(&lap.matrix, n_c)?;
    if kind == LaplacianKind::NormalizedSymmetric {
        for i in 0..vectors.rows() {
            let row = vectors.row_mut(i);
            let norm: f64 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                for v in row {
                    *v /= norm;
                }
            }
        }
    }
    Ok(vectors)
}

/// Spectral clustering: k-means over the spectral embedding.
pub fn spectral_clustering(
    s: &SimilarityMatrix,
    n_c: usize,
    kind: LaplacianKind,
    opts: &KmeansOptions,
) -> Result<ClusterAssignment> {
    let embedding = spectral_embedding(s, n_c, kind)?;
    kmeans(&embedding, n_c, opts)
}

#[derive(Debug, Clone, Serialize)]
pub struct IsolationRanking {
    /// score_i = max_{j != i} S_ij; lower means more isolated.
    pub scores: Vec<f64>,
    /// Indices sorted by ascending score (most isolated first, ties by index).
    pub ranking: Vec<usize>,
}

pub fn isolation_scores(s: &SimilarityMatrix) -> Result<IsolationRanking> {
    let n = require_symmetric(s)?;
    if n < 2 {
        return Err(Error::invalid("similarity matrix", "need at least 2 images"));
    }
    let scores: Vec<f64> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| s.values.get(i, j))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let mut ranking: Vec<usize> = (0..n).collect();
    ranking.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    Ok(IsolationRanking { scores, ranking })
}

/// Undirected DOT graph with one node per image (labeled by source id) and
/// an edge wherever S_ij >= edge_threshold, weight annotated to 3 decimals.
/// Node and edge order is ascending by index, so output is byte-stable.
pub fn export_dot(s: &SimilarityMatrix, edge_threshold: f64, labels: &[String]) -> Result<String> {
    let n = require_symmetric(s)?;
    if !(-1.0..=1.0).contains(&edge_threshold) {
        return Err(Error::invalid(
            "edge_threshold",
            format!("{edge_threshold} (must lie in [-1, 1])"),
        ));
    }
    if labels.len() != n {
        return Err(Error::ShapeMismatch {
            context: "export_dot labels",
            expected: format!("{n} labels"),
            actual: format!("{} labels", labels.len()),
        });
    }
    let mut out = String::from("graph G {\n");
    for (i, label) in labels.iter().enumerate() {
        let escaped = label.replace('\\', "\\\\").replace('"', "\\\"");
        let _ = writeln!(out, "  {i} [label=\"{escaped}\"];");
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let v = s.values.get(i, j);
            if v >= edge_threshold {
                let _ = writeln!(out, "  {i} -- {j} [label=\"{v:.3}\"];");
            }
        }
    }
    out.push_str("}\n");
    Ok(out)
}
