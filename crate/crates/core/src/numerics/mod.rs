//! Dense linear-algebra and clustering kernels.
//!
//! All kernels are pure functions over immutable inputs. Internal parallelism
//! uses per-index writes and fixed-order accumulation only, so results are
//! bit-identical at any rayon thread count.

mod agglomerative;
mod eigen;
mod kmeans;
mod qr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

pub use agglomerative::agglomerative_threshold;
pub(crate) use agglomerative::DisjointSet;
pub use eigen::{symmetric_eigenpairs, symmetric_eigenvalues};
pub use kmeans::{kmeans, KmeansOptions};
pub use qr::{pivoted_qr, pivoted_qr_with_factors, select_columns, ColumnSelection, PivotedQr};

/// Cluster membership produced by any of the clustering kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    /// Cluster index per point, each < `k`.
    pub cluster_of: Vec<usize>,
    pub k: usize,
    /// Cluster centers (k x d); `None` for methods without centroids.
    pub centroids: Option<DenseMatrix>,
    /// Sum of squared distances to the assigned centroid, when defined.
    pub inertia: Option<f64>,
}

impl ClusterAssignment {
    /// Members per cluster, in point order.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.k];
        for (point, &c) in self.cluster_of.iter().enumerate() {
            groups[c].push(point);
        }
        groups
    }
}

/// How a condition number was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionMode {
    /// Ratio of extreme singular values (via the Gram-matrix spectrum).
    Exact,
    /// |R_11| / |R_kk| from a column-pivoted QR.
    RDiagonal,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Conditioning {
    /// sigma_max / sigma_min; `f64::INFINITY` when the matrix is
    /// rank-deficient to machine precision.
    pub value: f64,
    pub mode: ConditionMode,
}

/// Gram matrix over the smaller dimension: AᵀA when cols <= rows, otherwise
/// AAᵀ. Both share the nonzero singular-value spectrum of A.
pub fn gram_matrix(a: &DenseMatrix) -> DenseMatrix {
    let (n, d) = (a.rows(), a.cols());
    if d <= n {
        gram_columns(a)
    } else {
        gram_rows(a)
    }
}

/// AᵀA (d x d), accumulated panel by panel in fixed row order.
fn gram_columns(a: &DenseMatrix) -> DenseMatrix {
    let (n, d) = (a.rows(), a.cols());
    const PANEL: usize = 256;
    let mut g = DenseMatrix::zeros(d, d);
    let mut panel = vec![0.0; d * PANEL];
    let mut start = 0;
    while start < n {
        let rows = PANEL.min(n - start);
        // transpose the panel so each matrix column is contiguous
        for r in 0..rows {
            let src = a.row(start + r);
            for (j, &v) in src.iter().enumerate() {
                panel[j * PANEL + r] = v;
            }
        }
        let panel_ref = &panel;
        let out_rows: Vec<(usize, &mut [f64])> = {
            let mut rows_out = Vec::with_capacity(d);
            let mut rest = g.values_mut();
            for i in 0..d {
                let (head, tail) = rest.split_at_mut(d);
                rows_out.push((i, head));
                rest = tail;
            }
            rows_out
        };
        out_rows.into_par_iter().for_each(|(i, out)| {
            let ci = &panel_ref[i * PANEL..i * PANEL + rows];
            for j in i..d {
                let cj = &panel_ref[j * PANEL..j * PANEL + rows];
                let mut acc = 0.0;
                for (x, y) in ci.iter().zip(cj) {
                    acc += x * y;
                }
                out[j] += acc;
            }
        });
        start += rows;
    }
    for i in 0..d {
        for j in 0..i {
            let v = g.get(j, i);
            g.set(i, j, v);
        }
    }
    g
}

/// AAᵀ (n x n); rows are contiguous so dot products are direct.
fn gram_rows(a: &DenseMatrix) -> DenseMatrix {
    let n = a.rows();
    let mut g = DenseMatrix::zeros(n, n);
    let rows_out: Vec<(usize, &mut [f64])> = {
        let mut rows_out = Vec::with_capacity(n);
        let mut rest = g.values_mut();
        for i in 0..n {
            let (head, tail) = rest.split_at_mut(n);
            rows_out.push((i, head));
            rest = tail;
        }
        rows_out
    };
    rows_out.into_par_iter().for_each(|(i, out)| {
        let ri = a.row(i);
        for j in i..n {
            out[j] = crate::matrix::dot(ri, a.row(j));
        }
    });
    for i in 0..n {
        for j in 0..i {
            let v = g.get(j, i);
            g.set(i, j, v);
        }
    }
    g
}

/// Exact-mode condition number sigma_max / sigma_min, computed from the
/// eigenvalues of the Gram matrix over the smaller dimension.
///
/// Returns the infinity indicator when the smallest eigenvalue is at or below
/// max(n, d) * eps * lambda_max, i.e. the matrix is rank-deficient to machine
/// precision (squared singular values below that level are roundoff noise).
pub fn condition_number(matrix: &DenseMatrix) -> Result<Conditioning> {
    let (n, d) = (matrix.rows(), matrix.cols());
    if n == 0 || d == 0 {
        return Err(Error::invalid("matrix", "empty matrix has no condition number"));
    }
    let gram = gram_matrix(matrix);
    let eigs = symmetric_eigenvalues(&gram)?;
    let lambda_max = *eigs.last().expect("nonempty spectrum");
    if lambda_max <= 0.0 {
        return Ok(Conditioning {
            value: f64::INFINITY,
            mode: ConditionMode::Exact,
        });
    }
    let tol = n.max(d) as f64 * f64::EPSILON * lambda_max;
    let lambda_min = eigs[0].max(0.0);
    let value = if lambda_min <= tol {
        f64::INFINITY
    } else {
        (lambda_max / lambda_min).sqrt()
    };
    Ok(Conditioning {
        value,
        mode: ConditionMode::Exact,
    })
}

/// Fast-mode condition estimate |R_11| / |R_kk| from column-pivoted QR.
pub fn condition_number_proxy(matrix: &DenseMatrix) -> Result<Conditioning> {
    let qr = pivoted_qr(matrix, 0.0)?;
    let value = match (qr.r_diagonal.first(), qr.r_diagonal.last()) {
        (Some(&first), Some(&last)) if last > 0.0 && qr.columns_processed == matrix.cols().min(matrix.rows()) => {
            first / last
        }
        _ => f64::INFINITY,
    };
    Ok(Conditioning {
        value,
        mode: ConditionMode::RDiagonal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gram_matches_naive_transpose_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for &(n, d) in &[(7, 4), (4, 7), (300, 5)] {
            let data: Vec<f64> = (0..n * d).map(|_| rng.random::<f64>() - 0.5).collect();
            let a = DenseMatrix::from_vec(n, d, data).unwrap();
            let g = gram_matrix(&a);
            let naive = if d <= n {
                a.transpose().matmul(&a).unwrap()
            } else {
                a.matmul(&a.transpose()).unwrap()
            };
            assert_eq!(g.rows(), naive.rows());
            for i in 0..g.rows() {
                for j in 0..g.cols() {
                    assert_relative_eq!(g.get(i, j), naive.get(i, j), max_relative = 1e-12, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn condition_of_identity_is_one() {
        let c = condition_number(&DenseMatrix::identity(4)).unwrap();
        assert_relative_eq!(c.value, 1.0, max_relative = 1e-10);
        assert_eq!(c.mode, ConditionMode::Exact);
    }

    #[test]
    fn condition_of_diagonal_is_singular_value_ratio() {
        let mut m = DenseMatrix::zeros(3, 3);
        m.set(0, 0, 10.0);
        m.set(1, 1, 1.0);
        m.set(2, 2, 0.1);
        let c = condition_number(&m).unwrap();
        assert_relative_eq!(c.value, 100.0, max_relative = 1e-8);
        let proxy = condition_number_proxy(&m).unwrap();
        assert_relative_eq!(proxy.value, 100.0, max_relative = 1e-10);
        assert_eq!(proxy.mode, ConditionMode::RDiagonal);
    }

    #[test]
    fn rank_deficient_reports_infinity() {
        // third column = first column
        let m = DenseMatrix::from_rows(&[
            vec![1.0, 2.0, 1.0],
            vec![3.0, 4.0, 3.0],
            vec![5.0, 6.0, 5.0],
            vec![7.0, 9.0, 7.0],
        ])
        .unwrap();
        assert!(condition_number(&m).unwrap().value.is_infinite());
        assert!(condition_number_proxy(&m).unwrap().value > 1e14);
        assert!(condition_number(&DenseMatrix::zeros(3, 2)).unwrap().value.is_infinite());
    }

    #[test]
    fn condition_handles_wide_matrices() {
        // wide: n < d, spectrum from A Aᵀ
        let m = DenseMatrix::from_rows(&[vec![2.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]]).unwrap();
        let c = condition_number(&m).unwrap();
        assert_relative_eq!(c.value, 2.0, max_relative = 1e-10);
    }
}
