//! Column-pivoted (rank-revealing) Householder QR with optional early stop,
//! and condition-bounded column selection on top of it.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Result of a column-pivoted QR factorization.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    /// |R_kk| in pivot order; non-increasing. One entry per processed pivot.
    pub r_diagonal: Vec<f64>,
    /// Original column index at each pivot position; unprocessed columns are
    /// appended in descending residual-norm order. Always a permutation of
    /// 0..cols.
    pub permutation: Vec<usize>,
    /// Number of pivots committed before the early stop triggered.
    pub columns_processed: usize,
    /// Orthogonal factor (rows x columns_processed), when requested.
    pub q: Option<DenseMatrix>,
    /// Upper-trapezoidal factor (columns_processed x cols) in pivot order,
    /// when requested.
    pub r: Option<DenseMatrix>,
}

/// Businger–Golub column pivoting on residual column norms.
///
/// Stops before committing pivot k when |R_kk| / |R_11| would fall below
/// `stop_ratio` (pass 0 to disable the early stop; exactly dependent
/// columns are then still processed, with zero R entries). Residual norms
/// are recomputed alongside each reflector application, so pivot selection
/// and the stop test use exact values rather than downdated estimates.
pub fn pivoted_qr(matrix: &DenseMatrix, stop_ratio: f64) -> Result<PivotedQr> {
    factorize(matrix, stop_ratio, false)
}

/// As [`pivoted_qr`], additionally storing the Q and R factors.
pub fn pivoted_qr_with_factors(matrix: &DenseMatrix, stop_ratio: f64) -> Result<PivotedQr> {
    factorize(matrix, stop_ratio, true)
}

fn factorize(matrix: &DenseMatrix, stop_ratio: f64, store_factors: bool) -> Result<PivotedQr> {
    if !(stop_ratio == 0.0 || (stop_ratio > 0.0 && stop_ratio <= 1.0)) {
        return Err(Error::invalid(
            "stop_ratio",
            format!("{stop_ratio} (expected 0 to disable, or a value in (0, 1])"),
        ));
    }
    let (n, d) = (matrix.rows(), matrix.cols());
    if n == 0 || d == 0 {
        return Err(Error::invalid("matrix", "QR of an empty matrix"));
    }

    // column-major working copy; reflector vectors stay below the diagonal
    let mut a = vec![0.0; n * d];
    for i in 0..n {
        let row = matrix.row(i);
        for j in 0..d {
            a[j * n + i] = row[j];
        }
    }
    let mut perm: Vec<usize> = (0..d).collect();
    let mut norms2: Vec<f64> = a
        .chunks_exact(n)
        .map(|col| col.iter().map(|v| v * v).sum())
        .collect();

    let kmax = n.min(d);
    let mut r_diagonal: Vec<f64> = Vec::with_capacity(kmax);
    let mut v0s: Vec<f64> = Vec::with_capacity(kmax);
    let mut taus: Vec<f64> = Vec::with_capacity(kmax);

    let mut k = 0;
    while k < kmax {
        // pivot: largest residual norm among remaining columns, lowest index on ties
        let mut pivot = k;
        let mut best = norms2[k];
        for (offset, &v) in norms2[k + 1..].iter().enumerate() {
            if v > best {
                best = v;
                pivot = k + 1 + offset;
            }
        }
        let norm = best.max(0.0).sqrt();
        if norm == 0.0 && k == 0 {
            break; // nothing but zero columns
        }
        if k > 0 && stop_ratio > 0.0 && norm < stop_ratio * r_diagonal[0] {
            break;
        }
        if pivot != k {
            let (lo, hi) = a.split_at_mut(pivot * n);
            lo[k * n..(k + 1) * n].swap_with_slice(&mut hi[..n]);
            perm.swap(k, pivot);
            norms2.swap(k, pivot);
        }

        // Householder reflector from the pivot column's residual; a pivot
        // with zero residual (exactly dependent column) gets the identity
        // reflector and a zero R entry
        let col = &mut a[k * n..(k + 1) * n];
        let (alpha, v0, tau) = if norm == 0.0 {
            (0.0, 0.0, 0.0)
        } else {
            let alpha = if col[k] >= 0.0 { -norm } else { norm };
            let v0 = col[k] - alpha;
            (alpha, v0, -1.0 / (alpha * v0))
        };
        col[k] = alpha;
        r_diagonal.push(norm);
        v0s.push(v0);
        taus.push(tau);

        // apply to trailing columns; each column also refreshes its residual norm
        let (head, tail) = a.split_at_mut((k + 1) * n);
        let v_rest = &head[k * n + k + 1..(k + 1) * n];
        tail.par_chunks_mut(n)
            .zip(norms2[k + 1..].par_iter_mut())
            .for_each(|(col_j, norm2)| {
                let mut w = v0 * col_j[k];
                for (x, v) in col_j[k + 1..].iter().zip(v_rest) {
                    w += x * v;
                }
                let tw = tau * w;
                col_j[k] -= tw * v0;
                let mut s = 0.0;
                for (x, v) in col_j[k + 1..].iter_mut().zip(v_rest) {
                    *x -= tw * v;
                    s += *x * *x;
                }
                *norm2 = s;
            });
        k += 1;
    }
    let processed = k;

    // order the unprocessed tail by descending residual norm, index on ties
    let mut tail_positions: Vec<usize> = (processed..d).collect();
    tail_positions.sort_by(|&p, &q| {
        norms2[q]
            .partial_cmp(&norms2[p])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(perm[p].cmp(&perm[q]))
    });
    let permutation: Vec<usize> = perm[..processed]
        .iter()
        .chain(tail_positions.iter().map(|&p| &perm[p]))
        .copied()
        .collect();

    let (q, r) = if store_factors {
        let mut q = DenseMatrix::zeros(n, processed);
        for j in 0..processed {
            q.set(j, j, 1.0);
        }
        for step in (0..processed).rev() {
            let v0 = v0s[step];
            let tau = taus[step];
            let v_rest = &a[step * n + step + 1..(step + 1) * n];
            for j in 0..processed {
                let mut w = v0 * q.get(step, j);
                for (i, v) in v_rest.iter().enumerate() {
                    w += q.get(step + 1 + i, j) * v;
                }
                let tw = tau * w;
                let cur = q.get(step, j);
                q.set(step, j, cur - tw * v0);
                for (i, v) in v_rest.iter().enumerate() {
                    let cur = q.get(step + 1 + i, j);
                    q.set(step + 1 + i, j, cur - tw * v);
                }
            }
        }
        let mut r = DenseMatrix::zeros(processed, d);
        let column_position = |out_col: usize| -> usize {
            if out_col < processed {
                out_col
            } else {
                tail_positions[out_col - processed]
            }
        };
        for out_col in 0..d {
            let pos = column_position(out_col);
            let col = &a[pos * n..(pos + 1) * n];
            let top = if out_col < processed { out_col + 1 } else { processed };
            for i in 0..top.min(processed) {
                r.set(i, out_col, col[i]);
            }
        }
        (Some(q), Some(r))
    } else {
        (None, None)
    };

    Ok(PivotedQr {
        r_diagonal,
        permutation,
        columns_processed: processed,
        q,
        r,
    })
}

/// Largest prefix of pivoted columns whose R-diagonal condition estimate
/// |R_11| / |R_mm| stays below `tau`.
#[derive(Debug, Clone)]
pub struct ColumnSelection {
    /// Number of columns kept.
    pub m: usize,
    /// Kept columns as original-matrix indices, in pivot order.
    pub column_indices: Vec<usize>,
    /// Columns excluded before QR because they carry no variation
    /// (all entries equal across rows).
    pub zero_variance_columns: Vec<usize>,
    /// |R_kk| of the processed pivots, for diagnostics.
    pub r_diagonal: Vec<f64>,
}

/// Choose the most linearly independent coefficient columns: zero-variance
/// columns are dropped up front, the rest go through [`pivoted_qr`] with
/// stop ratio 1/tau, and m is the largest prefix with condition estimate
/// below `tau`.
pub fn select_columns(matrix: &DenseMatrix, tau: f64) -> Result<ColumnSelection> {
    if !(tau > 1.0) {
        return Err(Error::invalid("tau", format!("{tau} (must be > 1)")));
    }
    let (n, d) = (matrix.rows(), matrix.cols());
    if n == 0 || d == 0 {
        return Err(Error::invalid("matrix", "column selection on an empty matrix"));
    }

    let mut zero_variance = Vec::new();
    let mut retained = Vec::new();
    for j in 0..d {
        let first = matrix.get(0, j);
        let constant = (1..n).all(|i| matrix.get(i, j) == first);
        if constant {
            zero_variance.push(j);
        } else {
            retained.push(j);
        }
    }
    if retained.is_empty() {
        return Err(Error::NumericalFailure {
            context: "select_columns",
            reason: "every column is constant across rows; nothing to select".into(),
        });
    }

    let mut sub = DenseMatrix::zeros(n, retained.len());
    for i in 0..n {
        let src = matrix.row(i);
        let dst = sub.row_mut(i);
        for (jj, &j) in retained.iter().enumerate() {
            dst[jj] = src[j];
        }
    }

    let qr = pivoted_qr(&sub, 1.0 / tau)?;
    let r1 = match qr.r_diagonal.first() {
        Some(&v) if v > 0.0 => v,
        _ => {
            return Err(Error::NumericalFailure {
                context: "select_columns",
                reason: "leading pivot has zero norm".into(),
            })
        }
    };
    let mut m = 0;
    for &rk in &qr.r_diagonal {
        if rk > 0.0 && r1 / rk < tau {
            m += 1;
        } else {
            break;
        }
    }
    if m == 0 {
        return Err(Error::NumericalFailure {
            context: "select_columns",
            reason: format!("no column prefix satisfies condition bound {tau}"),
        });
    }
    let column_indices = qr.permutation[..m].iter().map(|&jj| retained[jj]).collect();
    Ok(ColumnSelection {
        m,
        column_indices,
        zero_variance_columns: zero_variance,
        r_diagonal: qr.r_diagonal,
    })
}
