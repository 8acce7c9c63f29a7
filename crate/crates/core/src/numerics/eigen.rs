//! Dense symmetric eigensolver: Householder tridiagonalization followed by
//! implicit-shift QL iteration (the classic EISPACK tred2/tql2 pair).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Row count above which the tridiagonalization parallelizes its O(n^2)
/// inner passes.
const PAR_THRESHOLD: usize = 256;

fn check_symmetric(m: &DenseMatrix) -> Result<usize> {
    if m.rows() != m.cols() {
        return Err(Error::ShapeMismatch {
            context: "symmetric eigensolver",
            expected: "square matrix".into(),
            actual: format!("{}x{}", m.rows(), m.cols()),
        });
    }
    if m.rows() == 0 {
        return Err(Error::invalid("matrix", "eigendecomposition of an empty matrix"));
    }
    let deviation = m.symmetry_deviation();
    if deviation > 1e-10 * m.max_abs().max(1.0) {
        return Err(Error::NotSymmetric { deviation });
    }
    Ok(m.rows())
}

/// Full spectrum of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(matrix: &DenseMatrix) -> Result<Vec<f64>> {
    let n = check_symmetric(matrix)?;
    let mut a = matrix.values().to_vec();
    let (mut d, mut e) = tridiagonalize(&mut a, n, false);
    ql_implicit(&mut d, &mut e, None, n)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// The `k_smallest` smallest eigenvalues (ascending) with orthonormal
/// eigenvectors as the columns of the returned n x k matrix.
pub fn symmetric_eigenpairs(matrix: &DenseMatrix, k_smallest: usize) -> Result<(Vec<f64>, DenseMatrix)> {
    let n = check_symmetric(matrix)?;
    if k_smallest > n {
        return Err(Error::invalid(
            "k_smallest",
            format!("{k_smallest} exceeds matrix dimension {n}"),
        ));
    }
    let mut a = matrix.values().to_vec();
    let (mut d, mut e) = tridiagonalize(&mut a, n, true);
    ql_implicit(&mut d, &mut e, Some(&mut a), n)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let eigenvalues = order.iter().take(k_smallest).map(|&i| d[i]).collect();
    let mut vectors = DenseMatrix::zeros(n, k_smallest);
    for (out, &src) in order.iter().take(k_smallest).enumerate() {
        for row in 0..n {
            vectors.set(row, out, a[row * n + src]);
        }
    }
    Ok((eigenvalues, vectors))
}

/// Householder reduction to tridiagonal form (in place, row-major).
///
/// Returns (diagonal, subdiagonal); `e[0]` is unused. With `vectors` the
/// buffer is overwritten by the accumulated orthogonal transform Q such that
/// A = Q T Qᵀ; eigenvector rotations can then be applied directly to it.
fn tridiagonalize(a: &mut [f64], n: usize, vectors: bool) -> (Vec<f64>, Vec<f64>) {
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    if n == 1 {
        d[0] = a[0];
        if vectors {
            a[0] = 1.0;
        }
        return (d, e);
    }

    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let mut scale = 0.0;
            for k in 0..=l {
                scale += a[i * n + k].abs();
            }
            if scale == 0.0 {
                e[i] = a[i * n + l];
            } else {
                for k in 0..=l {
                    a[i * n + k] /= scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                let f = a[i * n + l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[i * n + l] = f - g;

                // u = a[i][0..=l]; compute A u over the stored lower triangle
                let u: Vec<f64> = a[i * n..i * n + l + 1].to_vec();
                let matvec = |j: usize| -> f64 {
                    let row_j = &a[j * n..j * n + j + 1];
                    let mut g = 0.0;
                    for (k, &ajk) in row_j.iter().enumerate() {
                        g += ajk * u[k];
                    }
                    for (k, &uk) in u.iter().enumerate().skip(j + 1) {
                        g += a[k * n + j] * uk;
                    }
                    g
                };
                if l >= PAR_THRESHOLD {
                    let results: Vec<f64> = (0..=l).into_par_iter().map(matvec).collect();
                    e[..=l].copy_from_slice(&results);
                } else {
                    for j in 0..=l {
                        e[j] = matvec(j);
                    }
                }
                if vectors {
                    for (j, &uj) in u.iter().enumerate() {
                        a[j * n + i] = uj / h;
                    }
                }
                let mut f2 = 0.0;
                for j in 0..=l {
                    e[j] /= h;
                    f2 += e[j] * u[j];
                }
                let hh = f2 / (h + h);
                for (j, &uj) in u.iter().enumerate() {
                    e[j] -= hh * uj;
                }

                // rank-2 update of the lower triangle: rows are disjoint
                let (rows, _) = a.split_at_mut((l + 1) * n);
                let e_ref = &e;
                let u_ref = &u;
                let update = |j: usize, row: &mut [f64]| {
                    let fj = u_ref[j];
                    let gj = e_ref[j];
                    for k in 0..=j {
                        row[k] -= fj * e_ref[k] + gj * u_ref[k];
                    }
                };
                if l >= PAR_THRESHOLD {
                    rows.par_chunks_mut(n)
                        .enumerate()
                        .for_each(|(j, row)| update(j, row));
                } else {
                    for (j, row) in rows.chunks_mut(n).enumerate() {
                        update(j, row);
                    }
                }
            }
        } else {
            e[i] = a[i * n + l];
        }
        d[i] = h;
    }

    d[0] = 0.0;
    e[0] = 0.0;
    if vectors {
        for i in 0..n {
            if d[i] != 0.0 {
                for j in 0..i {
                    let mut g = 0.0;
                    for k in 0..i {
                        g += a[i * n + k] * a[k * n + j];
                    }
                    for k in 0..i {
                        a[k * n + j] -= g * a[k * n + i];
                    }
                }
            }
            d[i] = a[i * n + i];
            a[i * n + i] = 1.0;
            for j in 0..i {
                a[j * n + i] = 0.0;
                a[i * n + j] = 0.0;
            }
        }
    } else {
        for (i, di) in d.iter_mut().enumerate() {
            *di = a[i * n + i];
        }
    }
    (d, e)
}

/// Implicit-shift QL iteration on a tridiagonal matrix, optionally rotating
/// an accumulated transform `z` (row-major n x n) into eigenvectors.
fn ql_implicit(d: &mut [f64], e: &mut [f64], mut z: Option<&mut [f64]>, n: usize) -> Result<()> {
    if n <= 1 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > 50 {
                return Err(Error::NumericalFailure {
                    context: "symmetric eigensolver",
                    reason: format!("QL iteration did not converge for eigenvalue {l}"),
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(zz) = z.as_deref_mut() {
                    for k in 0..n {
                        f = zz[k * n + i + 1];
                        zz[k * n + i + 1] = s * zz[k * n + i] + c * f;
                        zz[k * n + i] = c * zz[k * n + i] - s * f;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = rng.random::<f64>() * 2.0 - 1.0;
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        m
    }

    /// Independent oracle: cyclic Jacobi rotations. Deliberately a different
    /// algorithm from the tridiagonalization + QL implementation it checks.
    fn jacobi_eigenvalues(m: &DenseMatrix) -> Vec<f64> {
        let n = m.rows();
        let mut a: Vec<Vec<f64>> = (0..n).map(|i| m.row(i).to_vec()).collect();
        for _sweep in 0..200 {
            let mut off = 0.0f64;
            for i in 0..n {
                for j in (i + 1)..n {
                    off = off.max(a[i][j].abs());
                }
            }
            if off < 1e-13 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut eigs: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
        eigs.sort_by(f64::total_cmp);
        eigs
    }

    #[test]
    fn two_by_two_hand_solvable() {
        let m = DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let eigs = symmetric_eigenvalues(&m).unwrap();
        assert_abs_diff_eq!(eigs[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eigs[1], 3.0, epsilon = 1e-12);
        let (vals, vecs) = symmetric_eigenpairs(&m, 1).unwrap();
        assert_abs_diff_eq!(vals[0], 1.0, epsilon = 1e-12);
        // eigenvector proportional to (1, -1)/sqrt(2) up to sign
        let ratio = vecs.get(0, 0) / vecs.get(1, 0);
        assert_abs_diff_eq!(ratio, -1.0, epsilon = 1e-10);
        let norm = vecs.get(0, 0).hypot(vecs.get(1, 0));
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn diagonal_matrix_returns_sorted_diagonal() {
        let mut m = DenseMatrix::zeros(4, 4);
        for (i, v) in [3.0, -1.0, 2.5, 0.0].iter().enumerate() {
            m.set(i, i, *v);
        }
        let eigs = symmetric_eigenvalues(&m).unwrap();
        assert_eq!(eigs, vec![-1.0, 0.0, 2.5, 3.0]);
    }

    #[test]
    fn random_20x20_matches_jacobi_oracle() {
        let m = random_symmetric(20, 99);
        let eigs = symmetric_eigenvalues(&m).unwrap();
        let oracle = jacobi_eigenvalues(&m);
        for (a, b) in eigs.iter().zip(&oracle) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
    }

    #[test]
    fn trace_identity_and_residuals() {
        for seed in [1, 2, 3] {
            let n = 30;
            let m = random_symmetric(n, seed);
            let trace: f64 = (0..n).map(|i| m.get(i, i)).sum();
            let eigs = symmetric_eigenvalues(&m).unwrap();
            let sum: f64 = eigs.iter().sum();
            assert!((sum - trace).abs() <= 1e-8 * trace.abs().max(1.0));

            let (vals, vecs) = symmetric_eigenpairs(&m, n).unwrap();
            for c in 0..n {
                let v = vecs.column(c);
                let mut residual = 0.0f64;
                for i in 0..n {
                    let av: f64 = (0..n).map(|j| m.get(i, j) * v[j]).sum();
                    residual = residual.max((av - vals[c] * v[i]).abs());
                }
                assert!(residual < 1e-9, "residual {residual} for eigenpair {c}");
            }
        }
    }

    #[test]
    fn identity_eigenpairs_have_small_residual() {
        let m = DenseMatrix::identity(5);
        let (vals, vecs) = symmetric_eigenpairs(&m, 2).unwrap();
        assert_eq!(vals, vec![1.0, 1.0]);
        for c in 0..2 {
            let v = vecs.column(c);
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn block_diagonal_two_component_laplacian() {
        // two disjoint 3-cliques: Laplacian eigenvalues {0, 0, 3, 3, 3, 3}
        let mut m = DenseMatrix::zeros(6, 6);
        for block in 0..2 {
            let base = block * 3;
            for i in 0..3 {
                for j in 0..3 {
                    let v = if i == j { 2.0 } else { -1.0 };
                    m.set(base + i, base + j, v);
                }
            }
        }
        let (vals, vecs) = symmetric_eigenpairs(&m, 2).unwrap();
        assert!(vals[0].abs() < 1e-10);
        assert!(vals[1].abs() < 1e-10);
        // eigenvectors of the zero eigenvalue are constant within each block
        for c in 0..2 {
            let v = vecs.column(c);
            for block in 0..2 {
                let base = block * 3;
                let mean = (v[base] + v[base + 1] + v[base + 2]) / 3.0;
                let var: f64 = (0..3).map(|i| (v[base + i] - mean).powi(2)).sum();
                assert!(var < 1e-9, "within-block variance {var}");
            }
        }
    }

    #[test]
    fn asymmetric_input_rejected() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            symmetric_eigenvalues(&m),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn k_larger_than_n_rejected() {
        let m = DenseMatrix::identity(3);
        assert!(symmetric_eigenpairs(&m, 4).is_err());
    }

    #[test]
    fn psd_gram_has_nonnegative_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let data: Vec<f64> = (0..40 * 8).map(|_| rng.random::<f64>() - 0.5).collect();
        let a = DenseMatrix::from_vec(40, 8, data).unwrap();
        let g = crate::numerics::gram_matrix(&a);
        let eigs = symmetric_eigenvalues(&g).unwrap();
        for &l in &eigs {
            assert!(l >= -1e-10);
        }
    }
}
