//! Critically-sampled 2D discrete wavelet transforms (Haar and db2) and
//! dataset-wide coefficient-matrix construction.
//!
//! Transforms use orthonormal (L2) filters with periodic boundary extension,
//! so the coefficient count equals the pixel count, energy is preserved
//! (Parseval), and the inverse transform reconstructs exactly.
//!
//! Layout of a decomposed plane (Mallat pyramid, in place): at each level the
//! current top-left subgrid is split into quadrants
//!
//! ```text
//!   LL | LH        LL = lowpass both axes (recursed on the next level)
//!   ---+---        LH = highpass along x (width), lowpass along y
//!   HL | HH        HL = highpass along y (height), lowpass along x
//! ```
//!
//! Vectorization order for [`decompose_dataset`] is channel-major: for each
//! channel, the deepest LL band row-major, then per level from deepest to
//! finest the LH, HL, HH bands, each row-major.

use std::sync::LazyLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::LabeledDataset;
use crate::matrix::DenseMatrix;

/// Orthonormal wavelet filter bank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveletBasis {
    Haar,
    Db2,
}

const HAAR_LOWPASS: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];

// (1±sqrt(3))/(4 sqrt(2)) and (3±sqrt(3))/(4 sqrt(2)), written via
// (sqrt(2)±sqrt(6))/8 and (3 sqrt(2)±sqrt(6))/8
static DB2_LOWPASS: LazyLock<[f64; 4]> = LazyLock::new(|| {
    let s2 = std::f64::consts::SQRT_2;
    let s6 = 6.0f64.sqrt();
    [
        (s2 + s6) / 8.0,
        (3.0 * s2 + s6) / 8.0,
        (3.0 * s2 - s6) / 8.0,
        (s2 - s6) / 8.0,
    ]
});

impl WaveletBasis {
    pub fn name(&self) -> &'static str {
        match self {
            WaveletBasis::Haar => "haar",
            WaveletBasis::Db2 => "db2",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "haar" => Ok(WaveletBasis::Haar),
            "db2" | "daubechies2" | "db" => Ok(WaveletBasis::Db2),
            other => Err(Error::invalid(
                "wavelet.basis",
                format!("unknown basis {other:?} (expected haar or db2)"),
            )),
        }
    }

    pub fn lowpass(&self) -> &'static [f64] {
        match self {
            WaveletBasis::Haar => &HAAR_LOWPASS,
            WaveletBasis::Db2 => &*DB2_LOWPASS,
        }
    }

    /// Quadrature mirror of the lowpass filter: g[k] = (-1)^k h[L-1-k].
    pub fn highpass(&self) -> Vec<f64> {
        let h = self.lowpass();
        let l = h.len();
        (0..l)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * h[l - 1 - k]
            })
            .collect()
    }
}

impl std::fmt::Display for WaveletBasis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One row of vectorized wavelet coefficients per image.
#[derive(Debug, Clone)]
pub struct CoefficientMatrix {
    pub values: DenseMatrix,
    pub image_ids: Vec<String>,
    pub basis: WaveletBasis,
    /// Decomposition depth actually used (may be less than requested when
    /// the image dimensions stop halving to even values).
    pub levels: u32,
}

/// Number of levels that can actually be applied: both dimensions must be
/// even at every level.
pub fn effective_levels(height: usize, width: usize, requested: u32) -> u32 {
    let (mut h, mut w) = (height, width);
    let mut done = 0;
    while done < requested && h >= 2 && w >= 2 && h % 2 == 0 && w % 2 == 0 {
        h /= 2;
        w /= 2;
        done += 1;
    }
    done
}

fn check_level_one(height: usize, width: usize, levels: u32) -> Result<()> {
    if levels == 0 {
        return Err(Error::invalid("levels", "must be at least 1"));
    }
    if height % 2 != 0 || width % 2 != 0 || height == 0 || width == 0 {
        return Err(Error::invalid(
            "plane dimensions",
            format!("{height}x{width}: both dimensions must be even (pad or crop the input)"),
        ));
    }
    Ok(())
}

/// One analysis step on `x`: first half of `out` gets lowpass, second half
/// highpass, both downsampled by 2 with periodic extension.
fn analyze_1d(x: &[f64], low: &[f64], high: &[f64], out: &mut [f64]) {
    let n = x.len();
    let half = n / 2;
    for j in 0..half {
        let mut a = 0.0;
        let mut d = 0.0;
        for (k, (&hk, &gk)) in low.iter().zip(high).enumerate() {
            let v = x[(2 * j + k) % n];
            a += hk * v;
            d += gk * v;
        }
        out[j] = a;
        out[half + j] = d;
    }
}

/// Inverse of [`analyze_1d`]: adjoint of the (orthogonal) analysis operator.
fn synthesize_1d(coeffs: &[f64], low: &[f64], high: &[f64], out: &mut [f64]) {
    let n = coeffs.len();
    let half = n / 2;
    out.fill(0.0);
    for j in 0..half {
        let a = coeffs[j];
        let d = coeffs[half + j];
        for (k, (&hk, &gk)) in low.iter().zip(high).enumerate() {
            out[(2 * j + k) % n] += a * hk + d * gk;
        }
    }
}

/// Multilevel 2D transform of a single plane. Returns the coefficient grid
/// (same shape as the input) and the effective level count.
pub fn dwt2(plane: &DenseMatrix, basis: WaveletBasis, levels: u32) -> Result<(DenseMatrix, u32)> {
    let (h, w) = (plane.rows(), plane.cols());
    check_level_one(h, w, levels)?;
    let eff = effective_levels(h, w, levels);
    let low = basis.lowpass();
    let high = basis.highpass();

    let mut grid = plane.clone();
    let (mut ch, mut cw) = (h, w);
    let mut buf_in = vec![0.0; h.max(w)];
    let mut buf_out = vec![0.0; h.max(w)];
    for _ in 0..eff {
        // rows (along x)
        for i in 0..ch {
            buf_in[..cw].copy_from_slice(&grid.row(i)[..cw]);
            analyze_1d(&buf_in[..cw], low, &high, &mut buf_out[..cw]);
            grid.row_mut(i)[..cw].copy_from_slice(&buf_out[..cw]);
        }
        // columns (along y)
        for j in 0..cw {
            for i in 0..ch {
                buf_in[i] = grid.get(i, j);
            }
            analyze_1d(&buf_in[..ch], low, &high, &mut buf_out[..ch]);
            for i in 0..ch {
                grid.set(i, j, buf_out[i]);
            }
        }
        ch /= 2;
        cw /= 2;
    }
    Ok((grid, eff))
}

/// Inverse multilevel 2D transform. `levels` must equal the effective level
/// count the coefficients were produced with.
pub fn idwt2(coeffs: &DenseMatrix, basis: WaveletBasis, levels: u32) -> Result<DenseMatrix> {
    let (h, w) = (coeffs.rows(), coeffs.cols());
    check_level_one(h, w, levels)?;
    let eff = effective_levels(h, w, levels);
    if eff != levels {
        return Err(Error::ShapeMismatch {
            context: "idwt2 levels",
            expected: format!("at most {eff} levels for a {h}x{w} grid"),
            actual: format!("{levels} levels"),
        });
    }
    let low = basis.lowpass();
    let high = basis.highpass();

    let mut grid = coeffs.clone();
    let mut buf_in = vec![0.0; h.max(w)];
    let mut buf_out = vec![0.0; h.max(w)];
    for level in (0..eff).rev() {
        let ch = h >> level;
        let cw = w >> level;
        // columns first (reverse of the forward pass order)
        for j in 0..cw {
            for i in 0..ch {
                buf_in[i] = grid.get(i, j);
            }
            synthesize_1d(&buf_in[..ch], low, &high, &mut buf_out[..ch]);
            for i in 0..ch {
                grid.set(i, j, buf_out[i]);
            }
        }
        for i in 0..ch {
            buf_in[..cw].copy_from_slice(&grid.row(i)[..cw]);
            synthesize_1d(&buf_in[..cw], low, &high, &mut buf_out[..cw]);
            grid.row_mut(i)[..cw].copy_from_slice(&buf_out[..cw]);
        }
    }
    Ok(grid)
}

/// Flatten a Mallat pyramid grid into the documented coefficient order:
/// deepest LL row-major, then per level from deepest to finest LH, HL, HH.
pub fn vectorize_pyramid(grid: &DenseMatrix, levels: u32) -> Vec<f64> {
    let (h, w) = (grid.rows(), grid.cols());
    let mut out = Vec::with_capacity(h * w);
    let (llh, llw) = (h >> levels, w >> levels);
    for i in 0..llh {
        for j in 0..llw {
            out.push(grid.get(i, j));
        }
    }
    for level in (1..=levels).rev() {
        let bh = h >> level;
        let bw = w >> level;
        // LH: rows 0..bh, cols bw..2bw
        for i in 0..bh {
            for j in bw..2 * bw {
                out.push(grid.get(i, j));
            }
        }
        // HL: rows bh..2bh, cols 0..bw
        for i in bh..2 * bh {
            for j in 0..bw {
                out.push(grid.get(i, j));
            }
        }
        // HH: rows bh..2bh, cols bw..2bw
        for i in bh..2 * bh {
            for j in bw..2 * bw {
                out.push(grid.get(i, j));
            }
        }
    }
    debug_assert_eq!(out.len(), h * w);
    out
}

/// Decompose every image of a dataset; one row of coefficients per image.
///
/// Channels are decomposed independently and concatenated channel-major, so
/// the row length equals height * width * channels.
pub fn decompose_dataset(
    dataset: &LabeledDataset,
    basis: WaveletBasis,
    levels: u32,
) -> Result<CoefficientMatrix> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset {
            context: "decompose_dataset".into(),
        });
    }
    let (h, w, c) = dataset.image_shape();
    check_level_one(h, w, levels)?;
    let eff = effective_levels(h, w, levels);
    let d = h * w * c;
    let n = dataset.len();

    let mut values = DenseMatrix::zeros(n, d);
    let rows: Vec<&mut [f64]> = {
        let mut rows = Vec::with_capacity(n);
        let mut rest = values.values_mut();
        for _ in 0..n {
            let (head, tail) = rest.split_at_mut(d);
            rows.push(head);
            rest = tail;
        }
        rows
    };

    rows.into_par_iter().enumerate().try_for_each(|(i, row)| {
        let image = &dataset.images[i];
        for ch in 0..c {
            let plane = DenseMatrix::from_vec(h, w, image.channel_plane(ch).to_vec())?;
            let (grid, _) = dwt2(&plane, basis, eff)?;
            let vec = vectorize_pyramid(&grid, eff);
            row[ch * h * w..(ch + 1) * h * w].copy_from_slice(&vec);
        }
        Ok::<(), Error>(())
    })?;

    Ok(CoefficientMatrix {
        values,
        image_ids: dataset.source_ids.clone(),
        basis,
        levels: eff,
    })
}
