//! Structural similarity index with Gaussian-weighted local statistics.
//!
//! Windows are fully interior (no boundary padding); the score is the mean
//! over all valid window positions of l^alpha * c^beta * s^gamma with the
//! stabilizers C1 = (k1 L)^2, C2 = (k2 L)^2, C3 = C2 / 2.
//!
//! For constant-vs-constant inputs the stabilized contrast and structure
//! terms both reduce to 1, so two equal constants score exactly 1 and two
//! different constants score below 1 through the luminance term alone.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::ImageTensor;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SsimParams {
    pub k1: f64,
    pub k2: f64,
    /// Dynamic range L of the pixel values (1.0 for [0, 1] data).
    pub dynamic_range: f64,
    pub window_size: usize,
    pub window_sigma: f64,
    /// Exponents (alpha, beta, gamma) of the luminance, contrast, and
    /// structure components.
    pub component_weights: (f64, f64, f64),
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 1.0,
            window_size: 11,
            window_sigma: 1.5,
            component_weights: (1.0, 1.0, 1.0),
        }
    }
}

/// Per-plane windowed statistics reused across pair comparisons.
#[derive(Debug, Clone)]
pub(crate) struct PlaneStats {
    pub mu: Vec<f64>,
    pub second_moment: Vec<f64>,
}

pub(crate) struct SsimEngine {
    height: usize,
    width: usize,
    window: usize,
    taps: Vec<f64>,
    c1: f64,
    c2: f64,
    c3: f64,
    weights: (f64, f64, f64),
}

impl SsimEngine {
    pub fn new(params: &SsimParams, height: usize, width: usize) -> Result<Self> {
        if params.k1 <= 0.0 || params.k2 <= 0.0 {
            return Err(Error::invalid("ssim constants", "k1 and k2 must be positive"));
        }
        if params.dynamic_range <= 0.0 {
            return Err(Error::invalid("ssim dynamic_range", "must be positive"));
        }
        if params.window_size % 2 == 0 || params.window_size == 0 {
            return Err(Error::invalid(
                "ssim window_size",
                format!("{} (must be odd)", params.window_size),
            ));
        }
        if params.window_size > height.min(width) {
            return Err(Error::invalid(
                "ssim window_size",
                format!(
                    "{} exceeds image side (image is {height}x{width})",
                    params.window_size
                ),
            ));
        }
        if params.window_sigma <= 0.0 {
            return Err(Error::invalid("ssim window_sigma", "must be positive"));
        }
        let half = (params.window_size / 2) as f64;
        let mut taps: Vec<f64> = (0..params.window_size)
            .map(|i| {
                let x = i as f64 - half;
                (-x * x / (2.0 * params.window_sigma * params.window_sigma)).exp()
            })
            .collect();
        let sum: f64 = taps.iter().sum();
        for t in &mut taps {
            *t /= sum;
        }
        let c1 = (params.k1 * params.dynamic_range).powi(2);
        let c2 = (params.k2 * params.dynamic_range).powi(2);
        Ok(Self {
            height,
            width,
            window: params.window_size,
            taps,
            c1,
            c2,
            c3: c2 / 2.0,
            weights: params.component_weights,
        })
    }

    fn valid_dims(&self) -> (usize, usize) {
        (self.height - self.window + 1, self.width - self.window + 1)
    }

    /// Separable Gaussian-weighted sum of `plane` at every valid position.
    fn windowed(&self, plane: &[f64]) -> Vec<f64> {
        let (vh, vw) = self.valid_dims();
        let mut horizontal = vec![0.0; self.height * vw];
        for y in 0..self.height {
            let row = &plane[y * self.width..(y + 1) * self.width];
            let dst = &mut horizontal[y * vw..(y + 1) * vw];
            for (vx, d) in dst.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (k, &t) in self.taps.iter().enumerate() {
                    acc += t * row[vx + k];
                }
                *d = acc;
            }
        }
        let mut out = vec![0.0; vh * vw];
        for vy in 0..vh {
            let dst = &mut out[vy * vw..(vy + 1) * vw];
            for (k, &t) in self.taps.iter().enumerate() {
                let src = &horizontal[(vy + k) * vw..(vy + k + 1) * vw];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d += t * s;
                }
            }
        }
        out
    }

    pub fn plane_stats(&self, plane: &[f64]) -> PlaneStats {
        let mu = self.windowed(plane);
        let squared: Vec<f64> = plane.iter().map(|v| v * v).collect();
        let second_moment = self.windowed(&squared);
        PlaneStats { mu, second_moment }
    }

    pub fn score(&self, a: &[f64], b: &[f64], stats_a: &PlaneStats, stats_b: &PlaneStats) -> f64 {
        let product: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
        let cross = self.windowed(&product);
        let (alpha, beta, gamma) = self.weights;
        let mut total = 0.0;
        for i in 0..cross.len() {
            let mu_a = stats_a.mu[i];
            let mu_b = stats_b.mu[i];
            let var_a = (stats_a.second_moment[i] - mu_a * mu_a).max(0.0);
            let var_b = (stats_b.second_moment[i] - mu_b * mu_b).max(0.0);
            let cov = cross[i] - mu_a * mu_b;
            let sigma_a = var_a.sqrt();
            let sigma_b = var_b.sqrt();

            let luminance = (2.0 * mu_a * mu_b + self.c1) / (mu_a * mu_a + mu_b * mu_b + self.c1);
            let contrast = (2.0 * sigma_a * sigma_b + self.c2) / (var_a + var_b + self.c2);
            let structure = (cov + self.c3) / (sigma_a * sigma_b + self.c3);
            total += signed_pow(luminance, alpha) * signed_pow(contrast, beta) * signed_pow(structure, gamma);
        }
        total / cross.len() as f64
    }
}

/// sign-preserving power so the structure term (which may be negative) stays
/// defined for non-integer exponents
fn signed_pow(base: f64, exponent: f64) -> f64 {
    if exponent == 1.0 {
        base
    } else {
        base.signum() * base.abs().powf(exponent)
    }
}

/// Structural similarity between two grayscale images of identical shape.
pub fn ssim(a: &ImageTensor, b: &ImageTensor, params: &SsimParams) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            context: "ssim",
            expected: format!("{:?}", a.shape()),
            actual: format!("{:?}", b.shape()),
        });
    }
    if a.channels() != 1 {
        return Err(Error::invalid(
            "ssim input",
            "expects grayscale images; convert with to_grayscale first",
        ));
    }
    let engine = SsimEngine::new(params, a.height(), a.width())?;
    let stats_a = engine.plane_stats(a.pixels());
    let stats_b = engine.plane_stats(b.pixels());
    Ok(engine.score(a.pixels(), b.pixels(), &stats_a, &stats_b))
}
