//! JSON run configuration with strict key checking and documented defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use simscan::graph::LaplacianKind;
use simscan::ingest::{Cifar100LabelMode, Split};
use simscan::pipeline::{ClusteringMethod, SelectionMode, SpectralOptions, WaveletClusterOptions};
use simscan::{SimilarityMeasure, SsimParams, WaveletBasis};

use crate::CliError;

fn default_format() -> String {
    "image_dir".into()
}
fn default_split() -> String {
    "train".into()
}
fn default_label_mode() -> String {
    "fine".into()
}
fn default_target() -> usize {
    256
}
fn default_basis() -> String {
    "db2".into()
}
fn default_levels() -> u32 {
    2
}
fn default_tau() -> f64 {
    1e5
}
fn default_stop_ratio() -> f64 {
    1e-5
}
fn default_selection_mode() -> String {
    "auto".into()
}
fn default_method() -> String {
    "kmeans".into()
}
fn default_max_iters() -> usize {
    100
}
fn default_restarts() -> usize {
    1
}
fn default_measure() -> String {
    "ssim".into()
}
fn default_k1() -> f64 {
    0.01
}
fn default_k2() -> f64 {
    0.03
}
fn default_dynamic_range() -> f64 {
    1.0
}
fn default_window_size() -> usize {
    11
}
fn default_window_sigma() -> f64 {
    1.5
}
fn default_weights() -> [f64; 3] {
    [1.0, 1.0, 1.0]
}
fn default_gamma() -> f64 {
    0.4
}
fn default_laplacian() -> String {
    "unnormalized".into()
}
fn default_edge_threshold() -> f64 {
    0.5
}
fn default_near_identical() -> f64 {
    0.9
}
fn default_dedupe() -> f64 {
    0.95
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    /// cifar10 | cifar100 | mnist | image_dir
    pub format: String,
    /// Dataset directory (CIFAR batch dir, MNIST dir, or class-tree root).
    pub path: Option<PathBuf>,
    /// train | test
    pub split: String,
    /// Class name or index; restricts the analysis to one class.
    pub class_filter: Option<String>,
    /// CIFAR-100 label set: fine | coarse
    pub label_mode: String,
    /// Override the IDX image/label file names inside `path` (MNIST only).
    pub images_file: Option<String>,
    pub labels_file: Option<String>,
    /// image_dir resize target.
    pub target_height: usize,
    pub target_width: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            format: default_format(),
            path: None,
            split: default_split(),
            class_filter: None,
            label_mode: default_label_mode(),
            images_file: None,
            labels_file: None,
            target_height: default_target(),
            target_width: default_target(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaveletConfig {
    /// haar | db2
    pub basis: String,
    pub levels: u32,
}

impl Default for WaveletConfig {
    fn default() -> Self {
        Self {
            basis: default_basis(),
            levels: default_levels(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectionConfig {
    /// Condition-number ceiling for kept coefficient columns.
    pub tau: f64,
    /// Early-stop ratio for pivoted QR (0 disables).
    pub stop_ratio: f64,
    /// auto | always | never (auto selects only when n > d).
    pub mode: String,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            tau: default_tau(),
            stop_ratio: default_stop_ratio(),
            mode: default_selection_mode(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusteringConfig {
    /// kmeans | agglomerative | spectral
    pub method: String,
    /// Cluster count; omitted = eigen-gap rule.
    pub n_c: Option<usize>,
    pub seed: u64,
    /// Linkage cutoff for the agglomerative method.
    pub distance_cutoff: f64,
    pub max_iters: usize,
    pub restarts: usize,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        Self {
            method: default_method(),
            n_c: None,
            seed: 0,
            distance_cutoff: 0.0,
            max_iters: default_max_iters(),
            restarts: default_restarts(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimilarityConfig {
    /// ssim | cosine | gaussian
    pub measure: String,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
    pub window_size: usize,
    pub window_sigma: f64,
    /// SSIM component exponents (luminance, contrast, structure).
    pub component_weights: [f64; 3],
    /// Gaussian-kernel bandwidth; omitted = median heuristic.
    pub sigma: Option<f64>,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        Self {
            measure: default_measure(),
            k1: default_k1(),
            k2: default_k2(),
            dynamic_range: default_dynamic_range(),
            window_size: default_window_size(),
            window_sigma: default_window_sigma(),
            component_weights: default_weights(),
            sigma: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraphConfig {
    /// Eigen-gap threshold.
    pub gamma: f64,
    /// unnormalized | normalized
    pub laplacian: String,
    /// DOT export keeps edges with similarity >= this value.
    pub edge_threshold: f64,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            gamma: default_gamma(),
            laplacian: default_laplacian(),
            edge_threshold: default_edge_threshold(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThresholdConfig {
    /// Cross-set "nearly identical" cutoff.
    pub near_identical: f64,
    /// Dedupe grouping threshold.
    pub dedupe: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            near_identical: default_near_identical(),
            dedupe: default_dedupe(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    pub wavelet: WaveletConfig,
    pub selection: SelectionConfig,
    pub clustering: ClusteringConfig,
    pub similarity: SimilarityConfig,
    pub graph: GraphConfig,
    pub thresholds: ThresholdConfig,
    /// Where artifacts land; invocation metadata, never echoed into reports
    /// so byte-identical runs stay byte-identical across directories.
    #[serde(skip_serializing)]
    pub output_dir: Option<PathBuf>,
    /// Thread count; affects wall-clock only, never results, and is likewise
    /// excluded from report echoes.
    #[serde(skip_serializing)]
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("invalid config {}: {e}", path.display())))
    }

    pub fn basis(&self) -> Result<WaveletBasis, CliError> {
        Ok(WaveletBasis::parse(&self.wavelet.basis)?)
    }

    pub fn split(&self) -> Result<Split, CliError> {
        Ok(Split::parse(&self.dataset.split)?)
    }

    pub fn label_mode(&self) -> Result<Cifar100LabelMode, CliError> {
        Ok(Cifar100LabelMode::parse(&self.dataset.label_mode)?)
    }

    pub fn laplacian(&self) -> Result<LaplacianKind, CliError> {
        Ok(LaplacianKind::parse(&self.graph.laplacian)?)
    }

    pub fn ssim_params(&self) -> SsimParams {
        SsimParams {
            k1: self.similarity.k1,
            k2: self.similarity.k2,
            dynamic_range: self.similarity.dynamic_range,
            window_size: self.similarity.window_size,
            window_sigma: self.similarity.window_sigma,
            component_weights: (
                self.similarity.component_weights[0],
                self.similarity.component_weights[1],
                self.similarity.component_weights[2],
            ),
        }
    }

    pub fn measure(&self) -> Result<SimilarityMeasure, CliError> {
        let basis = self.basis()?;
        match self.similarity.measure.to_ascii_lowercase().as_str() {
            "ssim" => Ok(SimilarityMeasure::Ssim {
                params: self.ssim_params(),
            }),
            "cosine" => Ok(SimilarityMeasure::Cosine {
                basis,
                levels: self.wavelet.levels,
            }),
            "gaussian" => Ok(SimilarityMeasure::Gaussian {
                basis,
                levels: self.wavelet.levels,
                sigma: self.similarity.sigma,
            }),
            other => Err(CliError::config(format!(
                "unknown similarity.measure {other:?} (expected ssim, cosine, or gaussian)"
            ))),
        }
    }

    pub fn wavelet_cluster_options(&self) -> Result<WaveletClusterOptions, CliError> {
        Ok(WaveletClusterOptions {
            basis: self.basis()?,
            levels: self.wavelet.levels,
            tau: self.selection.tau,
            stop_ratio: self.selection.stop_ratio,
            selection: SelectionMode::parse(&self.selection.mode)?,
            method: ClusteringMethod::parse(&self.clustering.method)?,
            n_c: self.clustering.n_c,
            gamma: self.graph.gamma,
            sigma: self.similarity.sigma,
            laplacian: self.laplacian()?,
            distance_cutoff: self.clustering.distance_cutoff,
            seed: self.clustering.seed,
            kmeans_max_iters: self.clustering.max_iters,
            kmeans_restarts: self.clustering.restarts,
        })
    }

    pub fn spectral_options(&self) -> Result<SpectralOptions, CliError> {
        Ok(SpectralOptions {
            measure: self.measure()?,
            gamma: self.graph.gamma,
            n_c_override: self.clustering.n_c,
            laplacian: self.laplacian()?,
            seed: self.clustering.seed,
            kmeans_max_iters: self.clustering.max_iters,
            kmeans_restarts: self.clustering.restarts,
        })
    }
}

/// Enumerates every config key and its default for `--help`.
pub const CONFIG_HELP: &str = "\
CONFIG FILE (JSON, strict keys; flags override; every key optional):
  dataset.format          cifar10 | cifar100 | mnist | image_dir   [image_dir]
  dataset.path            dataset directory                        [required]
  dataset.split           train | test                             [train]
  dataset.class_filter    class name or index                      [none]
  dataset.label_mode      fine | coarse (CIFAR-100)                [fine]
  dataset.images_file     IDX images file name (MNIST)             [by split]
  dataset.labels_file     IDX labels file name (MNIST)             [by split]
  dataset.target_height   image_dir resize height                  [256]
  dataset.target_width    image_dir resize width                   [256]
  wavelet.basis           haar | db2                               [db2]
  wavelet.levels          decomposition depth                      [2]
  selection.tau           condition ceiling for kept columns       [1e5]
  selection.stop_ratio    pivoted-QR early stop (0 disables)       [1e-5]
  selection.mode          auto | always | never                    [auto]
  clustering.method       kmeans | agglomerative | spectral        [kmeans]
  clustering.n_c          cluster count                            [eigen-gap rule]
  clustering.seed         RNG seed for all randomness              [0]
  clustering.distance_cutoff  agglomerative linkage cutoff         [0.0]
  clustering.max_iters    k-means iteration cap                    [100]
  clustering.restarts     k-means++ restarts                       [1]
  similarity.measure      ssim | cosine | gaussian                 [ssim]
  similarity.k1           SSIM stabilizer                          [0.01]
  similarity.k2           SSIM stabilizer                          [0.03]
  similarity.dynamic_range  SSIM L                                 [1.0]
  similarity.window_size  SSIM window (odd)                        [11]
  similarity.window_sigma SSIM window sigma                        [1.5]
  similarity.component_weights  SSIM exponents                     [1,1,1]
  similarity.sigma        Gaussian-kernel bandwidth                [median heuristic]
  graph.gamma             eigen-gap threshold                      [0.4]
  graph.laplacian         unnormalized | normalized                [unnormalized]
  graph.edge_threshold    DOT edge cutoff                          [0.5]
  thresholds.near_identical  cross-set cutoff                      [0.9]
  thresholds.dedupe       dedupe grouping threshold                [0.95]
  output_dir              artifact directory                       [$SIMSCAN_OUT or ./simscan-out]
  workers                 rayon thread count                       [all cores]

EXIT CODES: 0 success, 2 usage/config error, 3 data error, 4 numerical failure.";
