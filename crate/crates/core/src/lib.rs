//! simscan: similarity analysis for image-classification datasets, before
//! any model is trained.
//!
//! Two complementary analyses locate redundant and influential images:
//!
//! * wavelet-coefficient clustering — decompose every image with a
//!   critically-sampled 2D DWT, keep the most linearly independent
//!   coefficient columns via rank-revealing QR, and cluster the rows
//!   ([`pipeline::wavelet_cluster_analysis`]);
//! * similarity-matrix spectral analysis — build a pairwise SSIM / cosine /
//!   Gaussian-kernel similarity matrix, read the cluster count off the
//!   graph-Laplacian eigen-gaps, and cluster spectrally
//!   ([`pipeline::spectral_similarity_analysis`]).
//!
//! Both partition multi-member clusters the same way: uniform-label clusters
//! are redundant (one representative kept), mixed-label clusters are
//! influential (all kept). An O(n^2) threshold dedupe
//! ([`pipeline::dedupe_by_threshold`]) and train-vs-test generalization
//! diagnostics ([`pipeline::cross_set_report`]) round out the toolkit.
//!
//! Kernels live in focused modules: [`ingest`] (CIFAR/MNIST/PNG loading),
//! [`wavelet`], [`numerics`] (pivoted QR, symmetric eigensolver, k-means),
//! [`similarity`], [`graph`], and [`store`] (file formats). Everything is
//! deterministic for a fixed seed at any thread count.

// index-based loops are the house style for the matrix kernels
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod graph;
pub mod ingest;
pub mod matrix;
pub mod numerics;
pub mod pipeline;
pub mod similarity;
pub mod store;
pub mod wavelet;

pub use error::{Error, ErrorKind, Result};
pub use ingest::{ImageTensor, LabeledDataset};
pub use matrix::DenseMatrix;
pub use similarity::{SimilarityMatrix, SimilarityMeasure, SsimParams};
pub use wavelet::{CoefficientMatrix, WaveletBasis};

/// Run `f` inside a rayon pool with the given thread count (`None` keeps the
/// global default). Results are identical at any worker count; this only
/// changes wall-clock time.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match workers {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("rayon pool")
            .install(f),
    }
}
