//! Acceptance suite: one test per criterion, named `criterion_NN_*` so the
//! test harness prints one pass/fail line per criterion.
//!
//! Criteria that need the real MNIST / CIFAR datasets look for them under
//! `$SIMSCAN_DATA` (default `./data`, see README for the layout) and print a
//! SKIPPED line when the files are absent. Everything else always runs.

use std::path::PathBuf;
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use simscan::graph::{eigen_gap_count, laplacian_spectrum, spectral_clustering, LaplacianKind};
use simscan::ingest::{load_cifar100, load_mnist, Cifar100LabelMode, Split};
use simscan::numerics::{
    condition_number, kmeans, pivoted_qr, pivoted_qr_with_factors, symmetric_eigenvalues,
    KmeansOptions,
};
use simscan::pipeline::{
    cross_set_report, dedupe_by_threshold, spectral_similarity_analysis, wavelet_cluster_analysis,
    ClusteringMethod, SelectionMode, SpectralOptions, WaveletClusterOptions,
};
use simscan::similarity::{similarity_matrix, SimilarityMatrix, SsimParams};
use simscan::wavelet::{decompose_dataset, dwt2, idwt2};
use simscan::{
    with_workers, DenseMatrix, ImageTensor, LabeledDataset, SimilarityMeasure, WaveletBasis,
};

fn data_root() -> PathBuf {
    std::env::var("SIMSCAN_DATA")
        .map(PathBuf::from)
        .unwrap_or_else(|_| PathBuf::from("data"))
}

fn mnist_train() -> Option<(PathBuf, PathBuf)> {
    let dir = data_root().join("mnist");
    let images = dir.join("train-images-idx3-ubyte");
    let labels = dir.join("train-labels-idx1-ubyte");
    (images.is_file() && labels.is_file()).then_some((images, labels))
}

fn cifar10_dir() -> Option<PathBuf> {
    let dir = data_root().join("cifar-10-batches-bin");
    dir.join("data_batch_1.bin").is_file().then_some(dir)
}

fn cifar100_dir() -> Option<PathBuf> {
    let dir = data_root().join("cifar-100-binary");
    dir.join("train.bin").is_file().then_some(dir)
}

macro_rules! skip_unless {
    ($option:expr, $what:literal) => {
        match $option {
            Some(v) => v,
            None => {
                println!(
                    "SKIPPED: {} not found under {} (set SIMSCAN_DATA)",
                    $what,
                    data_root().display()
                );
                return;
            }
        }
    };
}

fn fish_class() -> Option<LabeledDataset> {
    let dir = cifar100_dir()?;
    let train = load_cifar100(dir, Cifar100LabelMode::Fine, Split::Train).expect("cifar-100 parses");
    let fish = train.class_index("aquarium_fish").expect("fish class present");
    Some(train.filter_class(fish).expect("nonempty class"))
}

// ---------------------------------------------------------------------------
// criterion 1: MNIST Haar decomposition has exactly 32 all-zero columns
// ---------------------------------------------------------------------------
#[test]
fn criterion_01_mnist_zero_coefficient_columns() {
    let (images, labels) = skip_unless!(mnist_train(), "MNIST train files");
    let start = Instant::now();
    let ds = load_mnist(images, labels).expect("mnist parses");
    assert_eq!(ds.len(), 60_000);
    assert_eq!(ds.image_shape(), (28, 28, 1));
    let coeffs = decompose_dataset(&ds, WaveletBasis::Haar, 2).expect("decomposes");
    assert_eq!(coeffs.values.cols(), 784);
    let zero_columns = (0..784)
        .filter(|&j| (0..ds.len()).all(|i| coeffs.values.get(i, j) == 0.0))
        .count();
    println!(
        "zero coefficient columns: {zero_columns} (elapsed {:.1}s)",
        start.elapsed().as_secs_f64()
    );
    assert_eq!(zero_columns, 32);
    assert!(start.elapsed().as_secs_f64() < 120.0, "over the 2-minute budget");
}

// ---------------------------------------------------------------------------
// criterion 2: MNIST conditioning before/after dropping trailing pivots
// ---------------------------------------------------------------------------
#[test]
fn criterion_02_mnist_conditioning() {
    let (images, labels) = skip_unless!(mnist_train(), "MNIST train files");
    let start = Instant::now();
    let ds = load_mnist(images, labels).expect("mnist parses");
    let n = ds.len();
    let coeffs = decompose_dataset(&ds, WaveletBasis::Haar, 2).expect("decomposes");
    drop(ds);
    let keep: Vec<usize> = (0..coeffs.values.cols())
        .filter(|&j| (0..n).any(|i| coeffs.values.get(i, j) != 0.0))
        .collect();
    let mut reduced = DenseMatrix::zeros(n, keep.len());
    for i in 0..n {
        let src = coeffs.values.row(i);
        let dst = reduced.row_mut(i);
        for (jj, &j) in keep.iter().enumerate() {
            dst[jj] = src[j];
        }
    }
    drop(coeffs);
    let cond = condition_number(&reduced).expect("conditioning");
    println!("exact-mode condition after exclusion: {}", cond.value);
    assert!(
        cond.value > 1e15 || cond.value.is_infinite(),
        "condition {} not beyond 1e15",
        cond.value
    );

    let qr = pivoted_qr(&reduced, 0.0).expect("full pivoted qr");
    let r = &qr.r_diagonal;
    assert!(r.len() > 200, "too few pivots: {}", r.len());
    let kept = r.len() - 200;
    let estimate = r[0] / r[kept - 1];
    println!(
        "drop-200 R-diagonal estimate: {estimate:.3e} over {} pivots (elapsed {:.1}s)",
        r.len(),
        start.elapsed().as_secs_f64()
    );
    assert!(
        (1e5..=1e7).contains(&estimate),
        "estimate {estimate:.3e} outside [1e5, 1e7]"
    );
    assert!(start.elapsed().as_secs_f64() < 600.0, "over the 10-minute budget");
}

// ---------------------------------------------------------------------------
// criterion 3 (slow): CIFAR-10 db2 coefficient matrix and its conditioning
// ---------------------------------------------------------------------------
#[test]
#[ignore = "slow: ~1.3 GB working set; run with --ignored when CIFAR-10 is available"]
fn criterion_03_cifar10_coefficient_matrix() {
    let dir = skip_unless!(cifar10_dir(), "CIFAR-10 binary batches");
    let ds = simscan::ingest::load_cifar10(dir, Split::Train).expect("cifar-10 parses");
    assert_eq!(ds.len(), 50_000);
    let coeffs = decompose_dataset(&ds, WaveletBasis::Db2, 2).expect("decomposes");
    drop(ds);
    assert_eq!(coeffs.values.rows(), 50_000);
    assert_eq!(coeffs.values.cols(), 3_072);
    let cond = condition_number(&coeffs.values).expect("conditioning");
    println!("CIFAR-10 exact-mode condition: {}", cond.value);
    let reference = 21_618.0;
    assert!(
        cond.value > reference / 5.0 && cond.value < reference * 5.0,
        "condition {} outside 5x of {reference}",
        cond.value
    );
}

// ---------------------------------------------------------------------------
// criterion 4: aquarium-fish RRQR rank and conditioning
// ---------------------------------------------------------------------------
#[test]
fn criterion_04_fish_class_rrqr() {
    let fish = skip_unless!(fish_class(), "CIFAR-100 binary files");
    assert_eq!(fish.len(), 500, "fish class should hold 500 train images");
    let coeffs = decompose_dataset(&fish, WaveletBasis::Db2, 2).expect("decomposes");
    assert_eq!(coeffs.values.cols(), 3_072);

    let qr = pivoted_qr(&coeffs.values, 1e-5).expect("rrqr");
    println!("numerical rank at stop ratio 1e-5: {}", qr.columns_processed);
    assert!(
        (490..=500).contains(&qr.columns_processed),
        "rank {} outside 495 +/- 5",
        qr.columns_processed
    );

    let cond = condition_number(&coeffs.values).expect("conditioning");
    println!("full-matrix exact-mode condition: {}", cond.value);
    assert!(
        cond.value > 1e15 || cond.value.is_infinite(),
        "condition {} not beyond 1e15",
        cond.value
    );
}

// ---------------------------------------------------------------------------
// criterion 5: aquarium-fish SSIM statistics and algorithm agreement
// ---------------------------------------------------------------------------
#[test]
fn criterion_05_fish_class_ssim_statistics() {
    let fish = skip_unless!(fish_class(), "CIFAR-100 binary files");
    let measure = SimilarityMeasure::Ssim {
        params: SsimParams::default(),
    };
    let sim = similarity_matrix(&fish, &measure).expect("ssim matrix");
    let (mean, std) = sim.off_diagonal_stats();
    let (min, _, _) = sim.min_off_diagonal().expect("nonempty");
    println!("SSIM off-diagonal mean {mean:.4}, std {std:.4}, min {min:.4}");
    assert!((mean - 0.088).abs() <= 0.05, "mean {mean} outside 0.088 +/- 0.05");
    assert!((std - 0.131).abs() <= 0.05, "std {std} outside 0.131 +/- 0.05");
    assert!((min - (-0.5420)).abs() <= 0.05, "min {min} outside -0.5420 +/- 0.05");

    let near_pairs: Vec<(usize, usize)> = highly_similar_pairs(&sim, 0.95);
    println!("pairs with SSIM >= 0.95: {}", near_pairs.len());
    assert!(near_pairs.len() >= 5, "expected at least 5 near-identical pairs");

    // both analyses must put each of those pairs inside one redundant group
    let alg1 = wavelet_cluster_analysis(
        &fish,
        &WaveletClusterOptions {
            basis: WaveletBasis::Db2,
            selection: SelectionMode::Always,
            n_c: Some(470),
            kmeans_restarts: 1,
            ..Default::default()
        },
    )
    .expect("alg1 runs");
    let alg2 = spectral_similarity_analysis(
        &fish,
        &SpectralOptions {
            measure,
            gamma: 0.4,
            ..Default::default()
        },
    )
    .expect("alg2 runs");
    for (i, j) in &near_pairs {
        let a = &fish.source_ids[*i];
        let b = &fish.source_ids[*j];
        assert!(
            same_redundant_group(&alg1.redundant_groups, a, b),
            "alg1 separated near-identical pair {a} / {b}"
        );
        assert!(
            same_redundant_group(&alg2.report.redundant_groups, a, b),
            "alg2 separated near-identical pair {a} / {b}"
        );
    }
}

fn highly_similar_pairs(sim: &SimilarityMatrix, threshold: f64) -> Vec<(usize, usize)> {
    let n = sim.n();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if sim.values.get(i, j) >= threshold {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

fn same_redundant_group(groups: &[simscan::pipeline::RedundantGroup], a: &str, b: &str) -> bool {
    groups
        .iter()
        .any(|g| g.members.iter().any(|m| m == a) && g.members.iter().any(|m| m == b))
}

// ---------------------------------------------------------------------------
// criterion 6: aquarium-fish eigen-gap count
// ---------------------------------------------------------------------------
#[test]
fn criterion_06_fish_class_eigen_gaps() {
    let fish = skip_unless!(fish_class(), "CIFAR-100 binary files");
    let measure = SimilarityMeasure::Ssim {
        params: SsimParams::default(),
    };
    let sim = similarity_matrix(&fish, &measure).expect("ssim matrix");
    let spectrum = laplacian_spectrum(&sim, LaplacianKind::Unnormalized).expect("spectrum");
    let n_c = eigen_gap_count(&spectrum.eigenvalues, 0.4);
    println!(
        "eigen-gap count at gamma 0.4: {n_c} (clamped {} negative entries)",
        spectrum.clamped_count
    );
    assert!(
        (409..=499).contains(&n_c),
        "n_c = {n_c} outside 454 +/- 45"
    );
    let counts: Vec<usize> = [0.2, 0.4, 0.6]
        .iter()
        .map(|&g| eigen_gap_count(&spectrum.eigenvalues, g))
        .collect();
    println!("gamma sweep {{0.2, 0.4, 0.6}} -> {counts:?}");
    assert!(counts[0] >= counts[1] && counts[1] >= counts[2], "not monotone");
}

// ---------------------------------------------------------------------------
// criterion 7: cross-set near-identical fraction
// ---------------------------------------------------------------------------
#[test]
fn criterion_07_cross_set_fraction() {
    let dir = skip_unless!(cifar100_dir(), "CIFAR-100 binary files");
    let train = skip_unless!(fish_class(), "CIFAR-100 binary files");
    let test_full = load_cifar100(dir, Cifar100LabelMode::Fine, Split::Test).expect("test parses");
    let fish_idx = test_full.class_index("aquarium_fish").expect("class");
    let test = test_full.filter_class(fish_idx).expect("nonempty");
    assert_eq!(test.len(), 100, "fish class should hold 100 test images");

    let measure = SimilarityMeasure::Ssim {
        params: SsimParams::default(),
    };
    let analysis = cross_set_report(&train, &test, &measure, 0.9).expect("cross report");
    assert_eq!(analysis.similarity.values.rows(), 100);
    assert_eq!(analysis.similarity.values.cols(), 500);

    let mut matched = None;
    let mut threshold = 0.80;
    while threshold <= 0.9501 {
        let fraction = analysis
            .report
            .matches
            .iter()
            .filter(|m| m.best_similarity >= threshold)
            .count() as f64
            / test.len() as f64;
        if (fraction - 0.11).abs() <= 0.03 {
            matched = Some((threshold, fraction));
            break;
        }
        threshold += 0.005;
    }
    match matched {
        Some((t, f)) => println!("matched threshold {t:.3} with fraction {f:.3}"),
        None => panic!("no threshold in [0.80, 0.95] yields 11% +/- 3 points"),
    }
}

// ---------------------------------------------------------------------------
// criterion 8: always-on property suite
// ---------------------------------------------------------------------------
#[test]
fn criterion_08_property_suite() {
    property_wavelet_reconstruction_and_parseval();
    property_qr_diagonal_and_reconstruction();
    property_laplacian_psd_and_components();
    property_spectral_recovers_planted_blocks();
    property_kmeans_matches_brute_force();
    property_dedupe_threshold_refinement();
    property_report_invariants_with_planted_duplicates();
    println!("property suite: 7/7 sections passed");
}

fn random_plane(h: usize, w: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    DenseMatrix::from_vec(h, w, (0..h * w).map(|_| rng.random::<f64>()).collect()).unwrap()
}

fn property_wavelet_reconstruction_and_parseval() {
    let mut rng = ChaCha8Rng::seed_from_u64(801);
    for &basis in &[WaveletBasis::Haar, WaveletBasis::Db2] {
        for &size in &[4usize, 28, 32, 64] {
            for levels in 1..=3u32 {
                let plane = random_plane(size, size, &mut rng);
                let (grid, eff) = dwt2(&plane, basis, levels).unwrap();
                let back = idwt2(&grid, basis, eff).unwrap();
                let mut max_err = 0.0f64;
                let mut energy_in = 0.0;
                let mut energy_out = 0.0;
                for i in 0..size {
                    for j in 0..size {
                        max_err = max_err.max((back.get(i, j) - plane.get(i, j)).abs());
                        energy_in += plane.get(i, j).powi(2);
                        energy_out += grid.get(i, j).powi(2);
                    }
                }
                assert!(max_err < 1e-10, "reconstruction {max_err} at {size} L{levels}");
                assert!(
                    (energy_in - energy_out).abs() < 1e-9 * energy_in,
                    "parseval violated at {size} L{levels}"
                );
            }
        }
    }
}

fn property_qr_diagonal_and_reconstruction() {
    let mut rng = ChaCha8Rng::seed_from_u64(802);
    for case in 0..10 {
        let (n, d) = (20 + case, 8 + case % 5);
        let mut m = random_plane(n, d, &mut rng);
        if case % 3 == 0 {
            // plant a dependent column
            for i in 0..n {
                let v = 0.5 * m.get(i, 0) - 2.0 * m.get(i, 1);
                m.set(i, d - 1, v);
            }
        }
        let qr = pivoted_qr_with_factors(&m, 0.0).unwrap();
        for w in qr.r_diagonal.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "r-diagonal increased");
        }
        let q = qr.q.as_ref().unwrap();
        let r = qr.r.as_ref().unwrap();
        let rec = q.matmul(r).unwrap();
        let mut err2 = 0.0;
        let mut norm2 = 0.0;
        for i in 0..n {
            for (jj, &j) in qr.permutation.iter().enumerate() {
                err2 += (rec.get(i, jj) - m.get(i, j)).powi(2);
                norm2 += m.get(i, j).powi(2);
            }
        }
        assert!(
            err2.sqrt() / norm2.sqrt() < 1e-10,
            "reconstruction error {}",
            err2.sqrt() / norm2.sqrt()
        );
    }
}

fn planted_block_similarity(
    sizes: &[usize],
    rng: &mut ChaCha8Rng,
) -> (SimilarityMatrix, Vec<usize>) {
    let n: usize = sizes.iter().sum();
    let mut block_of = Vec::with_capacity(n);
    for (b, &s) in sizes.iter().enumerate() {
        block_of.extend(std::iter::repeat_n(b, s));
    }
    let mut values = DenseMatrix::zeros(n, n);
    for i in 0..n {
        values.set(i, i, 1.0);
        for j in (i + 1)..n {
            let v = if block_of[i] == block_of[j] {
                0.6 + 0.4 * rng.random::<f64>()
            } else {
                0.0
            };
            values.set(i, j, v);
            values.set(j, i, v);
        }
    }
    let sim = SimilarityMatrix {
        values,
        row_ids: (0..n).map(|i| format!("n{i}")).collect(),
        col_ids: (0..n).map(|i| format!("n{i}")).collect(),
        measure: "synthetic".into(),
        symmetric: true,
    };
    (sim, block_of)
}

/// Independent component count over the positive-similarity graph.
fn component_oracle(sim: &SimilarityMatrix) -> usize {
    let n = sim.n();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let root = find(parent, parent[x]);
            parent[x] = root;
        }
        parent[x]
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if sim.values.get(i, j) > 0.0 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    (0..n)
        .map(|i| find(&mut parent, i))
        .collect::<std::collections::HashSet<_>>()
        .len()
}

fn property_laplacian_psd_and_components() {
    let mut rng = ChaCha8Rng::seed_from_u64(803);
    for case in 0..20 {
        let blocks: Vec<usize> = (0..2 + case % 4).map(|_| 2 + rng.random_range(0..4)).collect();
        let (sim, _) = planted_block_similarity(&blocks, &mut rng);
        let spectrum = laplacian_spectrum(&sim, LaplacianKind::Unnormalized).unwrap();
        for &l in &spectrum.eigenvalues {
            assert!(l >= -1e-10, "negative eigenvalue {l}");
        }
        let zeros = spectrum.eigenvalues.iter().filter(|l| l.abs() < 1e-8).count();
        assert_eq!(zeros, component_oracle(&sim), "case {case}");
    }
}

fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0usize; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let choose2 = |x: usize| (x * x.saturating_sub(1)) as f64 / 2.0;
    let sum_ij: f64 = table.iter().flatten().map(|&c| choose2(c)).sum();
    let sum_a: f64 = table.iter().map(|row| choose2(row.iter().sum())).sum();
    let sum_b: f64 = (0..kb)
        .map(|j| choose2(table.iter().map(|row| row[j]).sum()))
        .sum();
    let total = choose2(n);
    let expected = sum_a * sum_b / total;
    let max = 0.5 * (sum_a + sum_b);
    (sum_ij - expected) / (max - expected)
}

fn property_spectral_recovers_planted_blocks() {
    let mut rng = ChaCha8Rng::seed_from_u64(804);
    for &k in &[2usize, 3, 5] {
        let blocks: Vec<usize> = (0..k).map(|_| 3 + rng.random_range(0..3)).collect();
        let (sim, truth) = planted_block_similarity(&blocks, &mut rng);
        for seed in [0u64, 1, 2] {
            let assignment = spectral_clustering(
                &sim,
                k,
                LaplacianKind::Unnormalized,
                &KmeansOptions {
                    seed,
                    restarts: 4,
                    ..Default::default()
                },
            )
            .unwrap();
            let ari = adjusted_rand_index(&assignment.cluster_of, &truth);
            assert!(
                (ari - 1.0).abs() < 1e-12,
                "ARI {ari} for k={k} seed {seed}"
            );
        }
    }
}

fn property_kmeans_matches_brute_force() {
    // every non-decreasing 4-point instance on an 8-point grid
    let grid: Vec<f64> = (0..8).map(|v| v as f64).collect();
    let mut instances = 0usize;
    for a in 0..8 {
        for b in a..8 {
            for c in b..8 {
                for d in c..8 {
                    let points =
                        DenseMatrix::from_vec(4, 1, vec![grid[a], grid[b], grid[c], grid[d]]).unwrap();
                    let distinct = {
                        let mut v = vec![grid[a], grid[b], grid[c], grid[d]];
                        v.dedup();
                        v.len()
                    };
                    if distinct < 2 {
                        continue;
                    }
                    let result = kmeans(
                        &points,
                        2,
                        &KmeansOptions {
                            seed: 0,
                            max_iters: 100,
                            restarts: 16,
                        },
                    )
                    .unwrap();
                    let best = brute_force_inertia(&points, 2);
                    let got = result.inertia.unwrap();
                    assert!(
                        got <= best + 1e-9,
                        "suboptimal partition for {:?}: {got} > {best}",
                        points.values()
                    );
                    instances += 1;
                }
            }
        }
    }
    assert!(instances > 300, "only {instances} instances enumerated");
}

fn brute_force_inertia(points: &DenseMatrix, k: usize) -> f64 {
    let n = points.rows();
    let mut best = f64::INFINITY;
    for code in 0..k.pow(n as u32) {
        let mut assignment = Vec::with_capacity(n);
        let mut c = code;
        for _ in 0..n {
            assignment.push(c % k);
            c /= k;
        }
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for (i, &a) in assignment.iter().enumerate() {
            sums[a] += points.get(i, 0);
            counts[a] += 1;
        }
        if counts.iter().any(|&c| c == 0) {
            continue;
        }
        let means: Vec<f64> = sums
            .iter()
            .zip(&counts)
            .map(|(s, &c)| s / c as f64)
            .collect();
        let inertia: f64 = assignment
            .iter()
            .enumerate()
            .map(|(i, &a)| (points.get(i, 0) - means[a]).powi(2))
            .sum();
        best = best.min(inertia);
    }
    best
}

fn property_dedupe_threshold_refinement() {
    let mut rng = ChaCha8Rng::seed_from_u64(806);
    for _ in 0..10 {
        let n = 10 + rng.random_range(0..8);
        let mut values = DenseMatrix::zeros(n, n);
        for i in 0..n {
            values.set(i, i, 1.0);
            for j in (i + 1)..n {
                let v = rng.random::<f64>();
                values.set(i, j, v);
                values.set(j, i, v);
            }
        }
        let sim = SimilarityMatrix {
            values,
            row_ids: (0..n).map(|i| format!("x{i}")).collect(),
            col_ids: (0..n).map(|i| format!("x{i}")).collect(),
            measure: "synthetic".into(),
            symmetric: true,
        };
        let labels = vec![0usize; n];
        let names = vec!["c".to_string()];
        let coarse = dedupe_by_threshold(&sim, &labels, &names, 0.4).unwrap();
        let fine = dedupe_by_threshold(&sim, &labels, &names, 0.75).unwrap();
        let coarse_home: std::collections::HashMap<&str, usize> = coarse
            .redundant_groups
            .iter()
            .enumerate()
            .flat_map(|(g, grp)| grp.members.iter().map(move |m| (m.as_str(), g)))
            .collect();
        for group in &fine.redundant_groups {
            let homes: std::collections::HashSet<Option<&usize>> = group
                .members
                .iter()
                .map(|m| coarse_home.get(m.as_str()))
                .collect();
            assert_eq!(homes.len(), 1, "fine group split across coarse groups");
        }
    }
}

fn synthetic_dataset_with_duplicates(
    seed: u64,
) -> (LabeledDataset, Vec<(String, String, bool)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_distinct = 14;
    let mut images: Vec<ImageTensor> = (0..n_distinct)
        .map(|_| {
            let pixels: Vec<f64> = (0..64).map(|_| rng.random::<f64>()).collect();
            ImageTensor::new(8, 8, 1, pixels).unwrap()
        })
        .collect();
    let mut labels: Vec<usize> = (0..n_distinct).map(|i| i % 3).collect();
    // one same-label duplicate pair and one cross-label duplicate pair
    let same_src = rng.random_range(0..n_distinct);
    images.push(images[same_src].clone());
    labels.push(labels[same_src]);
    // distinct source so the two planted pairs land in different clusters
    let cross_src = (same_src + 1 + rng.random_range(0..n_distinct - 1)) % n_distinct;
    images.push(images[cross_src].clone());
    labels.push((labels[cross_src] + 1) % 3);

    let ids: Vec<String> = (0..images.len()).map(|i| format!("img{i:02}")).collect();
    let planted = vec![
        (ids[same_src].clone(), ids[n_distinct].clone(), true),
        (ids[cross_src].clone(), ids[n_distinct + 1].clone(), false),
    ];
    let ds = LabeledDataset::new(
        images,
        labels,
        vec!["c0".into(), "c1".into(), "c2".into()],
        ids,
    )
    .unwrap();
    (ds, planted)
}

fn property_report_invariants_with_planted_duplicates() {
    for seed in 0..100u64 {
        let (ds, planted) = synthetic_dataset_with_duplicates(seed);
        let report = wavelet_cluster_analysis(
            &ds,
            &WaveletClusterOptions {
                basis: WaveletBasis::Haar,
                n_c: Some(14),
                seed,
                kmeans_restarts: 2,
                ..Default::default()
            },
        )
        .unwrap();
        report.validate(&ds.source_ids, &ds.labels).unwrap();
        for (a, b, same_label) in &planted {
            let recalled = if *same_label {
                report
                    .redundant_groups
                    .iter()
                    .any(|g| g.members.contains(a) && g.members.contains(b))
            } else {
                report
                    .influential_groups
                    .iter()
                    .any(|g| g.members.contains(a) && g.members.contains(b))
            };
            assert!(recalled, "seed {seed}: planted pair {a}/{b} not recalled");
        }
    }
}

// ---------------------------------------------------------------------------
// criterion 9: byte-identical reports at worker counts 1 and 8
// ---------------------------------------------------------------------------
#[test]
fn criterion_09_determinism_across_worker_counts() {
    let (ds, _) = synthetic_dataset_with_duplicates(900);
    let alg1_opts = WaveletClusterOptions {
        basis: WaveletBasis::Haar,
        n_c: Some(14),
        seed: 3,
        ..Default::default()
    };
    let alg2_opts = SpectralOptions {
        measure: SimilarityMeasure::Gaussian {
            basis: WaveletBasis::Haar,
            levels: 2,
            sigma: None,
        },
        seed: 3,
        ..Default::default()
    };
    let run_all = || {
        let a = wavelet_cluster_analysis(&ds, &alg1_opts).unwrap().canonical_json();
        let spectral = spectral_similarity_analysis(&ds, &alg2_opts).unwrap();
        let b = spectral.report.canonical_json();
        let c = dedupe_by_threshold(&spectral.similarity, &ds.labels, &ds.class_names, 0.95)
            .unwrap()
            .canonical_json();
        let d = cross_set_report(
            &ds,
            &ds,
            &SimilarityMeasure::Ssim {
                params: SsimParams {
                    window_size: 7,
                    ..Default::default()
                },
            },
            0.9,
        )
        .unwrap()
        .report
        .canonical_json();
        (a, b, c, d)
    };
    let single = with_workers(Some(1), run_all);
    let eight = with_workers(Some(8), run_all);
    assert_eq!(single.0, eight.0, "alg1 differs across worker counts");
    assert_eq!(single.1, eight.1, "alg2 differs across worker counts");
    assert_eq!(single.2, eight.2, "dedupe differs across worker counts");
    assert_eq!(single.3, eight.3, "cross differs across worker counts");
    println!("4 pipelines byte-identical at workers 1 and 8");
}

// ---------------------------------------------------------------------------
// criterion 10: wavelet-cluster analysis on a 500-image class within 60 s
// ---------------------------------------------------------------------------
#[test]
fn criterion_10_performance_500_image_class() {
    let opts = WaveletClusterOptions {
        basis: WaveletBasis::Db2,
        selection: SelectionMode::Always,
        method: ClusteringMethod::Kmeans,
        n_c: Some(470),
        ..Default::default()
    };

    // same computational shape as the real class: 500 images of 32x32x3
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let images: Vec<ImageTensor> = (0..500)
        .map(|_| {
            let pixels: Vec<f64> = (0..3 * 32 * 32).map(|_| rng.random::<f64>()).collect();
            ImageTensor::new(32, 32, 3, pixels).unwrap()
        })
        .collect();
    let synthetic = LabeledDataset::new(
        images,
        vec![0; 500],
        vec!["c".into()],
        (0..500).map(|i| format!("s{i:03}")).collect(),
    )
    .unwrap();
    let start = Instant::now();
    let report = with_workers(Some(1), || wavelet_cluster_analysis(&synthetic, &opts)).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    println!("synthetic 500-image class, single-threaded: {elapsed:.1}s");
    report.validate(&synthetic.source_ids, &synthetic.labels).unwrap();
    assert!(elapsed < 60.0, "synthetic proxy took {elapsed:.1}s");

    match fish_class() {
        Some(fish) => {
            let start = Instant::now();
            let report = with_workers(Some(1), || wavelet_cluster_analysis(&fish, &opts)).unwrap();
            let elapsed = start.elapsed().as_secs_f64();
            println!("aquarium-fish class, single-threaded: {elapsed:.1}s");
            report.validate(&fish.source_ids, &fish.labels).unwrap();
            assert!(elapsed < 60.0, "fish class took {elapsed:.1}s");
        }
        None => println!(
            "SKIPPED real-data half: CIFAR-100 not found under {} (synthetic proxy passed)",
            data_root().display()
        ),
    }
}

// ---------------------------------------------------------------------------
// supporting check: the numerics stack is consistent on a PSD spectrum
// ---------------------------------------------------------------------------
#[test]
fn supporting_eigensolver_cross_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let a = random_plane(30, 6, &mut rng);
    let gram = simscan::numerics::gram_matrix(&a);
    let eigs = symmetric_eigenvalues(&gram).unwrap();
    let trace: f64 = (0..gram.rows()).map(|i| gram.get(i, i)).sum();
    let sum: f64 = eigs.iter().sum();
    assert!((sum - trace).abs() < 1e-8 * trace.abs());
    assert!(eigs.iter().all(|&l| l >= -1e-10));
}
