//! End-to-end analyses: wavelet-coefficient clustering, similarity-matrix
//! spectral clustering, threshold dedupe, and cross-set generalization
//! reports. Each run partitions multi-member clusters into redundant groups
//! (uniform label, one representative kept) and influential groups (mixed
//! labels, all kept).

use std::collections::{BTreeMap, HashMap, HashSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{eigen_gap_count, laplacian_spectrum, spectral_embedding, LaplacianKind, LaplacianSpectrum};
use crate::ingest::LabeledDataset;
use crate::matrix::{squared_distance, DenseMatrix};
use crate::numerics::{agglomerative_threshold, kmeans, select_columns, ClusterAssignment, KmeansOptions};
use crate::similarity::{cross_similarity, similarity_matrix, SimilarityMatrix, SimilarityMeasure};
use crate::wavelet::{decompose_dataset, WaveletBasis};

/// k-means above this cluster count is impractical; the pipeline substitutes
/// threshold clustering and records the substitution as a warning.
const KMEANS_NC_LIMIT: usize = 10_000;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RedundantGroup {
    pub members: Vec<String>,
    pub label: usize,
    pub label_name: String,
    pub representative: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct InfluentialGroup {
    pub members: Vec<String>,
    pub labels: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub redundant_groups: Vec<RedundantGroup>,
    pub influential_groups: Vec<InfluentialGroup>,
    /// Source ids of the reduced training set, in dataset order.
    pub kept_ids: Vec<String>,
    /// Effective configuration echo.
    pub parameters: serde_json::Value,
    /// Per-stage wall-clock seconds; excluded from determinism digests.
    pub timings: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

impl AnalysisReport {
    /// Pretty JSON with stable (alphabetical) key order and timings cleared,
    /// suitable for byte-for-byte reproducibility comparisons.
    pub fn canonical_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("report serializes");
        value["timings"] = serde_json::json!({});
        serde_json::to_string_pretty(&value).expect("value serializes")
    }

    /// Check the partition invariants against the originating dataset.
    pub fn validate(&self, ids: &[String], labels: &[usize]) -> Result<()> {
        let fail = |reason: String| Error::NumericalFailure {
            context: "analysis report invariants",
            reason,
        };
        let index_of: HashMap<&str, usize> = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let kept: HashSet<&str> = self.kept_ids.iter().map(String::as_str).collect();
        if kept.len() != self.kept_ids.len() {
            return Err(fail("duplicate kept ids".into()));
        }
        let mut grouped: HashSet<&str> = HashSet::new();
        let mut dropped = 0usize;
        for group in &self.redundant_groups {
            if group.members.len() < 2 {
                return Err(fail("redundant group with fewer than 2 members".into()));
            }
            if !group.members.contains(&group.representative) {
                return Err(fail("representative outside its group".into()));
            }
            for member in &group.members {
                let &idx = index_of
                    .get(member.as_str())
                    .ok_or_else(|| fail(format!("unknown member {member}")))?;
                if labels[idx] != group.label {
                    return Err(fail(format!("mixed label in redundant group ({member})")));
                }
                if !grouped.insert(member.as_str()) {
                    return Err(fail(format!("{member} appears in two groups")));
                }
                let is_rep = member == &group.representative;
                if is_rep != kept.contains(member.as_str()) {
                    return Err(fail(format!("kept set inconsistent for {member}")));
                }
            }
            dropped += group.members.len() - 1;
        }
        for group in &self.influential_groups {
            if group.members.len() < 2 {
                return Err(fail("influential group with fewer than 2 members".into()));
            }
            let distinct: HashSet<usize> = group.labels.iter().copied().collect();
            if distinct.len() < 2 {
                return Err(fail("influential group without label diversity".into()));
            }
            for (member, &label) in group.members.iter().zip(&group.labels) {
                let &idx = index_of
                    .get(member.as_str())
                    .ok_or_else(|| fail(format!("unknown member {member}")))?;
                if labels[idx] != label {
                    return Err(fail(format!("label mismatch for {member}")));
                }
                if !grouped.insert(member.as_str()) {
                    return Err(fail(format!("{member} appears in two groups")));
                }
                if !kept.contains(member.as_str()) {
                    return Err(fail(format!("influential member {member} not kept")));
                }
            }
        }
        for id in ids {
            if !grouped.contains(id.as_str()) && !kept.contains(id.as_str()) {
                return Err(fail(format!("singleton {id} missing from kept set")));
            }
        }
        if self.kept_ids.len() != ids.len() - dropped {
            return Err(fail(format!(
                "kept count {} != n - dropped = {}",
                self.kept_ids.len(),
                ids.len() - dropped
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMode {
    /// Apply RRQR selection only when n > d.
    Auto,
    Always,
    Never,
}

impl SelectionMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(SelectionMode::Auto),
            "always" => Ok(SelectionMode::Always),
            "never" => Ok(SelectionMode::Never),
            other => Err(Error::invalid(
                "selection.mode",
                format!("unknown mode {other:?} (expected auto, always, or never)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusteringMethod {
    Kmeans,
    Agglomerative,
    Spectral,
}

impl ClusteringMethod {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kmeans" => Ok(ClusteringMethod::Kmeans),
            "agglomerative" => Ok(ClusteringMethod::Agglomerative),
            "spectral" => Ok(ClusteringMethod::Spectral),
            other => Err(Error::invalid(
                "clustering.method",
                format!("unknown method {other:?} (expected kmeans, agglomerative, or spectral)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WaveletClusterOptions {
    pub basis: WaveletBasis,
    pub levels: u32,
    pub tau: f64,
    pub stop_ratio: f64,
    pub selection: SelectionMode,
    pub method: ClusteringMethod,
    /// Cluster count; `None` derives it from the eigen-gaps of a
    /// Gaussian-kernel similarity over the selected coefficients.
    pub n_c: Option<usize>,
    pub gamma: f64,
    pub sigma: Option<f64>,
    pub laplacian: LaplacianKind,
    pub distance_cutoff: f64,
    pub seed: u64,
    pub kmeans_max_iters: usize,
    pub kmeans_restarts: usize,
}

impl Default for WaveletClusterOptions {
    fn default() -> Self {
        Self {
            basis: WaveletBasis::Db2,
            levels: 2,
            tau: 1e5,
            stop_ratio: 1e-5,
            selection: SelectionMode::Auto,
            method: ClusteringMethod::Kmeans,
            n_c: None,
            gamma: 0.4,
            sigma: None,
            laplacian: LaplacianKind::Unnormalized,
            distance_cutoff: 0.0,
            seed: 0,
            kmeans_max_iters: 100,
            kmeans_restarts: 1,
        }
    }
}

fn time_stage<T>(
    timings: &mut BTreeMap<String, f64>,
    stage: &'static str,
    f: impl FnOnce() -> Result<T>,
) -> Result<T> {
    let start = Instant::now();
    let out = f().map_err(Error::stage(stage))?;
    timings.insert(stage.to_string(), start.elapsed().as_secs_f64());
    Ok(out)
}

fn trivial_report(dataset: &LabeledDataset, parameters: serde_json::Value, timings: BTreeMap<String, f64>) -> AnalysisReport {
    AnalysisReport {
        redundant_groups: Vec::new(),
        influential_groups: Vec::new(),
        kept_ids: dataset.source_ids.clone(),
        parameters,
        timings,
        warnings: Vec::new(),
    }
}

/// Member closest to the member mean in the given feature space; ties break
/// toward the lowest index.
pub fn representative(member_indices: &[usize], feature_rows: &DenseMatrix) -> Result<usize> {
    if member_indices.is_empty() {
        return Err(Error::invalid("members", "representative of an empty group"));
    }
    let d = feature_rows.cols();
    let mut mean = vec![0.0; d];
    for &i in member_indices {
        for (m, v) in mean.iter_mut().zip(feature_rows.row(i)) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= member_indices.len() as f64;
    }
    let mut best = member_indices[0];
    let mut best_d = f64::INFINITY;
    for &i in member_indices {
        let d2 = squared_distance(feature_rows.row(i), &mean);
        if d2 < best_d {
            best_d = d2;
            best = i;
        }
    }
    Ok(best)
}

/// Partition clusters into redundant and influential groups; `pick` chooses
/// the representative index of a uniform-label cluster.
fn partition_clusters(
    clusters: &[Vec<usize>],
    dataset_labels: &[usize],
    ids: &[String],
    class_names: &[String],
    mut pick: impl FnMut(&[usize]) -> Result<usize>,
) -> Result<(Vec<RedundantGroup>, Vec<InfluentialGroup>, Vec<String>)> {
    let mut ordered: Vec<&Vec<usize>> = clusters.iter().filter(|c| !c.is_empty()).collect();
    ordered.sort_by_key(|c| c[0]);

    let mut keep = vec![true; ids.len()];
    let mut redundant = Vec::new();
    let mut influential = Vec::new();
    for cluster in ordered {
        if cluster.len() < 2 {
            continue;
        }
        let first_label = dataset_labels[cluster[0]];
        let uniform = cluster.iter().all(|&i| dataset_labels[i] == first_label);
        if uniform {
            let rep = pick(cluster)?;
            for &i in cluster {
                if i != rep {
                    keep[i] = false;
                }
            }
            redundant.push(RedundantGroup {
                members: cluster.iter().map(|&i| ids[i].clone()).collect(),
                label: first_label,
                label_name: class_names
                    .get(first_label)
                    .cloned()
                    .unwrap_or_else(|| first_label.to_string()),
                representative: ids[rep].clone(),
            });
        } else {
            influential.push(InfluentialGroup {
                members: cluster.iter().map(|&i| ids[i].clone()).collect(),
                labels: cluster.iter().map(|&i| dataset_labels[i]).collect(),
            });
        }
    }
    let kept_ids = ids
        .iter()
        .enumerate()
        .filter(|&(i, _)| keep[i])
        .map(|(_, id)| id.clone())
        .collect();
    Ok((redundant, influential, kept_ids))
}

/// Wavelet-coefficient clustering analysis (CLI subcommand `alg1`):
/// decompose, select independent coefficient columns, cluster, and partition
/// clusters into redundant and influential groups.
pub fn wavelet_cluster_analysis(
    dataset: &LabeledDataset,
    opts: &WaveletClusterOptions,
) -> Result<AnalysisReport> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset {
            context: "wavelet_cluster_analysis".into(),
        });
    }
    let mut timings = BTreeMap::new();
    let mut warnings = Vec::new();
    let n = dataset.len();

    let coeffs = time_stage(&mut timings, "decompose", || {
        decompose_dataset(dataset, opts.basis, opts.levels)
    })?;
    let d = coeffs.values.cols();

    let mut parameters = serde_json::json!({
        "analysis": "wavelet-cluster",
        "options": opts,
        "n": n,
        "d": d,
        "levels_effective": coeffs.levels,
    });
    if n == 1 {
        return Ok(trivial_report(dataset, parameters, timings));
    }

    let select = match opts.selection {
        SelectionMode::Auto => n > d,
        SelectionMode::Always => true,
        SelectionMode::Never => false,
    };
    let features = if select {
        let selection = time_stage(&mut timings, "select", || select_columns(&coeffs.values, opts.tau))?;
        let mut reduced = DenseMatrix::zeros(n, selection.m);
        for i in 0..n {
            let src = coeffs.values.row(i);
            let dst = reduced.row_mut(i);
            for (jj, &j) in selection.column_indices.iter().enumerate() {
                dst[jj] = src[j];
            }
        }
        parameters["selected_m"] = serde_json::json!(selection.m);
        parameters["zero_variance_columns"] = serde_json::json!(selection.zero_variance_columns.len());
        reduced
    } else {
        coeffs.values.clone()
    };

    let mut method = opts.method;
    let n_c = match (method, opts.n_c) {
        (ClusteringMethod::Agglomerative, _) => None,
        (_, Some(n_c)) => {
            if n_c == 0 || n_c > n {
                return Err(Error::invalid("n_c", format!("{n_c} clusters for {n} images")));
            }
            Some(n_c)
        }
        (_, None) => {
            let derived = time_stage(&mut timings, "estimate_n_c", || {
                let sim = crate::similarity::gaussian_from_rows(&features, &dataset.source_ids, opts.sigma)?;
                let spectrum = laplacian_spectrum(&sim, opts.laplacian)?;
                Ok(eigen_gap_count(&spectrum.eigenvalues, opts.gamma))
            })?;
            Some(derived.min(n))
        }
    };
    parameters["n_c_effective"] = serde_json::json!(n_c);

    if method == ClusteringMethod::Kmeans {
        if let Some(n_c) = n_c {
            if n_c > KMEANS_NC_LIMIT {
                warnings.push(format!(
                    "k-means with n_c = {n_c} is impractical; substituted agglomerative_threshold(distance_cutoff = {})",
                    opts.distance_cutoff
                ));
                method = ClusteringMethod::Agglomerative;
            }
        }
    }

    let kmeans_opts = KmeansOptions {
        seed: opts.seed,
        max_iters: opts.kmeans_max_iters,
        restarts: opts.kmeans_restarts,
    };
    let assignment: ClusterAssignment = time_stage(&mut timings, "cluster", || match method {
        ClusteringMethod::Kmeans => kmeans(&features, n_c.expect("n_c resolved"), &kmeans_opts),
        ClusteringMethod::Agglomerative => agglomerative_threshold(&features, opts.distance_cutoff),
        ClusteringMethod::Spectral => {
            let sim = crate::similarity::gaussian_from_rows(&features, &dataset.source_ids, opts.sigma)?;
            crate::graph::spectral_clustering(&sim, n_c.expect("n_c resolved"), opts.laplacian, &kmeans_opts)
        }
    })?;
    parameters["clusters_found"] = serde_json::json!(assignment.k);

    let (redundant_groups, influential_groups, kept_ids) = time_stage(&mut timings, "partition", || {
        partition_clusters(
            &assignment.groups(),
            &dataset.labels,
            &dataset.source_ids,
            &dataset.class_names,
            |members| representative(members, &features),
        )
    })?;

    let report = AnalysisReport {
        redundant_groups,
        influential_groups,
        kept_ids,
        parameters,
        timings,
        warnings,
    };
    report.validate(&dataset.source_ids, &dataset.labels)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralOptions {
    pub measure: SimilarityMeasure,
    pub gamma: f64,
    /// Skip the eigen-gap rule and use this cluster count directly.
    pub n_c_override: Option<usize>,
    pub laplacian: LaplacianKind,
    pub seed: u64,
    pub kmeans_max_iters: usize,
    pub kmeans_restarts: usize,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            measure: SimilarityMeasure::Ssim {
                params: crate::similarity::SsimParams::default(),
            },
            gamma: 0.4,
            n_c_override: None,
            laplacian: LaplacianKind::Unnormalized,
            seed: 0,
            kmeans_max_iters: 100,
            kmeans_restarts: 1,
        }
    }
}

#[derive(Debug)]
pub struct SpectralAnalysis {
    pub report: AnalysisReport,
    pub similarity: SimilarityMatrix,
    pub spectrum: LaplacianSpectrum,
    pub n_c: usize,
}

/// Similarity-matrix spectral analysis (CLI subcommand `alg2`): build the
/// pairwise similarity matrix, pick the cluster count from Laplacian
/// eigen-gaps unless overridden, spectrally cluster, and partition.
pub fn spectral_similarity_analysis(
    dataset: &LabeledDataset,
    opts: &SpectralOptions,
) -> Result<SpectralAnalysis> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset {
            context: "spectral_similarity_analysis".into(),
        });
    }
    let mut timings = BTreeMap::new();
    let n = dataset.len();
    let mut parameters = serde_json::json!({
        "analysis": "spectral-similarity",
        "options": opts,
        "n": n,
    });

    if n == 1 {
        let similarity = SimilarityMatrix {
            values: DenseMatrix::identity(1),
            row_ids: dataset.source_ids.clone(),
            col_ids: dataset.source_ids.clone(),
            measure: opts.measure.name().to_string(),
            symmetric: true,
        };
        let spectrum = LaplacianSpectrum {
            eigenvalues: vec![0.0],
            n: 1,
            construction: opts.laplacian,
            clamped_count: 0,
        };
        parameters["n_c_effective"] = serde_json::json!(1);
        let report = trivial_report(dataset, parameters, timings);
        return Ok(SpectralAnalysis {
            report,
            similarity,
            spectrum,
            n_c: 1,
        });
    }

    let similarity = time_stage(&mut timings, "similarity", || {
        similarity_matrix(dataset, &opts.measure)
    })?;
    let spectrum = time_stage(&mut timings, "spectrum", || {
        laplacian_spectrum(&similarity, opts.laplacian)
    })?;
    let n_c = match opts.n_c_override {
        Some(n_c) => {
            if n_c == 0 || n_c > n {
                return Err(Error::invalid("n_c", format!("{n_c} clusters for {n} images")));
            }
            n_c
        }
        None => eigen_gap_count(&spectrum.eigenvalues, opts.gamma).min(n),
    };
    parameters["n_c_effective"] = serde_json::json!(n_c);
    parameters["clamped_negative_similarities"] = serde_json::json!(spectrum.clamped_count);

    let kmeans_opts = KmeansOptions {
        seed: opts.seed,
        max_iters: opts.kmeans_max_iters,
        restarts: opts.kmeans_restarts,
    };
    let embedding = time_stage(&mut timings, "embed", || {
        spectral_embedding(&similarity, n_c, opts.laplacian)
    })?;
    let assignment = time_stage(&mut timings, "cluster", || kmeans(&embedding, n_c, &kmeans_opts))?;

    let (redundant_groups, influential_groups, kept_ids) = time_stage(&mut timings, "partition", || {
        partition_clusters(
            &assignment.groups(),
            &dataset.labels,
            &dataset.source_ids,
            &dataset.class_names,
            |members| representative(members, &embedding),
        )
    })?;

    let report = AnalysisReport {
        redundant_groups,
        influential_groups,
        kept_ids,
        parameters,
        timings,
        warnings: Vec::new(),
    };
    report.validate(&dataset.source_ids, &dataset.labels)?;
    Ok(SpectralAnalysis {
        report,
        similarity,
        spectrum,
        n_c,
    })
}

/// Group images whose similarity meets `similarity_threshold` (connected
/// components of the thresholded graph) and keep one representative per
/// uniform-label group: the member with the highest total within-group
/// similarity.
pub fn dedupe_by_threshold(
    similarity: &SimilarityMatrix,
    labels: &[usize],
    class_names: &[String],
    similarity_threshold: f64,
) -> Result<AnalysisReport> {
    if !similarity.symmetric {
        return Err(Error::NotSymmetric { deviation: f64::NAN });
    }
    if !(-1.0..=1.0).contains(&similarity_threshold) || similarity_threshold == -1.0 {
        return Err(Error::invalid(
            "similarity_threshold",
            format!("{similarity_threshold} (must lie in (-1, 1])"),
        ));
    }
    let n = similarity.n();
    if labels.len() != n {
        return Err(Error::ShapeMismatch {
            context: "dedupe labels",
            expected: format!("{n} labels"),
            actual: format!("{} labels", labels.len()),
        });
    }
    let mut timings = BTreeMap::new();
    let mut warnings = Vec::new();

    let assignment = time_stage(&mut timings, "components", || {
        let mut sets = crate::numerics::DisjointSet::new(n);
        for i in 0..n {
            for j in (i + 1)..n {
                if similarity.values.get(i, j) >= similarity_threshold {
                    sets.union(i, j);
                }
            }
        }
        let (cluster_of, k) = sets.labels();
        Ok(ClusterAssignment {
            cluster_of,
            k,
            centroids: None,
            inertia: None,
        })
    })?;
    if assignment.k == 1 && n > 1 {
        warnings.push(format!(
            "threshold {similarity_threshold} merges every image into one group; it is at or below the minimum pairwise similarity"
        ));
    }

    let (redundant_groups, influential_groups, kept_ids) = time_stage(&mut timings, "partition", || {
        partition_clusters(
            &assignment.groups(),
            labels,
            &similarity.row_ids,
            class_names,
            |members| {
                // highest total within-group similarity, lowest index on ties
                let mut best = members[0];
                let mut best_total = f64::NEG_INFINITY;
                for &i in members {
                    let total: f64 = members
                        .iter()
                        .filter(|&&j| j != i)
                        .map(|&j| similarity.values.get(i, j))
                        .sum();
                    if total > best_total {
                        best_total = total;
                        best = i;
                    }
                }
                Ok(best)
            },
        )
    })?;

    let parameters = serde_json::json!({
        "analysis": "dedupe-threshold",
        "similarity_threshold": similarity_threshold,
        "measure": similarity.measure,
        "n": n,
        "groups_found": assignment.k,
    });
    let report = AnalysisReport {
        redundant_groups,
        influential_groups,
        kept_ids,
        parameters,
        timings,
        warnings,
    };
    report.validate(&similarity.row_ids, labels)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct TestMatch {
    pub test_id: String,
    pub test_label: usize,
    pub best_train_id: String,
    pub best_train_label: usize,
    pub best_similarity: f64,
    /// Highest similarity to a train image sharing the test label.
    pub best_same_label: Option<f64>,
    /// Highest similarity to a train image with a different label.
    pub best_cross_label: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossSetReport {
    /// One entry per test image, in test-set order.
    pub matches: Vec<TestMatch>,
    pub near_identical_threshold: f64,
    /// Fraction of test images whose best train similarity meets the
    /// threshold.
    pub near_identical_fraction: f64,
    /// Test ids ranked by ascending best similarity (most dissimilar first).
    pub dissimilarity_ranking: Vec<String>,
    /// Test ids whose best cross-label train match exceeds their best
    /// same-label match.
    pub cross_label_affinity: Vec<String>,
    pub parameters: serde_json::Value,
    pub timings: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug)]
pub struct CrossSetAnalysis {
    pub report: CrossSetReport,
    pub similarity: SimilarityMatrix,
}

/// Train-vs-test generalization diagnostics over the cross-set similarity
/// matrix.
pub fn cross_set_report(
    train: &LabeledDataset,
    test: &LabeledDataset,
    measure: &SimilarityMeasure,
    near_identical_threshold: f64,
) -> Result<CrossSetAnalysis> {
    let mut timings = BTreeMap::new();
    let similarity = time_stage(&mut timings, "cross_similarity", || {
        cross_similarity(train, test, measure)
    })?;

    let start = Instant::now();
    let mut matches = Vec::with_capacity(test.len());
    for t in 0..test.len() {
        let row = similarity.values.row(t);
        let mut best = 0usize;
        let mut best_same: Option<f64> = None;
        let mut best_cross: Option<f64> = None;
        for (r, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = r;
            }
            let slot = if train.labels[r] == test.labels[t] {
                &mut best_same
            } else {
                &mut best_cross
            };
            if slot.is_none_or(|cur| v > cur) {
                *slot = Some(v);
            }
        }
        matches.push(TestMatch {
            test_id: test.source_ids[t].clone(),
            test_label: test.labels[t],
            best_train_id: train.source_ids[best].clone(),
            best_train_label: train.labels[best],
            best_similarity: row[best],
            best_same_label: best_same,
            best_cross_label: best_cross,
        });
    }
    let near = matches
        .iter()
        .filter(|m| m.best_similarity >= near_identical_threshold)
        .count();
    let mut order: Vec<usize> = (0..matches.len()).collect();
    order.sort_by(|&a, &b| {
        matches[a]
            .best_similarity
            .total_cmp(&matches[b].best_similarity)
            .then(a.cmp(&b))
    });
    let dissimilarity_ranking = order.iter().map(|&i| matches[i].test_id.clone()).collect();
    let cross_label_affinity = matches
        .iter()
        .filter(|m| match (m.best_cross_label, m.best_same_label) {
            (Some(cross), Some(same)) => cross > same,
            (Some(_), None) => true,
            _ => false,
        })
        .map(|m| m.test_id.clone())
        .collect();
    timings.insert("rank".to_string(), start.elapsed().as_secs_f64());

    let report = CrossSetReport {
        near_identical_fraction: near as f64 / test.len().max(1) as f64,
        near_identical_threshold,
        matches,
        dissimilarity_ranking,
        cross_label_affinity,
        parameters: serde_json::json!({
            "analysis": "cross-set",
            "measure": measure,
            "near_identical_threshold": near_identical_threshold,
            "train_n": train.len(),
            "test_n": test.len(),
        }),
        timings,
        warnings: Vec::new(),
    };
    Ok(CrossSetAnalysis { report, similarity })
}

impl CrossSetReport {
    pub fn canonical_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("report serializes");
        value["timings"] = serde_json::json!({});
        serde_json::to_string_pretty(&value).expect("value serializes")
    }
}
