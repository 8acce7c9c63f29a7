//! simscan command line: dataset-similarity analysis producing JSON/CSV/DOT
//! artifacts in an output directory.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use simscan::error::ErrorKind;
use simscan::graph::{export_dot, isolation_scores};
use simscan::ingest::{load_cifar10, load_cifar100, load_image_dir, load_mnist, Split};
use simscan::pipeline::{
    cross_set_report, dedupe_by_threshold, spectral_similarity_analysis, wavelet_cluster_analysis,
    AnalysisReport,
};
use simscan::similarity::similarity_matrix;
use simscan::store;
use simscan::wavelet::decompose_dataset;
use simscan::{with_workers, LabeledDataset};

use config::{RunConfig, CONFIG_HELP};

#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn data(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }
}

impl From<simscan::Error> for CliError {
    fn from(err: simscan::Error) -> Self {
        let code = match err.kind() {
            ErrorKind::Config => 2,
            ErrorKind::Data => 3,
            ErrorKind::Numerical => 4,
        };
        Self {
            code,
            message: err.to_string(),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "simscan",
    version,
    about = "Find redundant and influential images in classification datasets before training",
    after_help = CONFIG_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON config file; command-line flags override its values
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Artifact directory (also via SIMSCAN_OUT)
    #[arg(long, global = true, value_name = "DIR")]
    output_dir: Option<PathBuf>,

    /// Worker threads for internal parallelism (results are identical at
    /// any value)
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Dataset format: cifar10 | cifar100 | mnist | image_dir
    #[arg(long, global = true)]
    dataset_format: Option<String>,

    /// Dataset directory
    #[arg(long, global = true, value_name = "DIR")]
    dataset_path: Option<PathBuf>,

    /// Dataset split: train | test
    #[arg(long, global = true)]
    split: Option<String>,

    /// Restrict to one class (name or index)
    #[arg(long, global = true)]
    class_filter: Option<String>,

    /// CIFAR-100 label set: fine | coarse
    #[arg(long, global = true)]
    label_mode: Option<String>,

    /// image_dir resize height
    #[arg(long, global = true)]
    target_height: Option<usize>,

    /// image_dir resize width
    #[arg(long, global = true)]
    target_width: Option<usize>,

    /// Wavelet basis: haar | db2
    #[arg(long, global = true)]
    basis: Option<String>,

    /// Wavelet decomposition depth
    #[arg(long, global = true)]
    levels: Option<u32>,

    /// Condition ceiling for coefficient-column selection
    #[arg(long, global = true)]
    tau: Option<f64>,

    /// Pivoted-QR early-stop ratio (0 disables)
    #[arg(long, global = true)]
    stop_ratio: Option<f64>,

    /// Column selection: auto | always | never
    #[arg(long, global = true)]
    selection_mode: Option<String>,

    /// Clustering method: kmeans | agglomerative | spectral
    #[arg(long, global = true)]
    method: Option<String>,

    /// Cluster count (omit to use the eigen-gap rule)
    #[arg(long, global = true)]
    n_c: Option<usize>,

    /// Seed for all randomness
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Agglomerative linkage cutoff
    #[arg(long, global = true)]
    distance_cutoff: Option<f64>,

    /// k-means++ restarts
    #[arg(long, global = true)]
    restarts: Option<usize>,

    /// Similarity measure: ssim | cosine | gaussian
    #[arg(long, global = true)]
    measure: Option<String>,

    /// Gaussian-kernel bandwidth (omit for median heuristic)
    #[arg(long, global = true)]
    sigma: Option<f64>,

    /// SSIM window size (odd)
    #[arg(long, global = true)]
    window_size: Option<usize>,

    /// Eigen-gap threshold
    #[arg(long, global = true)]
    gamma: Option<f64>,

    /// Laplacian construction: unnormalized | normalized
    #[arg(long, global = true)]
    laplacian: Option<String>,

    /// DOT export edge threshold in [-1, 1]
    #[arg(long, global = true)]
    edge_threshold: Option<f64>,

    /// Cross-set near-identical threshold
    #[arg(long, global = true)]
    near_identical: Option<f64>,

    /// Dedupe similarity threshold
    #[arg(long, global = true)]
    dedupe_threshold: Option<f64>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Wavelet-coefficient clustering analysis (redundant/influential groups)
    Alg1,
    /// Similarity-matrix spectral analysis with eigen-gap cluster count
    Alg2,
    /// Train-vs-test generalization report over cross-set similarities
    Cross,
    /// O(n^2) threshold dedupe over the similarity matrix
    Dedupe,
    /// Similarity graph: DOT export and isolation ranking
    Graph,
    /// Coefficient-matrix statistics: shape, zero columns, conditioning
    Stats,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    apply_overrides(&mut cfg, &cli);
    let out_dir = resolve_output_dir(&cfg);
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::data(format!("cannot create output dir {}: {e}", out_dir.display())))?;

    let workers = cfg.workers;
    let command = cli.command;
    with_workers(workers, move || match command {
        Command::Alg1 => cmd_alg1(&cfg, &out_dir),
        Command::Alg2 => cmd_alg2(&cfg, &out_dir),
        Command::Cross => cmd_cross(&cfg, &out_dir),
        Command::Dedupe => cmd_dedupe(&cfg, &out_dir),
        Command::Graph => cmd_graph(&cfg, &out_dir),
        Command::Stats => cmd_stats(&cfg, &out_dir),
    })
}

fn apply_overrides(cfg: &mut RunConfig, cli: &Cli) {
    macro_rules! set {
        ($field:expr, $value:expr) => {
            if let Some(v) = &$value {
                $field = v.clone();
            }
        };
    }
    set!(cfg.dataset.format, cli.dataset_format);
    if cli.dataset_path.is_some() {
        cfg.dataset.path = cli.dataset_path.clone();
    }
    set!(cfg.dataset.split, cli.split);
    if cli.class_filter.is_some() {
        cfg.dataset.class_filter = cli.class_filter.clone();
    }
    set!(cfg.dataset.label_mode, cli.label_mode);
    set!(cfg.dataset.target_height, cli.target_height);
    set!(cfg.dataset.target_width, cli.target_width);
    set!(cfg.wavelet.basis, cli.basis);
    set!(cfg.wavelet.levels, cli.levels);
    set!(cfg.selection.tau, cli.tau);
    set!(cfg.selection.stop_ratio, cli.stop_ratio);
    set!(cfg.selection.mode, cli.selection_mode);
    set!(cfg.clustering.method, cli.method);
    if cli.n_c.is_some() {
        cfg.clustering.n_c = cli.n_c;
    }
    set!(cfg.clustering.seed, cli.seed);
    set!(cfg.clustering.distance_cutoff, cli.distance_cutoff);
    set!(cfg.clustering.restarts, cli.restarts);
    set!(cfg.similarity.measure, cli.measure);
    if cli.sigma.is_some() {
        cfg.similarity.sigma = cli.sigma;
    }
    set!(cfg.similarity.window_size, cli.window_size);
    set!(cfg.graph.gamma, cli.gamma);
    set!(cfg.graph.laplacian, cli.laplacian);
    set!(cfg.graph.edge_threshold, cli.edge_threshold);
    set!(cfg.thresholds.near_identical, cli.near_identical);
    set!(cfg.thresholds.dedupe, cli.dedupe_threshold);
    if cli.output_dir.is_some() {
        cfg.output_dir = cli.output_dir.clone();
    }
    if cli.workers.is_some() {
        cfg.workers = cli.workers;
    }
}

fn resolve_output_dir(cfg: &RunConfig) -> PathBuf {
    if let Some(dir) = &cfg.output_dir {
        return dir.clone();
    }
    if let Ok(dir) = std::env::var("SIMSCAN_OUT") {
        if !dir.is_empty() {
            return PathBuf::from(dir);
        }
    }
    PathBuf::from("simscan-out")
}

/// Load the configured dataset; `split` overrides the configured split.
fn load_dataset(cfg: &RunConfig, split: Option<Split>) -> Result<(LabeledDataset, Vec<String>), CliError> {
    let path = cfg
        .dataset
        .path
        .as_ref()
        .ok_or_else(|| CliError::config("dataset not found: dataset.path is not set"))?;
    if !path.exists() {
        return Err(CliError::config(format!(
            "dataset not found: {}",
            path.display()
        )));
    }
    let split = match split {
        Some(s) => s,
        None => cfg.split()?,
    };
    let mut warnings = Vec::new();
    let mut dataset = match cfg.dataset.format.to_ascii_lowercase().as_str() {
        "cifar10" => load_cifar10(path, split)?,
        "cifar100" => load_cifar100(path, cfg.label_mode()?, split)?,
        "mnist" => {
            let (default_images, default_labels) = match split {
                Split::Train => ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
                Split::Test => ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
            };
            let images = path.join(cfg.dataset.images_file.as_deref().unwrap_or(default_images));
            let labels = path.join(cfg.dataset.labels_file.as_deref().unwrap_or(default_labels));
            load_mnist(images, labels)?
        }
        "image_dir" => {
            let (ds, warns) = load_image_dir(path, cfg.dataset.target_height, cfg.dataset.target_width)?;
            warnings = warns;
            ds
        }
        other => {
            return Err(CliError::config(format!(
                "unknown dataset.format {other:?} (expected cifar10, cifar100, mnist, or image_dir)"
            )))
        }
    };
    if let Some(filter) = &cfg.dataset.class_filter {
        let class = dataset.class_index(filter)?;
        dataset = dataset.filter_class(class)?;
    }
    Ok((dataset, warnings))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}

fn write_report(out_dir: &Path, cfg: &RunConfig, mut report: AnalysisReport, warnings: Vec<String>) -> Result<(), CliError> {
    report.warnings.extend(warnings);
    report.parameters["run_config"] = serde_json::to_value(cfg).expect("config serializes");
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    write_text(&out_dir.join("report.json"), &json)?;

    let mut kept = String::from("id\n");
    for id in &report.kept_ids {
        kept.push_str(&store::csv_field(id));
        kept.push('\n');
    }
    write_text(&out_dir.join("kept_ids.csv"), &kept)?;

    let mut groups = String::from("group_id,member_id,label,role,representative\n");
    let mut group_id = 0usize;
    for group in &report.redundant_groups {
        for member in &group.members {
            groups.push_str(&format!(
                "{group_id},{},{},redundant,{}\n",
                store::csv_field(member),
                group.label,
                if member == &group.representative { 1 } else { 0 }
            ));
        }
        group_id += 1;
    }
    for group in &report.influential_groups {
        for (member, label) in group.members.iter().zip(&group.labels) {
            groups.push_str(&format!(
                "{group_id},{},{label},influential,1\n",
                store::csv_field(member)
            ));
        }
        group_id += 1;
    }
    write_text(&out_dir.join("groups.csv"), &groups)?;
    println!(
        "wrote {} (kept {} of {} ids, {} redundant / {} influential groups)",
        out_dir.join("report.json").display(),
        report.kept_ids.len(),
        report.kept_ids.len()
            + report
                .redundant_groups
                .iter()
                .map(|g| g.members.len() - 1)
                .sum::<usize>(),
        report.redundant_groups.len(),
        report.influential_groups.len(),
    );
    Ok(())
}

fn cmd_alg1(cfg: &RunConfig, out_dir: &Path) -> Result<(), CliError> {
    let (dataset, warnings) = load_dataset(cfg, None)?;
    let opts = cfg.wavelet_cluster_options()?;
    let report = wavelet_cluster_analysis(&dataset, &opts)?;
    write_report(out_dir, cfg, report, warnings)
}

fn cmd_alg2(cfg: &RunConfig, out_dir: &Path) -> Result<(), CliError> {
    let (dataset, warnings) = load_dataset(cfg, None)?;
    let opts = cfg.spectral_options()?;
    let analysis = spectral_similarity_analysis(&dataset, &opts)?;
    store::save_similarity_matrix(&out_dir.join("similarity"), &analysis.similarity)?;
    store::write_matrix_csv(&out_dir.join("similarity.csv"), &analysis.similarity.values)?;
    store::write_spectrum_csv(&out_dir.join("spectrum.csv"), &analysis.spectrum.eigenvalues)?;
    println!("n_c = {} (eigen-gap gamma {})", analysis.n_c, cfg.graph.gamma);
    write_report(out_dir, cfg, analysis.report, warnings)
}

fn cmd_cross(cfg: &RunConfig, out_dir: &Path) -> Result<(), CliError> {
    let (train, mut warnings) = load_dataset(cfg, Some(Split::Train))?;
    let (test, test_warnings) = load_dataset(cfg, Some(Split::Test))?;
    warnings.extend(test_warnings);
    let measure = cfg.measure()?;
    let mut analysis = cross_set_report(&train, &test, &measure, cfg.thresholds.near_identical)?;
    analysis.report.warnings.extend(warnings);
    analysis.report.parameters["run_config"] = serde_json::to_value(cfg).expect("config serializes");
    let json = serde_json::to_string_pretty(&analysis.report).expect("report serializes");
    write_text(&out_dir.join("cross_report.json"), &json)?;
    store::save_similarity_matrix(&out_dir.join("cross_matrix"), &analysis.similarity)?;
    store::write_matrix_csv(&out_dir.join("cross_matrix.csv"), &analysis.similarity.values)?;
    println!(
        "near-identical fraction {:.4} at threshold {}",
        analysis.report.near_identical_fraction, analysis.report.near_identical_threshold
    );
    Ok(())
}

fn cmd_dedupe(cfg: &RunConfig, out_dir: &Path) -> Result<(), CliError> {
    let (dataset, warnings) = load_dataset(cfg, None)?;
    let measure = cfg.measure()?;
    let similarity = similarity_matrix(&dataset, &measure)?;
    store::save_similarity_matrix(&out_dir.join("similarity"), &similarity)?;
    store::write_matrix_csv(&out_dir.join("similarity.csv"), &similarity.values)?;
    let report = dedupe_by_threshold(
        &similarity,
        &dataset.labels,
        &dataset.class_names,
        cfg.thresholds.dedupe,
    )?;
    write_report(out_dir, cfg, report, warnings)
}

fn cmd_graph(cfg: &RunConfig, out_dir: &Path) -> Result<(), CliError> {
    let (dataset, _warnings) = load_dataset(cfg, None)?;
    let measure = cfg.measure()?;
    let similarity = similarity_matrix(&dataset, &measure)?;
    store::save_similarity_matrix(&out_dir.join("similarity"), &similarity)?;
    store::write_matrix_csv(&out_dir.join("similarity.csv"), &similarity.values)?;

    let dot = export_dot(&similarity, cfg.graph.edge_threshold, &similarity.row_ids)?;
    write_text(&out_dir.join("graph.dot"), &dot)?;

    let isolation = isolation_scores(&similarity)?;
    let mut csv = String::from("rank,id,score\n");
    for (rank, &idx) in isolation.ranking.iter().enumerate() {
        csv.push_str(&format!(
            "{rank},{},{}\n",
            store::csv_field(&similarity.row_ids[idx]),
            isolation.scores[idx]
        ));
    }
    write_text(&out_dir.join("isolation.csv"), &csv)?;
    println!(
        "graph.dot with {} nodes; most isolated: {}",
        similarity.n(),
        similarity.row_ids[isolation.ranking[0]]
    );
    Ok(())
}

fn cmd_stats(cfg: &RunConfig, out_dir: &Path) -> Result<(), CliError> {
    let (dataset, warnings) = load_dataset(cfg, None)?;
    let coeffs = decompose_dataset(&dataset, cfg.basis()?, cfg.wavelet.levels)?;
    let (n, d) = (coeffs.values.rows(), coeffs.values.cols());

    let zero_columns: Vec<usize> = (0..d)
        .filter(|&j| (0..n).all(|i| coeffs.values.get(i, j) == 0.0))
        .collect();
    let mut zero_variance = 0usize;
    let mut retained = Vec::with_capacity(d);
    for j in 0..d {
        let first = coeffs.values.get(0, j);
        if (1..n).all(|i| coeffs.values.get(i, j) == first) {
            zero_variance += 1;
        } else {
            retained.push(j);
        }
    }

    // exact conditioning of the matrix without its all-zero columns
    let nonzero: Vec<usize> = (0..d).filter(|j| !zero_columns.contains(j)).collect();
    let mut excluded = simscan::DenseMatrix::zeros(n, nonzero.len());
    for i in 0..n {
        let src = coeffs.values.row(i);
        let dst = excluded.row_mut(i);
        for (jj, &j) in nonzero.iter().enumerate() {
            dst[jj] = src[j];
        }
    }
    let conditioning = simscan::numerics::condition_number(&excluded)?;

    // full pivot sequence over the zero-variance-excluded columns
    let mut sub = simscan::DenseMatrix::zeros(n, retained.len());
    for i in 0..n {
        let src = coeffs.values.row(i);
        let dst = sub.row_mut(i);
        for (jj, &j) in retained.iter().enumerate() {
            dst[jj] = src[j];
        }
    }
    let qr = simscan::numerics::pivoted_qr(&sub, 0.0)?;
    let r = &qr.r_diagonal;
    let mut selected_m = 0usize;
    for &rk in r {
        if rk > 0.0 && r[0] / rk < cfg.selection.tau {
            selected_m += 1;
        } else {
            break;
        }
    }
    let mut spectrum_csv = String::from("pivot,r_diagonal\n");
    for (i, v) in r.iter().enumerate() {
        spectrum_csv.push_str(&format!("{i},{v}\n"));
    }
    write_text(&out_dir.join("r_diagonal.csv"), &spectrum_csv)?;

    let selection_estimate = if selected_m > 0 {
        Some(r[0] / r[selected_m - 1])
    } else {
        None
    };
    let stats = serde_json::json!({
        "n": n,
        "d": d,
        "basis": coeffs.basis,
        "levels": coeffs.levels,
        "zero_columns": zero_columns.len(),
        "zero_variance_columns": zero_variance,
        "condition_excluding_zero_columns": {
            "mode": conditioning.mode,
            "infinite": conditioning.value.is_infinite(),
            "value": if conditioning.value.is_finite() { Some(conditioning.value) } else { None },
        },
        "tau": cfg.selection.tau,
        "selected_m": selected_m,
        "selection_condition_estimate": selection_estimate,
        "pivots_processed": qr.columns_processed,
        "warnings": warnings,
        "run_config": cfg,
    });
    write_text(
        &out_dir.join("coeff_stats.json"),
        &serde_json::to_string_pretty(&stats).expect("stats serialize"),
    )?;
    println!(
        "{n}x{d} coefficient matrix: {} zero columns, selected m = {selected_m}",
        zero_columns.len()
    );
    Ok(())
}
