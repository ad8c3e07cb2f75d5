//! `mlpc`: evaluate multi-label predictions, compose PatchML datasets and
//! analyze metric reports.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 data error,
//! 4 insufficient prediction depth. Errors are printed to stderr as one
//! JSON object.

mod provenance;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mlpc_core::analysis::{
    aggregate_by_model, gap_analysis, rank_table_from_reports, render_plots, subgroup_export, write_subgroup_csv,
};
use mlpc_core::annotations::{load_annotations, AnnotationFormat};
use mlpc_core::composer::synthetic::{synthetic_pool, SyntheticPixels};
use mlpc_core::composer::{
    build_pool, generate_manifest, parse_configs, write_outputs, ComposerConfig, FilePixels, PatchPixels, PoolPolicy,
    DEFAULT_CANVAS,
};
use mlpc_core::container::write_binary;
use mlpc_core::metrics::{
    evaluate, EmptyPolicy, EvalPolicies, GroupRange, LabelwiseMode, Metric, MetricReport, PopulationPolicy,
    SingleLabelTruth,
};
use mlpc_core::predictions::load_predictions;
use provenance::Provenance;
use serde_json::json;

#[derive(Debug)]
pub enum CliError {
    Core(mlpc_core::Error),
    Usage(String),
}

impl From<mlpc_core::Error> for CliError {
    fn from(e: mlpc_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use mlpc_core::Error as E;
        match self {
            CliError::Usage(_) | CliError::Core(E::Config(_)) => 2,
            CliError::Core(E::InsufficientDepth { .. }) => 4,
            CliError::Core(_) => 3,
        }
    }

    fn kind(&self) -> &'static str {
        use mlpc_core::Error as E;
        match self {
            CliError::Usage(_) => "usage",
            CliError::Core(e) => match e {
                E::Io { .. } => "io",
                E::Malformed { .. } => "malformed",
                E::ClassOutOfRange { .. } => "class_out_of_range",
                E::DuplicateImage { .. } => "duplicate_image",
                E::NonFiniteScore { .. } => "non_finite_score",
                E::DuplicateClass { .. } => "duplicate_class",
                E::DepthViolation { .. } => "depth_violation",
                E::InsufficientDepth { .. } => "insufficient_depth",
                E::EmptyPopulation { .. } => "empty_population",
                E::PopulationMismatch { .. } => "population_mismatch",
                E::DatasetMismatch { .. } => "dataset_mismatch",
                E::ClassCountMismatch { .. } => "class_count_mismatch",
                E::NoGroupsInRange => "no_groups_in_range",
                E::NotSingleLabel { .. } => "not_single_label",
                E::Config(_) => "config",
                E::BadPatch { .. } => "bad_patch",
                E::Image { .. } => "image",
                E::Container(_) => "container",
                E::MissingMetric { .. } => "missing_metric",
                E::EmptyIntersection => "empty_intersection",
                E::Heterogeneous { .. } => "heterogeneous",
                E::EmptyTable(_) => "empty_table",
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
        }
    }
}

type CliResult = Result<(), CliError>;

#[derive(Parser)]
#[command(name = "mlpc", version, about = "Multi-label evaluation and PatchML composition")]
struct Cli {
    /// Suppress the summary printed after each command.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score one prediction file against multi-label annotations.
    Evaluate(EvaluateArgs),
    /// Generate PatchML composites, one output set per seed.
    Compose(ComposeArgs),
    /// Per-model metric gap between two report sets.
    Compare(CompareArgs),
    /// Rank models by one metric and report rank shifts against another.
    Rank(RankArgs),
    /// Long-form subgroup accuracy table, optionally plotted.
    Subgroups(SubgroupArgs),
    /// Convert predictions between JSONL and the MLPC1 binary container.
    Convert(ConvertArgs),
    /// Average per-seed reports of each model into one report.
    Aggregate(AggregateArgs),
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long)]
    annotations: PathBuf,
    /// `jsonl`, or `real` for a JSON array of label lists indexed by image.
    #[arg(long, default_value = "jsonl", value_parser = ["jsonl", "real"])]
    annotation_format: String,
    /// Image id template for the `real` format.
    #[arg(long, default_value = "ILSVRC2012_val_{index:08}")]
    id_template: String,
    /// Index of the first array element for the `real` format.
    #[arg(long, default_value_t = 1)]
    index_base: u64,
    /// Class count for the `real` format.
    #[arg(long, default_value_t = 1000)]
    num_classes: u32,
    /// Dataset id for the `real` format.
    #[arg(long, default_value = "imagenetv1-real")]
    dataset_id: String,
    /// Single-label ground truth (annotation JSONL, one label per image) for top-1.
    #[arg(long)]
    single_label: Option<PathBuf>,
    #[arg(long, default_value = "literal_hamming")]
    mode: LabelwiseMode,
    #[arg(long, default_value = "exclude")]
    empty_policy: EmptyPolicy,
    #[arg(long, default_value = "intersection")]
    population: PopulationPolicy,
    #[arg(long, default_value_t = 1)]
    min_group: usize,
    #[arg(long)]
    max_group: Option<usize>,
    /// Evaluate even if prediction and annotation dataset ids differ.
    #[arg(long)]
    allow_dataset_mismatch: bool,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ComposeArgs {
    /// Patch manifest JSONL; sources resolve relative to its directory.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    patches: Option<PathBuf>,
    /// Use a procedural pool of this many patches instead of a manifest.
    #[arg(long)]
    synthetic: Option<usize>,
    /// Seed for the procedural pool.
    #[arg(long, default_value_t = 0)]
    synthetic_seed: u64,
    /// Repeat to emit one variant per seed.
    #[arg(long, required = true)]
    seed: Vec<u64>,
    #[arg(long, default_value = "2:256,3:256,4:256,6:170,9:128")]
    configs: String,
    #[arg(long, default_value_t = DEFAULT_CANVAS)]
    canvas: u32,
    #[arg(long)]
    distinct_labels: bool,
    #[arg(long, default_value = "fresh_per_config")]
    pool_policy: PoolPolicy,
    #[arg(long, default_value_t = 1000)]
    num_classes: u32,
    /// Write manifests and annotations only.
    #[arg(long)]
    no_images: bool,
    /// Output root; each seed goes to `seed_<n>/`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// Report directory (or single report) for dataset a.
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long, default_value = "top1")]
    metric: Metric,
    /// Gap JSON path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for `gaps.svg`.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct RankArgs {
    /// Reports providing the primary metric.
    #[arg(long)]
    reports: PathBuf,
    /// Reports providing the baseline metric; defaults to `--reports`.
    #[arg(long)]
    baseline_reports: Option<PathBuf>,
    #[arg(long, default_value = "asma")]
    primary: Metric,
    #[arg(long, default_value = "top1")]
    baseline: Metric,
    /// CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SubgroupArgs {
    /// Report directories or files; repeat to mix datasets.
    #[arg(long, required = true, num_args = 1..)]
    reports: Vec<PathBuf>,
    #[arg(long, default_value_t = 1)]
    min_count: usize,
    #[arg(long, default_value_t = 5)]
    max_count: usize,
    /// CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for `subgroups.svg`.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct ConvertArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// `.mlpc` writes the binary container, anything else JSONL.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AggregateArgs {
    /// Per-seed reports; every model's reports must share one config.
    #[arg(long, required = true, num_args = 1..)]
    reports: Vec<PathBuf>,
    /// Directory receiving `<model_id>.json` per model.
    #[arg(long)]
    out: PathBuf,
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    mlpc_core::Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
    .into()
}

fn write_file(path: &Path, contents: &str) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

/// Writes to `out` with a provenance sidecar, or prints to stdout.
fn emit(out: Option<&Path>, contents: &str, prov: &Provenance) -> CliResult {
    match out {
        Some(path) => {
            write_file(path, contents)?;
            prov.write_for(path)?;
        }
        None => print!("{contents}"),
    }
    Ok(())
}

/// Report files under `path`: the file itself, or every `*.json` in the
/// directory except provenance sidecars, sorted by name.
fn report_files(path: &Path) -> Result<Vec<PathBuf>, CliError> {
    if !path.is_dir() {
        if !path.exists() {
            return Err(io_err(path, std::io::Error::from(std::io::ErrorKind::NotFound)));
        }
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|e| io_err(path, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().unwrap_or_default().to_string_lossy();
            p.is_file() && name.ends_with(".json") && !name.ends_with("provenance.json")
        })
        .collect();
    files.sort();
    Ok(files)
}

fn load_reports(paths: &[PathBuf]) -> Result<(Vec<MetricReport>, Vec<PathBuf>), CliError> {
    let mut files = Vec::new();
    for p in paths {
        files.extend(report_files(p)?);
    }
    let reports = files
        .iter()
        .map(|f| {
            let text = fs::read_to_string(f).map_err(|e| mlpc_core::Error::Io {
                path: f.clone(),
                source: e,
            })?;
            MetricReport::from_json(&text).map_err(|e| match e {
                mlpc_core::Error::Malformed { line, message } => mlpc_core::Error::Malformed {
                    line,
                    message: format!("{}: {message}", f.display()),
                },
                other => other,
            })
        })
        .collect::<mlpc_core::Result<Vec<_>>>()?;
    Ok((reports, files))
}

fn cmd_evaluate(args: EvaluateArgs, quiet: bool) -> CliResult {
    let format = match args.annotation_format.as_str() {
        "real" => AnnotationFormat::RealAdapter {
            id_template: args.id_template.clone(),
            index_base: args.index_base,
            num_classes: args.num_classes,
            dataset_id: args.dataset_id.clone(),
        },
        _ => AnnotationFormat::Jsonl,
    };
    if args.max_group.is_some_and(|m| m < args.min_group) {
        return Err(CliError::Usage("--max-group must be at least --min-group".into()));
    }
    let policies = EvalPolicies {
        mode: args.mode,
        empty_policy: args.empty_policy,
        population: args.population,
        groups: GroupRange {
            min_group: args.min_group,
            max_group: args.max_group,
        },
        allow_dataset_mismatch: args.allow_dataset_mismatch,
    };
    let preds = load_predictions(&args.predictions)?;
    let store = load_annotations(&args.annotations, &format)?;
    let single = match &args.single_label {
        Some(path) => Some(SingleLabelTruth::from_store(&load_annotations(path, &AnnotationFormat::Jsonl)?)?),
        None => None,
    };
    let report = evaluate(&preds, &store, single.as_ref(), &policies)?;

    let mut prov = Provenance::new("evaluate");
    prov.flag("mode", args.mode.as_str())
        .flag("empty_policy", json!(args.empty_policy))
        .flag("population", json!(args.population))
        .flag("min_group", args.min_group)
        .flag("max_group", json!(args.max_group))
        .flag("annotation_format", args.annotation_format.as_str())
        .flag("allow_dataset_mismatch", args.allow_dataset_mismatch);
    if args.annotation_format == "real" {
        prov.flag("id_template", args.id_template.as_str())
            .flag("index_base", args.index_base)
            .flag("num_classes", args.num_classes)
            .flag("dataset_id", args.dataset_id.as_str());
    }
    prov.input("predictions", &args.predictions)?.input("annotations", &args.annotations)?;
    if let Some(path) = &args.single_label {
        prov.input("single_label", path)?;
    }
    emit(args.out.as_deref(), &(report.to_canonical_json() + "\n"), &prov)?;
    if !quiet && args.out.is_some() {
        let top1 = report.top1.map(|a| format!("{:.4}", a.accuracy)).unwrap_or_else(|| "-".into());
        eprintln!(
            "{} on {}: top1 {top1}, real {:.4}, asma {:.4} ({} images)",
            report.model_id, report.dataset_id, report.real.accuracy, report.subgroups.asma, report.population.matched
        );
    }
    Ok(())
}

fn cmd_compose(args: ComposeArgs, quiet: bool) -> CliResult {
    let configs = parse_configs(&args.configs)?;
    let mut seen = std::collections::BTreeSet::new();
    if let Some(dup) = args.seed.iter().find(|s| !seen.insert(**s)) {
        return Err(CliError::Usage(format!("seed {dup} given twice")));
    }
    let base = ComposerConfig {
        canvas: args.canvas,
        configs,
        seed: 0,
        distinct_labels: args.distinct_labels,
        pool_policy: args.pool_policy,
        num_classes: args.num_classes,
    };
    base.validate()?;

    let mut prov = Provenance::new("compose");
    prov.flag("configs", base.configs.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","))
        .flag("canvas", args.canvas)
        .flag("distinct_labels", args.distinct_labels)
        .flag("pool_policy", json!(args.pool_policy))
        .flag("num_classes", args.num_classes)
        .flag("images", !args.no_images);
    let (pool, pixels): (_, Box<dyn PatchPixels>) = match (&args.patches, args.synthetic) {
        (Some(manifest), _) => {
            prov.input("patches", manifest)?;
            let root = manifest.parent().unwrap_or(Path::new(".")).to_path_buf();
            (build_pool(manifest, args.num_classes)?, Box::new(FilePixels::new(root)))
        }
        (None, Some(count)) => {
            prov.flag("synthetic", count).flag("synthetic_seed", args.synthetic_seed);
            (synthetic_pool(count, args.num_classes, 16, 400, args.synthetic_seed), Box::new(SyntheticPixels))
        }
        (None, None) => return Err(CliError::Usage("either --patches or --synthetic is required".into())),
    };

    for &seed in &args.seed {
        let config = ComposerConfig { seed, ..base.clone() };
        let manifest = generate_manifest(&config, &pool)?;
        let dir = args.out.join(format!("seed_{seed}"));
        let pixels = (!args.no_images).then_some(pixels.as_ref());
        write_outputs(&manifest, &pool, pixels, &dir)?;
        prov.flag("seed", seed);
        prov.write_for(&dir)?;
        if !quiet {
            let summary: Vec<String> = manifest
                .meta
                .configs
                .iter()
                .map(|c| format!("{}:{} x{}", c.k, c.p, c.composites))
                .collect();
            eprintln!("seed {seed}: {} composites ({}) -> {}", manifest.composites.len(), summary.join(", "), dir.display());
        }
    }
    Ok(())
}

fn cmd_compare(args: CompareArgs, quiet: bool) -> CliResult {
    let (a, files_a) = load_reports(std::slice::from_ref(&args.a))?;
    let (b, files_b) = load_reports(std::slice::from_ref(&args.b))?;
    let gaps = gap_analysis(&a, &b, args.metric)?;
    let mut prov = Provenance::new("compare");
    prov.flag("metric", args.metric.as_str()).inputs("a", &files_a)?.inputs("b", &files_b)?;
    let text = mlpc_core::canonical::to_canonical_json(&gaps) + "\n";
    emit(args.out.as_deref(), &text, &prov)?;
    if let Some(dir) = &args.plot {
        render_plots(Some(&gaps), None, dir)?;
        prov.write_for(&dir.join("gaps.svg"))?;
    }
    if !quiet && args.out.is_some() {
        let s = &gaps.summary;
        eprintln!(
            "{} models: {} gap min {:.4}, max {:.4}, mean {:.4}",
            s.models, args.metric, s.min_difference, s.max_difference, s.mean_difference
        );
    }
    Ok(())
}

fn cmd_rank(args: RankArgs) -> CliResult {
    let (primary, primary_files) = load_reports(std::slice::from_ref(&args.reports))?;
    let (baseline, baseline_files) = match &args.baseline_reports {
        Some(path) => load_reports(std::slice::from_ref(path))?,
        None => (primary.clone(), Vec::new()),
    };
    let table = rank_table_from_reports(&primary, args.primary, &baseline, args.baseline)?;
    let mut prov = Provenance::new("rank");
    prov.flag("primary", args.primary.as_str())
        .flag("baseline", args.baseline.as_str())
        .inputs("reports", &primary_files)?
        .inputs("baseline_reports", &baseline_files)?;
    emit(args.out.as_deref(), &table.to_csv_string(), &prov)
}

fn cmd_subgroups(args: SubgroupArgs) -> CliResult {
    if args.max_count < args.min_count || args.min_count == 0 {
        return Err(CliError::Usage("need 1 <= --min-count <= --max-count".into()));
    }
    let (reports, files) = load_reports(&args.reports)?;
    let rows = subgroup_export(&reports, args.min_count, args.max_count);
    let mut buf = Vec::new();
    write_subgroup_csv(&rows, &mut buf)?;
    let mut prov = Provenance::new("subgroups");
    prov.flag("min_count", args.min_count)
        .flag("max_count", args.max_count)
        .inputs("reports", &files)?;
    emit(args.out.as_deref(), &String::from_utf8_lossy(&buf), &prov)?;
    if let Some(dir) = &args.plot {
        render_plots(None, Some(&rows), dir)?;
        prov.write_for(&dir.join("subgroups.svg"))?;
    }
    Ok(())
}

fn cmd_convert(args: ConvertArgs) -> CliResult {
    let dataset = load_predictions(&args.input)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    let file = File::create(&args.out).map_err(|e| io_err(&args.out, e))?;
    let mut out = BufWriter::new(file);
    let binary = args.out.extension().is_some_and(|e| e == "mlpc");
    let written = if binary {
        write_binary(&dataset, &mut out)
    } else {
        dataset.write_jsonl(&mut out)
    };
    written.and_then(|_| out.flush()).map_err(|e| io_err(&args.out, e))
}

fn cmd_aggregate(args: AggregateArgs, quiet: bool) -> CliResult {
    let (reports, files) = load_reports(&args.reports)?;
    if reports.is_empty() {
        return Err(mlpc_core::Error::EmptyTable("no reports found").into());
    }
    let merged = aggregate_by_model(&reports)?;
    fs::create_dir_all(&args.out).map_err(|e| io_err(&args.out, e))?;
    let mut prov = Provenance::new("aggregate");
    prov.inputs("reports", &files)?;
    for report in &merged {
        let path = args.out.join(format!("{}.json", report.model_id));
        write_file(&path, &(report.to_canonical_json() + "\n"))?;
        prov.write_for(&path)?;
    }
    if !quiet {
        eprintln!("{} reports -> {} models in {}", reports.len(), merged.len(), args.out.display());
    }
    Ok(())
}

fn configure_threads() -> CliResult {
    let Ok(value) = std::env::var("MLPC_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("MLPC_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: Cli) -> CliResult {
    configure_threads()?;
    let quiet = cli.quiet;
    match cli.command {
        Command::Evaluate(a) => cmd_evaluate(a, quiet),
        Command::Compose(a) => cmd_compose(a, quiet),
        Command::Compare(a) => cmd_compare(a, quiet),
        Command::Rank(a) => cmd_rank(a),
        Command::Subgroups(a) => cmd_subgroups(a),
        Command::Convert(a) => cmd_convert(a),
        Command::Aggregate(a) => cmd_aggregate(a, quiet),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = json!({"error": {"code": e.exit_code(), "kind": e.kind(), "message": e.message()}});
            eprintln!("{body}");
            ExitCode::from(e.exit_code())
        }
    }
}
