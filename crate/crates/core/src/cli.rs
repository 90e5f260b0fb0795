//! Command-line front end.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::evaluation::{
    emit_report, usability, weight_gap_analysis, weight_wilcoxon, BaselineResult, ComparisonReport,
    HybridResult, WeightAnalysis,
};
use crate::fd::{cluster_columns, evaluate_clusters, integrate_fd, ClusterTruth, TokenTypeProvider, DEFAULT_TAU};
use crate::ingest::{load_manifest, Document};
use crate::matcher::{assign, build_matrix, mapping_json, project_table, WeightConfig, DEFAULT_ALPHA, DEFAULT_THETA};
use crate::optimizer::{
    evaluate_config, grid_search_params, grid_search_weights, precompute_tensor, GridSpec, GroundTruth, MetricTensor,
    SearchMode,
};
use crate::schema::{bundled_schema, load_schema, TargetSchema};
use crate::synth::{builtin_layouts, generate_dataset};
use crate::table::DataTable;

#[derive(Debug, Parser)]
#[command(name = "schema-align", version, about = "Match tenancy schedules onto a target schema")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic corpus with ground truth
    Generate(GenerateArgs),
    /// Map every manifest document onto the schema
    Match(MatchArgs),
    /// Grid-search parameters and/or metric weights against ground truth
    Optimize(OptimizeArgs),
    /// Integrate documents with the column-clustering baseline
    IntegrateFd(IntegrateArgs),
    /// Run all matcher configurations and the baseline, then write a report
    Evaluate(EvaluateArgs),
    /// Write a report for a fixed weight profile without searching
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Params,
    Weights,
    Both,
}

impl From<ModeArg> for SearchMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Params => SearchMode::ParamsOnly,
            ModeArg::Weights => SearchMode::WeightsOnly,
            ModeArg::Both => SearchMode::ParamsAndWeights,
        }
    }
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output directory
    #[arg(long, env = "SCHEMA_ALIGN_OUT", default_value = "out")]
    pub out: PathBuf,
    /// Worker threads; 0 uses every available core
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Target schema YAML [default: bundled schema]
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Document manifest YAML
    #[arg(long)]
    pub manifest: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub output: OutArgs,
    /// Random seed
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Documents per layout
    #[arg(long, default_value_t = 4)]
    pub docs_per_layout: usize,
    /// Rows per document
    #[arg(long, default_value_t = 25)]
    pub rows: usize,
}

#[derive(Debug, Args)]
pub struct MatchArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutArgs,
    /// Weight profile YAML [default: uniform global weights]
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Schema/instance blend, overrides the profile [default: 0.5]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Match threshold, overrides the profile [default: 0.5]
    #[arg(long)]
    pub theta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutArgs,
    /// Ground-truth mapping CSV
    #[arg(long)]
    pub truth: PathBuf,
    /// Search space
    #[arg(long, value_enum, default_value_t = ModeArg::Weights)]
    pub mode: ModeArg,
    /// Grid points per axis
    #[arg(long, default_value_t = 4)]
    pub grid: usize,
}

#[derive(Debug, Args)]
pub struct IntegrateArgs {
    /// Document manifest YAML
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub output: OutArgs,
    /// Column similarity threshold
    #[arg(long, default_value_t = DEFAULT_TAU)]
    pub tau: f64,
    /// Cluster ground-truth CSV for cluster scoring [default: none]
    #[arg(long)]
    pub clusters: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutArgs,
    /// Ground-truth mapping CSV
    #[arg(long)]
    pub truth: PathBuf,
    /// Cluster ground-truth CSV; the baseline is skipped without it [default: none]
    #[arg(long)]
    pub clusters: Option<PathBuf>,
    /// Grid points per axis
    #[arg(long, default_value_t = 4)]
    pub grid: usize,
    /// Baseline column similarity threshold
    #[arg(long, default_value_t = DEFAULT_TAU)]
    pub tau: f64,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutArgs,
    /// Ground-truth mapping CSV
    #[arg(long)]
    pub truth: PathBuf,
    /// Weight profile YAML [default: uniform global weights]
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Cluster ground-truth CSV; the baseline is skipped without it [default: none]
    #[arg(long)]
    pub clusters: Option<PathBuf>,
    /// Baseline column similarity threshold
    #[arg(long, default_value_t = DEFAULT_TAU)]
    pub tau: f64,
}

/// Parse `argv` and run the selected subcommand.
pub fn run<I, T>(argv: I) -> anyhow::Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    execute(Cli::try_parse_from(argv)?)
}

pub fn execute(cli: Cli) -> anyhow::Result<()> {
    let workers = match &cli.command {
        Command::Generate(a) => a.output.workers,
        Command::Match(a) => a.output.workers,
        Command::Optimize(a) => a.output.workers,
        Command::IntegrateFd(a) => a.output.workers,
        Command::Evaluate(a) => a.output.workers,
        Command::Report(a) => a.output.workers,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("building worker pool")?;
    pool.install(|| match cli.command {
        Command::Generate(a) => generate(&a),
        Command::Match(a) => run_match(&a),
        Command::Optimize(a) => run_optimize(&a),
        Command::IntegrateFd(a) => run_integrate(&a),
        Command::Evaluate(a) => run_evaluate(&a),
        Command::Report(a) => run_report(&a),
    })
}

fn require_files<'a>(paths: impl IntoIterator<Item = Option<&'a PathBuf>>) -> anyhow::Result<()> {
    for p in paths.into_iter().flatten() {
        if !p.is_file() {
            bail!("file not found: {}", p.display());
        }
    }
    Ok(())
}

fn check_unit(name: &str, value: Option<f64>) -> anyhow::Result<()> {
    if let Some(v) = value {
        if !(0.0..=1.0).contains(&v) {
            bail!("--{name} must lie in [0, 1], got {v}");
        }
    }
    Ok(())
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(dir: &Path, name: &str, body: &str) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))
}

fn load_inputs(input: &InputArgs) -> anyhow::Result<(TargetSchema, Vec<Document>)> {
    let schema = match &input.schema {
        Some(p) => load_schema(&read(p)?).with_context(|| format!("schema {}", p.display()))?,
        None => bundled_schema(),
    };
    let docs = load_manifest(&input.manifest)?;
    Ok((schema, docs))
}

fn load_truth(path: &Path, schema: &TargetSchema, docs: &[Document]) -> anyhow::Result<GroundTruth> {
    let truth = GroundTruth::from_csv(&read(path)?, schema).with_context(|| format!("truth {}", path.display()))?;
    truth.check_coverage(docs.iter().map(|d| (d.format_id(), d.table.headers.as_slice())))?;
    Ok(truth)
}

fn load_weights(path: Option<&PathBuf>) -> anyhow::Result<WeightConfig> {
    match path {
        Some(p) => WeightConfig::from_yaml(&read(p)?).with_context(|| format!("weights {}", p.display())),
        None => Ok(WeightConfig::default()),
    }
}

fn grid_spec(size: usize, mode: SearchMode) -> anyhow::Result<GridSpec> {
    if size < 2 {
        bail!("--grid must be at least 2, got {size}");
    }
    Ok(GridSpec::new(size, mode)?)
}

fn generate(a: &GenerateArgs) -> anyhow::Result<()> {
    if a.docs_per_layout == 0 || a.rows == 0 {
        bail!("--docs-per-layout and --rows must be at least 1");
    }
    let data = generate_dataset(&builtin_layouts(), a.docs_per_layout, a.rows, a.seed)?;
    data.write_to(&a.output.out)?;
    eprintln!("wrote {} documents to {}", data.documents.len(), a.output.out.display());
    Ok(())
}

/// Mapped and projected output for every document under one configuration.
struct Standardized {
    mappings: Vec<(String, serde_json::Value)>,
    tables: Vec<(String, DataTable)>,
    combined: DataTable,
    warnings: usize,
}

fn standardize(docs: &[Document], schema: &TargetSchema, config: &WeightConfig) -> anyhow::Result<Standardized> {
    let mut out = Standardized {
        mappings: Vec::new(),
        tables: Vec::new(),
        combined: DataTable::new(schema.names().map(str::to_string).collect()),
        warnings: 0,
    };
    for doc in docs {
        let matrix = build_matrix(&doc.table, schema, config)?;
        let mapping = assign(&matrix);
        let projection = project_table(&doc.table, schema, &mapping);
        for w in &projection.warnings {
            log::warn!(
                "{}: row {} column {:?} value {:?} does not parse as {}",
                doc.id,
                w.row,
                w.source_column,
                w.value,
                w.target_attribute
            );
        }
        out.warnings += projection.warnings.len();
        out.mappings
            .push((doc.id.clone(), mapping_json(&doc.id, doc.format_id(), &mapping, &doc.table.headers)));
        out.combined.append(projection.table.clone());
        out.tables.push((doc.id.clone(), projection.table));
    }
    Ok(out)
}

fn run_match(a: &MatchArgs) -> anyhow::Result<()> {
    require_files([a.input.schema.as_ref(), Some(&a.input.manifest), a.weights.as_ref()])?;
    check_unit("alpha", a.alpha)?;
    check_unit("theta", a.theta)?;
    let (schema, docs) = load_inputs(&a.input)?;
    let mut config = load_weights(a.weights.as_ref())?;
    config.alpha = a.alpha.unwrap_or(config.alpha);
    config.theta = a.theta.unwrap_or(config.theta);

    let result = standardize(&docs, &schema, &config)?;
    let dir = &a.output.out;
    for (id, json) in &result.mappings {
        write(dir, &format!("{id}.mapping.json"), &(serde_json::to_string_pretty(json)? + "\n"))?;
    }
    for (id, table) in &result.tables {
        write(dir, &format!("{id}.csv"), &table.to_csv_string())?;
    }
    write(dir, "standardized.csv", &result.combined.to_csv_string())?;
    eprintln!(
        "mapped {} documents into {} ({} unparsable cells)",
        docs.len(),
        dir.display(),
        result.warnings
    );
    Ok(())
}

fn run_optimize(a: &OptimizeArgs) -> anyhow::Result<()> {
    require_files([a.input.schema.as_ref(), Some(&a.input.manifest), Some(&a.truth)])?;
    let grid = grid_spec(a.grid, a.mode.into())?;
    let (schema, docs) = load_inputs(&a.input)?;
    let truth = load_truth(&a.truth, &schema, &docs)?;

    let started = Instant::now();
    let tensor = precompute_tensor(&docs, &schema);
    let default_score = evaluate_config(&tensor, &truth, &WeightConfig::default())?;
    let mut log = String::new();
    writeln!(log, "default f1={:.6} alpha={DEFAULT_ALPHA} theta={DEFAULT_THETA}", default_score.f1)?;

    let (mut alpha, mut theta) = (DEFAULT_ALPHA, DEFAULT_THETA);
    let mut config = WeightConfig::global(alpha, theta);
    let mut evaluated = 0;
    if matches!(grid.mode, SearchMode::ParamsOnly | SearchMode::ParamsAndWeights) {
        let p = grid_search_params(&tensor, &truth, &grid)?;
        writeln!(log, "params f1={:.6} alpha={} theta={}", p.score.f1, p.alpha, p.theta)?;
        (alpha, theta) = (p.alpha, p.theta);
        config = WeightConfig::global(alpha, theta);
        evaluated += p.configs_evaluated;
    }
    if matches!(grid.mode, SearchMode::WeightsOnly | SearchMode::ParamsAndWeights) {
        let w = grid_search_weights(&tensor, &truth, &grid, alpha, theta)?;
        for s in &w.attributes {
            writeln!(
                log,
                "weights {} candidates={} improved={} f1={:.6}",
                s.attribute, s.candidates, s.improved, s.score.f1
            )?;
        }
        config = w.config;
        evaluated += w.configs_evaluated;
    }
    let final_score = evaluate_config(&tensor, &truth, &config)?;
    writeln!(
        log,
        "final f1={:.6} precision={:.6} recall={:.6} configs={evaluated}",
        final_score.f1, final_score.precision, final_score.recall
    )?;

    write(&a.output.out, "weights.yaml", &config.to_yaml()?)?;
    write(&a.output.out, "optimize.log", &log)?;
    eprintln!(
        "evaluated {evaluated} configurations in {:.2?}; f1 {:.4} -> {:.4}",
        started.elapsed(),
        default_score.f1,
        final_score.f1
    );
    Ok(())
}

fn baseline(docs: &[Document], tau: f64, clusters: &Path) -> anyhow::Result<(BaselineResult, String)> {
    let truth = ClusterTruth::from_csv(&read(clusters)?).with_context(|| format!("clusters {}", clusters.display()))?;
    let clustering = cluster_columns(docs, tau, &TokenTypeProvider);
    let integrated = integrate_fd(docs, &clustering);
    let result = BaselineResult {
        method: format!("FD baseline (tau={tau})"),
        tau,
        cluster_score: evaluate_clusters(&clustering, &truth)?,
        usability: usability(&integrated.table),
    };
    Ok((result, integrated.to_csv_string()))
}

fn run_integrate(a: &IntegrateArgs) -> anyhow::Result<()> {
    require_files([Some(&a.manifest), a.clusters.as_ref()])?;
    check_unit("tau", Some(a.tau))?;
    let docs = load_manifest(&a.manifest)?;
    let clustering = cluster_columns(&docs, a.tau, &TokenTypeProvider);
    let integrated = integrate_fd(&docs, &clustering);
    let dir = &a.output.out;
    write(dir, "integrated.csv", &integrated.to_csv_string())?;

    let clusters: Vec<serde_json::Value> = clustering
        .clusters
        .iter()
        .map(|c| {
            let members: Vec<serde_json::Value> = c
                .members
                .iter()
                .map(|&m| {
                    let col = &clustering.columns[m];
                    serde_json::json!({
                        "document": col.document_id,
                        "format_id": col.format_id,
                        "header": col.header_raw,
                    })
                })
                .collect();
            serde_json::json!({ "name": c.name, "members": members })
        })
        .collect();
    let mut summary = serde_json::json!({
        "tau": a.tau,
        "clusters": clusters,
        "usability": serde_json::to_value(usability(&integrated.table))?,
    });
    if let Some(path) = &a.clusters {
        let truth = ClusterTruth::from_csv(&read(path)?)?;
        summary["cluster_score"] = serde_json::to_value(evaluate_clusters(&clustering, &truth)?)?;
    }
    write(dir, "clusters.json", &(serde_json::to_string_pretty(&summary)? + "\n"))?;
    eprintln!(
        "{} columns into {} clusters",
        clustering.columns.len(),
        clustering.clusters.len()
    );
    Ok(())
}

fn hybrid_result(
    method: &str,
    tensor: &MetricTensor,
    truth: &GroundTruth,
    docs: &[Document],
    schema: &TargetSchema,
    config: &WeightConfig,
) -> anyhow::Result<HybridResult> {
    let standardized = standardize(docs, schema, config)?;
    Ok(HybridResult {
        method: method.to_string(),
        alpha: config.alpha,
        theta: config.theta,
        score: evaluate_config(tensor, truth, config)?,
        usability: usability(&standardized.combined),
    })
}

fn weight_analysis(config: &WeightConfig, schema: &TargetSchema) -> anyhow::Result<WeightAnalysis> {
    Ok(WeightAnalysis {
        gaps: weight_gap_analysis(config, schema)?,
        wilcoxon: weight_wilcoxon(config, schema).ok(),
    })
}

fn run_evaluate(a: &EvaluateArgs) -> anyhow::Result<()> {
    require_files([a.input.schema.as_ref(), Some(&a.input.manifest), Some(&a.truth), a.clusters.as_ref()])?;
    check_unit("tau", Some(a.tau))?;
    let grid = grid_spec(a.grid, SearchMode::ParamsAndWeights)?;
    let (schema, docs) = load_inputs(&a.input)?;
    let truth = load_truth(&a.truth, &schema, &docs)?;

    let started = Instant::now();
    let tensor = precompute_tensor(&docs, &schema);
    let params = grid_search_params(&tensor, &truth, &grid)?;
    let tuned_both = grid_search_weights(&tensor, &truth, &grid, params.alpha, params.theta)?;
    let tuned_weights = grid_search_weights(&tensor, &truth, &grid, DEFAULT_ALPHA, DEFAULT_THETA)?;
    let configs = [
        ("Hybrid (default)", WeightConfig::default()),
        ("Hybrid (optimized params)", WeightConfig::global(params.alpha, params.theta)),
        ("Hybrid (optimized params + weights)", tuned_both.config.clone()),
        ("Hybrid (optimized weights only)", tuned_weights.config.clone()),
    ];
    let mut report = ComparisonReport::default();
    for (method, config) in &configs {
        report
            .hybrid
            .push(hybrid_result(method, &tensor, &truth, &docs, &schema, config)?);
    }
    if let Some(path) = &a.clusters {
        let (result, csv) = baseline(&docs, a.tau, path)?;
        report.baseline = Some(result);
        write(&a.output.out, "fd_integrated.csv", &csv)?;
    }
    report.weight_analysis = Some(weight_analysis(&tuned_weights.config, &schema)?);

    emit_report(&report, &a.output.out)?;
    write(&a.output.out, "weights.yaml", &tuned_weights.config.to_yaml()?)?;
    eprintln!("evaluation finished in {:.2?}", started.elapsed());
    Ok(())
}

fn run_report(a: &ReportArgs) -> anyhow::Result<()> {
    require_files([
        a.input.schema.as_ref(),
        Some(&a.input.manifest),
        Some(&a.truth),
        a.weights.as_ref(),
        a.clusters.as_ref(),
    ])?;
    check_unit("tau", Some(a.tau))?;
    let (schema, docs) = load_inputs(&a.input)?;
    let truth = load_truth(&a.truth, &schema, &docs)?;
    let config = load_weights(a.weights.as_ref())?;
    let tensor = precompute_tensor(&docs, &schema);

    let mut report = ComparisonReport::default();
    report
        .hybrid
        .push(hybrid_result("Hybrid", &tensor, &truth, &docs, &schema, &config)?);
    if let Some(path) = &a.clusters {
        report.baseline = Some(baseline(&docs, a.tau, path)?.0);
    }
    if a.weights.is_some() {
        report.weight_analysis = Some(weight_analysis(&config, &schema)?);
    }
    emit_report(&report, &a.output.out)?;
    Ok(())
}
