//! `corrgnn`: dataset generation, training and the estimator studies.
//!
//! Reports are JSON on stdout, and also under `--out` when given. Failures
//! print `{"error": ...}` on stderr and exit nonzero.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use corrgnn::data::{read_bundle, sample_ising, split_vertices, write_bundle, Bundle, IsingConfig, SplitConfig};
use corrgnn::experiments::{
    estimator_study, estimator_study_on, inductive_study, random_partition, run_transductive, scaling_benchmark,
    Artifact, EstimatorStudyConfig, InductiveConfig, Method, ScalingConfig, TransductiveConfig,
};
use corrgnn::graph::{grid_graph, watts_strogatz};
use corrgnn::model::EstimatorMode;
use corrgnn::{EstimatorConfig, RegressorKind, TrainConfig};
use serde_json::json;

#[derive(Parser)]
#[command(name = "corrgnn", version, about = "Graph regression with correlated Gaussian residuals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset bundle.
    Generate(GenerateArgs),
    /// Train and evaluate one method over repeated random splits.
    Train(TrainArgs),
    /// Stochastic log-determinant and gradient accuracy against dense factorization.
    ValidateEstimator(ValidateArgs),
    /// Time one objective and gradient evaluation per graph size.
    BenchmarkScaling(ScalingArgs),
    /// Train on one bundle and predict on another with revealed label fractions.
    Inductive(InductiveArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DatasetKind {
    #[value(name = "ising+")]
    IsingPositive,
    #[value(name = "ising-")]
    IsingNegative,
    Ws,
    Grid,
}

#[derive(Args)]
struct GenerateArgs {
    kind: DatasetKind,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 35)]
    rows: usize,
    #[arg(long, default_value_t = 35)]
    cols: usize,
    /// Coupling override for the Ising kinds.
    #[arg(long)]
    coupling: Option<f64>,
    #[arg(long, default_value_t = 500)]
    n: usize,
    /// Mean degree of the Watts–Strogatz graph.
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 0.1)]
    rewire: f64,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 75)]
    epochs: usize,
    /// Labeled vertices per step; all of them when omitted.
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 0.1)]
    lr_correlation: f64,
    #[arg(long, default_value_t = 128)]
    probes: usize,
    #[arg(long, default_value_t = 32)]
    lanczos_steps: usize,
    #[arg(long, default_value_t = 1e-6)]
    cg_tol: f64,
    #[arg(long, default_value_t = 1e-3)]
    eta: f64,
    #[arg(long, default_value = "sage_mean")]
    regressor: RegressorKind,
    /// Dense factorizations instead of stochastic estimates.
    #[arg(long)]
    oracle_mode: bool,
    /// Fix every α_i at this value during training.
    #[arg(long)]
    freeze_alpha: Option<f64>,
    /// Evaluate on the sequential code path.
    #[arg(long)]
    sequential: bool,
}

impl ModelArgs {
    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            lr_theta: self.lr,
            lr_alpha_beta: self.lr_correlation,
            seed: self.seed,
            eta: self.eta,
            init_alpha: self.freeze_alpha.unwrap_or(0.0),
            freeze_alpha: self.freeze_alpha.is_some(),
            mode: if self.oracle_mode {
                EstimatorMode::Dense
            } else {
                EstimatorMode::Stochastic
            },
            ..TrainConfig::default()
        }
    }

    fn estimator(&self) -> EstimatorConfig {
        estimator(self.probes, self.lanczos_steps, self.cg_tol, self.seed, self.sequential)
    }
}

fn estimator(probes: usize, lanczos_steps: usize, cg_tol: f64, seed: u64, sequential: bool) -> EstimatorConfig {
    EstimatorConfig {
        probes,
        lanczos_steps,
        cg_tolerance: cg_tol,
        seed,
        parallel: !sequential,
        ..EstimatorConfig::default()
    }
}

#[derive(Args)]
struct TrainArgs {
    /// One of lp, mlp, gnn, c-mlp, c-gnn, lp-mlp, lp-gnn.
    method: Option<String>,
    #[arg(long = "method")]
    method_flag: Option<String>,
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long, default_value_t = 10)]
    seeds: usize,
    #[command(flatten)]
    model: ModelArgs,
    /// Directory for `report.json` and per-seed model files.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Use this bundle's graph instead of a generated Watts–Strogatz graph.
    #[arg(long)]
    bundle: Option<PathBuf>,
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 0.999)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.5)]
    labeled: f64,
    #[arg(long, value_delimiter = ',', default_value = "1,8,32,128")]
    probes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,8,32")]
    lanczos_steps: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    runs: usize,
    /// Repetitions of the derivative estimates at the largest grid cell.
    #[arg(long, default_value_t = 100)]
    derivative_runs: usize,
    #[arg(long, default_value_t = 1e-8)]
    cg_tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScalingArgs {
    #[arg(long, value_delimiter = ',', default_value = "1000,3000,10000,30000,100000")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 0.9)]
    alpha: f64,
    #[arg(long, default_value_t = 128)]
    probes: usize,
    #[arg(long, default_value_t = 32)]
    lanczos_steps: usize,
    #[arg(long, default_value_t = 1e-6)]
    cg_tol: f64,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    /// Minimum time to spend timing each size, in seconds
    #[arg(long, default_value_t = 0.0)]
    min_seconds: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    sequential: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InductiveArgs {
    #[arg(long)]
    train_bundle: PathBuf,
    #[arg(long)]
    test_bundle: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2,0.3,0.5")]
    fractions: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    seeds: usize,
    #[arg(long, default_value_t = 25)]
    fine_tune_epochs: usize,
    #[arg(long, default_value_t = 5e-4)]
    fine_tune_lr: f64,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(value: &serde_json::Value, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    if let Some(dir) = out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        fs::write(dir.join("report.json"), &text)?;
    }
    print!("{text}");
    Ok(())
}

fn default_splits(n: usize, seed: u64) -> Result<BTreeMap<String, Vec<usize>>> {
    let split = split_vertices(n, &SplitConfig::new(seed))?;
    Ok([("train", split.train), ("validation", split.validation), ("test", split.test)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect())
}

fn generate(args: &GenerateArgs) -> Result<()> {
    let (name, graph) = match args.kind {
        DatasetKind::IsingPositive | DatasetKind::IsingNegative => {
            let base = if matches!(args.kind, DatasetKind::IsingPositive) {
                IsingConfig::positive(args.seed)
            } else {
                IsingConfig::negative(args.seed)
            };
            let cfg = IsingConfig {
                rows: args.rows,
                cols: args.cols,
                coupling: args.coupling.unwrap_or(base.coupling),
                ..base
            };
            ("ising", sample_ising(&cfg)?)
        }
        DatasetKind::Ws => ("ws", watts_strogatz(args.n, args.k, args.rewire, args.seed)?),
        DatasetKind::Grid => ("grid", grid_graph(args.rows, args.cols)?),
    };
    let splits = default_splits(graph.n(), args.seed)?;
    let bundle = Bundle::new(graph, splits);
    write_bundle(&args.out, &bundle)?;
    emit(
        &json!({
            "kind": name,
            "out": args.out,
            "vertices": bundle.graph.n(),
            "edges": bundle.graph.edge_count(),
            "seed": args.seed,
        }),
        None,
    )
}

fn dataset_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn train(args: &TrainArgs) -> Result<()> {
    let method: Method = match (&args.method, &args.method_flag) {
        (Some(a), Some(b)) if a != b => bail!("conflicting methods '{a}' and '{b}'"),
        (Some(m), _) | (None, Some(m)) => m.parse()?,
        (None, None) => bail!("a method is required"),
    };
    let bundle = read_bundle(&args.bundle).with_context(|| format!("reading bundle {}", args.bundle.display()))?;
    let cfg = TransductiveConfig {
        method,
        regressor: args.model.regressor,
        seeds: args.seeds,
        base_seed: args.model.seed,
        train: args.model.train_config(),
        estimator: args.model.estimator(),
    };
    let outcome = run_transductive(&bundle.graph, &dataset_name(&args.bundle), &cfg)?;
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        for (i, artifact) in outcome.artifacts.iter().enumerate() {
            let seed = cfg.base_seed + i as u64;
            let text = match artifact {
                Artifact::None => continue,
                Artifact::Regressor(ck) => ck.to_json()?,
                Artifact::Correlated(model) => model.to_json()?,
            };
            fs::write(dir.join(format!("model-seed{seed}.json")), text + "\n")?;
        }
    }
    emit(&serde_json::to_value(&outcome.report)?, args.out.as_deref())
}

fn validate_estimator(args: &ValidateArgs) -> Result<()> {
    let cfg = EstimatorStudyConfig {
        n: args.n,
        mean_degree: args.k,
        alpha: args.alpha,
        beta: args.beta,
        labeled_fraction: args.labeled,
        probes: args.probes.clone(),
        lanczos_steps: args.lanczos_steps.clone(),
        runs: args.runs,
        derivative_runs: args.derivative_runs,
        seed: args.seed,
        cg_tolerance: args.cg_tol,
        ..EstimatorStudyConfig::default()
    };
    let study = match &args.bundle {
        None => estimator_study(&cfg)?,
        Some(path) => {
            let graph = read_bundle(path)?.graph;
            let partition = random_partition(graph.n(), args.labeled, args.seed)?;
            estimator_study_on(&graph, &partition, &cfg)?
        }
    };
    emit(&serde_json::to_value(&study)?, args.out.as_deref())
}

fn benchmark_scaling(args: &ScalingArgs) -> Result<()> {
    let cfg = ScalingConfig {
        sizes: args.sizes.clone(),
        mean_degree: args.k,
        alpha: args.alpha,
        estimator: estimator(args.probes, args.lanczos_steps, args.cg_tol, args.seed, args.sequential),
        repeats: args.repeats,
        min_seconds: args.min_seconds,
        seed: args.seed,
        ..ScalingConfig::default()
    };
    let report = scaling_benchmark(&cfg)?;
    let mut value = serde_json::to_value(&report)?;
    if report.slope.is_none() {
        value["slope_note"] = json!("undefined: at least two distinct sizes are needed");
    }
    emit(&value, args.out.as_deref())
}

fn inductive(args: &InductiveArgs) -> Result<()> {
    let source = read_bundle(&args.train_bundle)?.graph;
    let target = read_bundle(&args.test_bundle)?.graph;
    let cfg = InductiveConfig {
        fractions: args.fractions.clone(),
        seeds: args.seeds,
        base_seed: args.model.seed,
        regressor: args.model.regressor,
        train: args.model.train_config(),
        estimator: args.model.estimator(),
        fine_tune_epochs: args.fine_tune_epochs,
        fine_tune_lr: args.fine_tune_lr,
    };
    let study = inductive_study(&source, &target, &cfg)?;
    emit(&serde_json::to_value(&study)?, args.out.as_deref())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Train(a) => train(a),
        Command::ValidateEstimator(a) => validate_estimator(a),
        Command::BenchmarkScaling(a) => benchmark_scaling(a),
        Command::Inductive(a) => inductive(a),
    }
}

fn fail(message: String, code: u8) -> ExitCode {
    eprintln!("{}", json!({ "error": message }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(e.to_string().trim().to_string(), 2),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(format!("{e:#}"), 1),
    }
}
