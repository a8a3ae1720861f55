//! Experiment drivers shared by the command-line tool and the acceptance
//! suite: transductive comparisons over repeated random splits, estimator
//! accuracy against dense factorizations, runtime scaling, and inductive
//! transfer to a fresh graph.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{binary_accuracy, normalize_features, r_squared, split_vertices, SplitConfig};
use crate::dense;
use crate::graph::{watts_strogatz, AttributedGraph, TypedAdjacency, VertexPartition};
use crate::linalg::{slq_logdet_samples, EstimatorConfig};
use crate::lp::{label_propagation, lp_gnn_predict};
use crate::model::{
    marginal_nll_and_grads, predict_cgnn, predict_inductive, train_cgnn, CgnnModel, EstimatorMode, ObjectiveOptions,
    TrainConfig,
};
use crate::operator::gather;
use crate::precision::{CorrelationParams, PrecisionOperator};
use crate::regressors::{
    fit_squared_error, forward, FitConfig, OptimizerConfig, ParameterSet, RegressorCheckpoint, RegressorKind,
    RegressorSpec,
};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "lp")]
    Lp,
    #[serde(rename = "mlp")]
    Mlp,
    #[serde(rename = "gnn")]
    Gnn,
    #[serde(rename = "c-mlp")]
    CMlp,
    #[serde(rename = "c-gnn")]
    CGnn,
    #[serde(rename = "lp-mlp")]
    LpMlp,
    #[serde(rename = "lp-gnn")]
    LpGnn,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Lp,
        Method::Mlp,
        Method::Gnn,
        Method::CMlp,
        Method::CGnn,
        Method::LpMlp,
        Method::LpGnn,
    ];

    /// Base regressor kind, given the kind used for the graph family.
    pub fn regressor(self, graph_kind: RegressorKind) -> Option<RegressorKind> {
        match self {
            Method::Lp => None,
            Method::Mlp | Method::CMlp | Method::LpMlp => Some(RegressorKind::Mlp),
            Method::Gnn | Method::CGnn | Method::LpGnn => Some(graph_kind),
        }
    }

    pub fn is_correlated(self) -> bool {
        matches!(self, Method::CMlp | Method::CGnn)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Lp => "lp",
            Method::Mlp => "mlp",
            Method::Gnn => "gnn",
            Method::CMlp => "c-mlp",
            Method::CGnn => "c-gnn",
            Method::LpMlp => "lp-mlp",
            Method::LpGnn => "lp-gnn",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.to_string() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    RSquared,
}

impl Metric {
    /// Accuracy when every label is ±1, R² otherwise.
    pub fn for_graph(graph: &AttributedGraph) -> Self {
        let binary = graph
            .labels()
            .iter()
            .flatten()
            .all(|y| *y == 1.0 || *y == -1.0);
        if binary {
            Metric::Accuracy
        } else {
            Metric::RSquared
        }
    }

    pub fn score(self, predictions: &[f64], truth: &[f64]) -> Result<f64> {
        match self {
            Metric::Accuracy => binary_accuracy(predictions, truth),
            Metric::RSquared => r_squared(predictions, truth),
        }
    }
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = values.iter().sum::<f64>() / values.len() as f64;
    if values.len() < 2 {
        return (m, 0.0);
    }
    let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
    (m, var.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub method: String,
    pub dataset: String,
    pub base_seed: u64,
    pub metric: Metric,
    pub values: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    /// Learned `α_i` per seed, for the correlated methods.
    pub alphas: Vec<Vec<f64>>,
    pub betas: Vec<f64>,
    pub seconds: Vec<f64>,
    pub config: serde_json::Value,
}

impl ExperimentReport {
    fn new(method: String, dataset: &str, base_seed: u64, metric: Metric, config: serde_json::Value) -> Self {
        Self {
            method,
            dataset: dataset.into(),
            base_seed,
            metric,
            values: Vec::new(),
            mean: f64::NAN,
            std: f64::NAN,
            alphas: Vec::new(),
            betas: Vec::new(),
            seconds: Vec::new(),
            config,
        }
    }

    fn finish(mut self) -> Self {
        let (m, s) = mean_std(&self.values);
        self.mean = m;
        self.std = s;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransductiveConfig {
    pub method: Method,
    /// Kind used by the graph-based methods.
    pub regressor: RegressorKind,
    pub seeds: usize,
    pub base_seed: u64,
    /// Epochs, batch size and learning rates; also drives the plain
    /// regressors, which use `epochs`, `batch_size` and `lr_theta`.
    pub train: TrainConfig,
    pub estimator: EstimatorConfig,
}

impl TransductiveConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            regressor: RegressorKind::SageMean,
            seeds: 10,
            base_seed: 0,
            train: TrainConfig::default(),
            estimator: EstimatorConfig::default(),
        }
    }

    fn fit_config(&self, seed: u64) -> FitConfig {
        FitConfig {
            epochs: self.train.epochs,
            batch_size: self.train.batch_size,
            optimizer: OptimizerConfig::adam(self.train.lr_theta),
            seed,
            loss_scale: 1.0,
        }
    }
}

/// Trained artifact of one repetition.
#[derive(Clone, Debug, PartialEq)]
pub enum Artifact {
    None,
    Regressor(RegressorCheckpoint),
    Correlated(Box<CgnnModel>),
}

pub struct TransductiveOutcome {
    pub report: ExperimentReport,
    pub artifacts: Vec<Artifact>,
}

/// Batch size capped at the number of training vertices.
fn capped(batch: Option<usize>, train: usize) -> Option<usize> {
    batch.map(|b| b.min(train))
}

/// Runs one method over `cfg.seeds` random 60/20/20 splits, seeds
/// `base_seed + i`, scoring the test set while conditioning on the
/// training labels.
pub fn run_transductive(graph: &AttributedGraph, dataset: &str, cfg: &TransductiveConfig) -> Result<TransductiveOutcome> {
    if cfg.seeds == 0 {
        return Err(Error::InvalidArgument("at least one seed is required".into()));
    }
    let graph = normalize_features(graph)?;
    let metric = Metric::for_graph(&graph);
    let config = serde_json::to_value(cfg)?;
    let mut report = ExperimentReport::new(cfg.method.to_string(), dataset, cfg.base_seed, metric, config);
    let mut artifacts = Vec::with_capacity(cfg.seeds);
    let n = graph.n();
    let all: Vec<usize> = (0..n).collect();

    for i in 0..cfg.seeds {
        let seed = cfg.base_seed + i as u64;
        let start = Instant::now();
        let split = split_vertices(n, &SplitConfig::new(seed))?;
        let partition = VertexPartition::from_labeled(n, &split.train)?;
        let test_pos: Vec<usize> = {
            let pos = crate::operator::positions(n, partition.unlabeled());
            split.test.iter().map(|&v| pos[v]).collect()
        };
        let y_train = graph.labels_on(&split.train)?;
        let y_test = graph.labels_on(&split.test)?;

        let (pred_u, artifact) = match cfg.method {
            Method::Lp => (label_propagation(&graph, &y_train, &partition)?, Artifact::None),
            Method::Mlp | Method::Gnn | Method::LpMlp | Method::LpGnn => {
                let kind = cfg.method.regressor(cfg.regressor).expect("regressor method");
                let spec = RegressorSpec::new(kind, seed);
                let mut fit = cfg.fit_config(seed);
                fit.batch_size = capped(fit.batch_size, split.train.len());
                let report = fit_squared_error(
                    &spec,
                    &graph,
                    &split.train,
                    &split.validation,
                    spec.init(graph.feature_dim())?,
                    &fit,
                )?;
                let params = report.best;
                let pred = if matches!(cfg.method, Method::LpMlp | Method::LpGnn) {
                    lp_gnn_predict(&spec, &params, &graph, &partition, &y_train)?
                } else {
                    let (yhat, _) = forward(&spec, &params, &graph, &all)?;
                    gather(&yhat, partition.unlabeled())
                };
                (pred, Artifact::Regressor(RegressorCheckpoint::new(spec, params)))
            }
            Method::CMlp | Method::CGnn => {
                let kind = cfg.method.regressor(cfg.regressor).expect("regressor method");
                let spec = RegressorSpec::new(kind, seed);
                let train_cfg = TrainConfig {
                    seed,
                    batch_size: capped(cfg.train.batch_size, split.train.len()),
                    ..cfg.train.clone()
                };
                let model = train_cgnn(
                    &graph,
                    &split.train,
                    &split.validation,
                    &spec,
                    &train_cfg,
                    &cfg.estimator.with_seed(seed),
                )?;
                report.alphas.push(model.correlation.alphas().to_vec());
                report.betas.push(model.correlation.beta());
                let pred = predict_cgnn(&model, &graph, &partition, &y_train)?;
                (pred, Artifact::Correlated(Box::new(model)))
            }
        };
        report.values.push(metric.score(&gather(&pred_u, &test_pos), &y_test)?);
        report.seconds.push(start.elapsed().as_secs_f64());
        artifacts.push(artifact);
    }
    Ok(TransductiveOutcome {
        report: report.finish(),
        artifacts,
    })
}

/// Setup of the estimator-accuracy study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorStudyConfig {
    pub n: usize,
    pub mean_degree: usize,
    pub rewire: f64,
    pub alpha: f64,
    pub beta: f64,
    pub labeled_fraction: f64,
    pub probes: Vec<usize>,
    pub lanczos_steps: Vec<usize>,
    /// Independent estimator runs per cell.
    pub runs: usize,
    /// Runs of the derivative estimates at the largest `(T, k)` cell; zero skips them.
    pub derivative_runs: usize,
    pub seed: u64,
    pub cg_tolerance: f64,
    pub cg_max_iters: usize,
}

impl Default for EstimatorStudyConfig {
    fn default() -> Self {
        Self {
            n: 500,
            mean_degree: 10,
            rewire: 0.1,
            alpha: 0.999,
            beta: 1.0,
            labeled_fraction: 0.5,
            probes: vec![1, 8, 32, 128],
            lanczos_steps: vec![1, 8, 32],
            runs: 100,
            derivative_runs: 0,
            seed: 0,
            cg_tolerance: 1e-8,
            cg_max_iters: 5000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorCell {
    pub probes: usize,
    pub lanczos_steps: usize,
    /// RMS relative error of the `log det Γ` estimate.
    pub logdet_rel_rms: f64,
    /// RMS relative error of `log det Γ_UU`.
    pub logdet_uu_rel_rms: f64,
    /// RMS relative error of `log det Γ̄_LL = log det Γ - log det Γ_UU`.
    pub logdet_marginal_rel_rms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeColumn {
    pub parameter: String,
    pub exact: f64,
    pub mean: f64,
    pub standard_error: f64,
    pub rel_rms: f64,
    /// `|mean - exact| ≤ 3 · standard_error`.
    pub within_three_se: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorStudy {
    pub config: EstimatorStudyConfig,
    pub logdet_exact: f64,
    pub logdet_uu_exact: f64,
    pub cells: Vec<EstimatorCell>,
    pub derivatives: Vec<DerivativeColumn>,
}

/// Watts–Strogatz graph with a random labeled subset, as used by the
/// estimator studies.
pub fn estimator_instance(
    n: usize,
    mean_degree: usize,
    rewire: f64,
    labeled_fraction: f64,
    seed: u64,
) -> Result<(AttributedGraph, VertexPartition)> {
    let graph = watts_strogatz(n, mean_degree, rewire, seed)?;
    let partition = random_partition(n, labeled_fraction, seed)?;
    Ok((graph, partition))
}

/// Uniformly random labeled subset holding `round(fraction · n)` vertices.
pub fn random_partition(n: usize, fraction: f64, seed: u64) -> Result<VertexPartition> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidArgument(format!("labeled fraction {fraction} outside [0, 1]")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed));
    let count = (fraction * n as f64).round() as usize;
    VertexPartition::from_labeled(n, &order[..count.min(n)])
}

fn rel_rms(samples: &[f64], exact: f64) -> f64 {
    (samples.iter().map(|s| ((s - exact) / exact).powi(2)).sum::<f64>() / samples.len() as f64).sqrt()
}

/// Standard-normal residuals on the labeled set.
pub fn random_residual(partition: &VertexPartition, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    partition
        .labeled()
        .iter()
        .map(|_| rng.sample(rand_distr::StandardNormal))
        .collect()
}

/// Stochastic `log det` estimates and gradients against dense
/// factorizations over a grid of `(T, k)`, on a generated Watts–Strogatz
/// graph.
pub fn estimator_study(cfg: &EstimatorStudyConfig) -> Result<EstimatorStudy> {
    let (graph, partition) = estimator_instance(cfg.n, cfg.mean_degree, cfg.rewire, cfg.labeled_fraction, cfg.seed)?;
    estimator_study_on(&graph, &partition, cfg)
}

/// [`estimator_study`] on a given graph and labeled set; the graph fields
/// of `cfg` are ignored.
pub fn estimator_study_on(
    graph: &AttributedGraph,
    partition: &VertexPartition,
    cfg: &EstimatorStudyConfig,
) -> Result<EstimatorStudy> {
    if cfg.runs == 0 || cfg.probes.is_empty() || cfg.lanczos_steps.is_empty() {
        return Err(Error::InvalidArgument("the study needs runs, probe counts and Lanczos steps".into()));
    }
    if graph.n() > dense::MAX_DENSE_N {
        return Err(Error::InvalidArgument(format!(
            "dense reference limited to {} vertices, got {}",
            dense::MAX_DENSE_N,
            graph.n()
        )));
    }
    if graph.edge_type_count() != 1 {
        return Err(Error::InvalidArgument("the estimator study uses a single edge type".into()));
    }
    let adjacency = TypedAdjacency::new(graph);
    let params = CorrelationParams::new(vec![cfg.alpha], cfg.beta, (1.0 - cfg.alpha.abs()).min(1e-3))?;
    let op = PrecisionOperator::new(&adjacency, params)?;
    let u = partition.unlabeled();
    let dense_gamma = dense::to_dense(&op);
    let logdet_exact = dense::logdet_spd(&dense_gamma)?;
    let logdet_uu_exact = dense::logdet_spd(&dense::submatrix(&dense_gamma, u, u))?;
    let marginal_exact = logdet_exact - logdet_uu_exact;

    let mut cells = Vec::new();
    for &t in &cfg.probes {
        for &k in &cfg.lanczos_steps {
            let mut full = Vec::with_capacity(cfg.runs);
            let mut block = Vec::with_capacity(cfg.runs);
            for run in 0..cfg.runs {
                let est = EstimatorConfig {
                    probes: t,
                    lanczos_steps: k,
                    seed: cfg.seed.wrapping_add(1 + run as u64),
                    ..EstimatorConfig::default()
                };
                full.push(crate::linalg::mean(&slq_logdet_samples(&op, &est, 0)?));
                block.push(crate::linalg::mean(&slq_logdet_samples(&op.principal(u), &est, 1 << 32)?));
            }
            let marginal: Vec<f64> = full.iter().zip(&block).map(|(a, b)| a - b).collect();
            cells.push(EstimatorCell {
                probes: t,
                lanczos_steps: k,
                logdet_rel_rms: rel_rms(&full, logdet_exact),
                logdet_uu_rel_rms: rel_rms(&block, logdet_uu_exact),
                logdet_marginal_rel_rms: rel_rms(&marginal, marginal_exact),
            });
        }
    }

    let derivatives = if cfg.derivative_runs > 0 {
        let est = EstimatorConfig {
            probes: *cfg.probes.iter().max().expect("nonempty"),
            lanczos_steps: *cfg.lanczos_steps.iter().max().expect("nonempty"),
            cg_tolerance: cfg.cg_tolerance,
            cg_max_iters: cfg.cg_max_iters,
            ..EstimatorConfig::default()
        };
        gradient_study(&op, partition, &random_residual(partition, cfg.seed), &est, cfg.derivative_runs, cfg.seed)?
    } else {
        Vec::new()
    };

    Ok(EstimatorStudy {
        config: cfg.clone(),
        logdet_exact,
        logdet_uu_exact,
        cells,
        derivatives,
    })
}

/// Repeats the stochastic gradient `runs` times with independent probe
/// seeds and compares the sample means with the dense gradient.
pub fn gradient_study(
    op: &PrecisionOperator<'_>,
    partition: &VertexPartition,
    residual: &[f64],
    est: &EstimatorConfig,
    runs: usize,
    seed: u64,
) -> Result<Vec<DerivativeColumn>> {
    let exact = marginal_nll_and_grads(
        op,
        partition,
        residual,
        est,
        ObjectiveOptions {
            mode: EstimatorMode::Dense,
            value: false,
        },
    )?;
    let mut samples: Vec<Vec<f64>> = vec![Vec::with_capacity(runs); exact.d_alpha.len() + 1];
    for run in 0..runs {
        let g = marginal_nll_and_grads(
            op,
            partition,
            residual,
            &est.with_seed(seed.wrapping_add(10_000 + run as u64)),
            ObjectiveOptions {
                mode: EstimatorMode::Stochastic,
                value: false,
            },
        )?;
        for (k, d) in g.d_alpha.iter().chain([&g.d_beta]).enumerate() {
            samples[k].push(*d);
        }
    }
    let names = (0..exact.d_alpha.len()).map(|i| format!("alpha_{i}")).chain(["beta".to_string()]);
    Ok(names
        .zip(exact.d_alpha.iter().chain([&exact.d_beta]))
        .zip(samples)
        .map(|((parameter, &truth), s)| {
            let (mean, std) = mean_std(&s);
            let standard_error = std / (s.len() as f64).sqrt();
            DerivativeColumn {
                parameter,
                exact: truth,
                mean,
                standard_error,
                rel_rms: rel_rms(&s, truth),
                within_three_se: (mean - truth).abs() <= 3.0 * standard_error,
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub sizes: Vec<usize>,
    pub mean_degree: usize,
    pub rewire: f64,
    pub alpha: f64,
    pub labeled_fraction: f64,
    pub estimator: EstimatorConfig,
    /// Timed repetitions per size; the fastest is kept.
    pub repeats: usize,
    /// Keep repeating a size until this much time has been spent on it.
    #[serde(default)]
    pub min_seconds: f64,
    pub seed: u64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            sizes: vec![1_000, 3_000, 10_000, 30_000, 100_000],
            mean_degree: 10,
            rewire: 0.1,
            alpha: 0.9,
            labeled_fraction: 0.5,
            estimator: EstimatorConfig::default(),
            repeats: 1,
            min_seconds: 0.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub n: usize,
    pub edges: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub config: ScalingConfig,
    pub points: Vec<ScalingPoint>,
    /// Least-squares slope of `log(seconds)` on `log(edges)`; `None` with
    /// fewer than two distinct sizes.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
}

/// Least-squares line through `(ln x, ln y)`.
pub fn log_log_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    if lx.len() < 2 {
        return None;
    }
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Times one evaluation of `Ω` with all its parameter gradients per size.
pub fn scaling_benchmark(cfg: &ScalingConfig) -> Result<ScalingReport> {
    let mut points = Vec::new();
    for &n in &cfg.sizes {
        let (graph, partition) = estimator_instance(n, cfg.mean_degree, cfg.rewire, cfg.labeled_fraction, cfg.seed)?;
        let adjacency = TypedAdjacency::new(&graph);
        let op = PrecisionOperator::new(&adjacency, CorrelationParams::new(vec![cfg.alpha], 1.0, 1e-3)?)?;
        let residual = random_residual(&partition, cfg.seed);
        let (mut best, mut spent, mut runs) = (f64::INFINITY, 0.0, 0);
        while runs < cfg.repeats.max(1) || spent < cfg.min_seconds {
            let start = Instant::now();
            marginal_nll_and_grads(&op, &partition, &residual, &cfg.estimator, ObjectiveOptions::default())?;
            let t = start.elapsed().as_secs_f64();
            best = best.min(t);
            spent += t;
            runs += 1;
        }
        points.push(ScalingPoint {
            n,
            edges: graph.edge_count(),
            seconds: best,
        });
    }
    let fit = log_log_fit(
        &points.iter().map(|p| p.edges as f64).collect::<Vec<_>>(),
        &points.iter().map(|p| p.seconds).collect::<Vec<_>>(),
    );
    Ok(ScalingReport {
        config: cfg.clone(),
        points,
        slope: fit.map(|f| f.0),
        intercept: fit.map(|f| f.1),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InductiveConfig {
    pub fractions: Vec<f64>,
    pub seeds: usize,
    pub base_seed: u64,
    pub regressor: RegressorKind,
    pub train: TrainConfig,
    pub estimator: EstimatorConfig,
    pub fine_tune_epochs: usize,
    pub fine_tune_lr: f64,
}

impl Default for InductiveConfig {
    fn default() -> Self {
        Self {
            fractions: vec![0.0, 0.1, 0.2, 0.3, 0.5],
            seeds: 10,
            base_seed: 0,
            regressor: RegressorKind::SageMean,
            train: TrainConfig::default(),
            estimator: EstimatorConfig::default(),
            fine_tune_epochs: 25,
            fine_tune_lr: 5e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InductivePoint {
    pub fraction: f64,
    /// `None` when no vertex of the new graph is left to predict.
    pub reports: Option<Vec<ExperimentReport>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InductiveStudy {
    pub config: InductiveConfig,
    pub points: Vec<InductivePoint>,
}

/// Trains on 60% of `source`'s vertices and predicts on `target` while
/// revealing increasing fractions of its labels.
///
/// Per fraction the study reports `c-gnn` (conditioning with frozen
/// parameters), `c-gnn-unconditioned` (its own regressor on the same
/// vertices), and the `gnn` and `mlp` baselines fine-tuned on the revealed
/// labels.
pub fn inductive_study(source: &AttributedGraph, target: &AttributedGraph, cfg: &InductiveConfig) -> Result<InductiveStudy> {
    if cfg.fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
        return Err(Error::InvalidArgument("label fractions must lie in [0, 1]".into()));
    }
    let source = normalize_features(source)?;
    let target = normalize_features(target)?;
    let metric = Metric::for_graph(&target);
    let config = serde_json::to_value(cfg)?;
    let names = ["c-gnn", "c-gnn-unconditioned", "gnn", "mlp"];
    let mut per_fraction: Vec<Option<Vec<ExperimentReport>>> = cfg
        .fractions
        .iter()
        .map(|_| {
            Some(
                names
                    .iter()
                    .map(|m| ExperimentReport::new(m.to_string(), "inductive", cfg.base_seed, metric, config.clone()))
                    .collect(),
            )
        })
        .collect();

    let n_src = source.n();
    let n_tgt = target.n();
    let all_tgt: Vec<usize> = (0..n_tgt).collect();
    for i in 0..cfg.seeds {
        let seed = cfg.base_seed + i as u64;
        let split = split_vertices(n_src, &SplitConfig::new(seed))?;
        let spec = RegressorSpec::new(cfg.regressor, seed);
        let train_cfg = TrainConfig {
            seed,
            batch_size: capped(cfg.train.batch_size, split.train.len()),
            ..cfg.train.clone()
        };
        let model = train_cgnn(&source, &split.train, &split.validation, &spec, &train_cfg, &cfg.estimator.with_seed(seed))?;

        let fit = FitConfig {
            epochs: cfg.train.epochs,
            batch_size: train_cfg.batch_size,
            optimizer: OptimizerConfig::adam(cfg.train.lr_theta),
            seed,
            loss_scale: 1.0,
        };
        let baselines: Vec<(RegressorSpec, ParameterSet)> = [cfg.regressor, RegressorKind::Mlp]
            .into_iter()
            .map(|kind| {
                let spec = RegressorSpec::new(kind, seed);
                let init = spec.init(source.feature_dim())?;
                let r = fit_squared_error(&spec, &source, &split.train, &split.validation, init, &fit)?;
                Ok((spec, r.best))
            })
            .collect::<Result<_>>()?;

        let mut order = all_tgt.clone();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x1_d0c7));
        for (f_idx, &fraction) in cfg.fractions.iter().enumerate() {
            let count = ((fraction * n_tgt as f64).round() as usize).min(n_tgt);
            if count == n_tgt {
                per_fraction[f_idx] = None;
                continue;
            }
            let Some(reports) = per_fraction[f_idx].as_mut() else {
                continue;
            };
            let mut labeled = order[..count].to_vec();
            labeled.sort_unstable();
            let partition = VertexPartition::from_labeled(n_tgt, &labeled)?;
            let y_l = target.labels_on(&labeled)?;
            let y_u = target.labels_on(partition.unlabeled())?;

            let start = Instant::now();
            let conditioned = predict_inductive(&model, &target, &labeled, &y_l)?;
            reports[0].values.push(metric.score(&conditioned, &y_u)?);
            reports[0].seconds.push(start.elapsed().as_secs_f64());
            reports[0].alphas.push(model.correlation.alphas().to_vec());
            reports[0].betas.push(model.correlation.beta());

            let (plain, _) = forward(&model.spec, &model.params, &target, partition.unlabeled())?;
            reports[1].values.push(metric.score(&plain, &y_u)?);

            for (slot, (spec, params)) in baselines.iter().enumerate() {
                let start = Instant::now();
                let tuned = if labeled.is_empty() || cfg.fine_tune_epochs == 0 {
                    params.clone()
                } else {
                    let tune = FitConfig {
                        epochs: cfg.fine_tune_epochs,
                        batch_size: capped(cfg.train.batch_size, labeled.len()),
                        optimizer: OptimizerConfig::adam(cfg.fine_tune_lr),
                        seed,
                        loss_scale: 1.0,
                    };
                    fit_squared_error(spec, &target, &labeled, &[], params.clone(), &tune)?.last
                };
                let (pred, _) = forward(spec, &tuned, &target, partition.unlabeled())?;
                reports[2 + slot].values.push(metric.score(&pred, &y_u)?);
                reports[2 + slot].seconds.push(start.elapsed().as_secs_f64());
            }
        }
    }

    let points = cfg
        .fractions
        .iter()
        .zip(per_fraction)
        .map(|(&fraction, reports)| InductivePoint {
            fraction,
            reports: reports.map(|rs| rs.into_iter().map(ExperimentReport::finish).collect()),
        })
        .collect();
    Ok(InductiveStudy {
        config: cfg.clone(),
        points,
    })
}
