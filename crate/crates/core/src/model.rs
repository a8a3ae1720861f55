//! The correlated model `y ~ N(ŷ, Γ^{-1})` on top of a base regressor.
//!
//! With labeled vertices `L`, unlabeled `U` and residual `r_L = y_L - ŷ_L`,
//! the negative log marginal likelihood (up to constants) is
//!
//! ```text
//! Ω = r_Lᵀ Γ̄_LL r_L - log det Γ + log det Γ_UU
//! ```
//!
//! and the prediction on `U` is the conditional mean
//! `ŷ_U - Γ_UU^{-1} Γ_UL r_L`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::{self, MAX_DENSE_N};
use crate::graph::{AttributedGraph, TypedAdjacency, VertexPartition};
use crate::linalg::{map_probes, mean, probe_vector, slq_logdet_samples, solve, CgSettings, EstimatorConfig};
use crate::operator::{dot, gather};
use crate::precision::{reparametrize, CorrelationParams, Param, PrecisionOperator};
use crate::regressors::{
    backward, epoch_batches, forward, residual_gradient, OptimizerConfig, ParameterSet, RegressorSpec,
};
use crate::{Error, Result};

const TRACE_STREAM: u64 = 0;
const LOGDET_STREAM: u64 = 1 << 32;
const LOGDET_UU_STREAM: u64 = 2 << 32;

/// How log-determinants, traces and solves are evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorMode {
    /// CG, Hutchinson and SLQ.
    #[default]
    Stochastic,
    /// Dense Cholesky factorizations; exact but cubic.
    Dense,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectiveOptions {
    pub mode: EstimatorMode,
    /// Also estimate `Ω` itself. Gradients never need the log-determinants.
    pub value: bool,
}

impl Default for ObjectiveOptions {
    fn default() -> Self {
        Self {
            mode: EstimatorMode::Stochastic,
            value: true,
        }
    }
}

/// `Ω` and its gradients at one parameter point.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalNll {
    pub value: Option<f64>,
    /// `r_Lᵀ Γ̄_LL r_L`.
    pub quadratic: f64,
    pub d_alpha: Vec<f64>,
    pub d_beta: f64,
    /// `dΩ/dŷ_L = -2 Γ̄_LL r_L`.
    pub d_yhat: Vec<f64>,
    /// `Γ̄_LL r_L`.
    pub marginal_residual: Vec<f64>,
}

fn check_residual(partition: &VertexPartition, residual: &[f64], n: usize) -> Result<()> {
    if partition.labeled().is_empty() {
        return Err(Error::InvalidArgument("the labeled set is empty".into()));
    }
    if partition.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: partition.n(),
            context: "partition size vs graph",
        });
    }
    if residual.len() != partition.labeled().len() {
        return Err(Error::DimensionMismatch {
            expected: partition.labeled().len(),
            actual: residual.len(),
            context: "labeled residual",
        });
    }
    if residual.iter().any(|r| !r.is_finite()) {
        return Err(Error::NonFinite("residual"));
    }
    Ok(())
}

fn derivative_params(types: usize) -> Vec<Param> {
    (0..types).map(Param::Alpha).chain([Param::Beta]).collect()
}

/// Evaluates `Ω(α, β)` for a fixed labeled residual, with gradients in
/// every `α_i`, in `β` and in `ŷ_L`.
///
/// The quadratic term needs one CG solve `u = Γ_UU^{-1} Γ_UL r_L`; with
/// `v = (r_L, -u)` each of its derivatives is `vᵀ (∂Γ) v`. The trace terms
/// `tr(Γ^{-1} ∂Γ) - tr(Γ_UU^{-1} ∂Γ_UU)` use the same Gaussian probe for
/// both matrices (restricted to `U` for the second), which keeps each
/// difference unbiased while cancelling most of its variance.
pub fn marginal_nll_and_grads(
    op: &PrecisionOperator<'_>,
    partition: &VertexPartition,
    residual: &[f64],
    est: &EstimatorConfig,
    opts: ObjectiveOptions,
) -> Result<MarginalNll> {
    check_residual(partition, residual, op.n())?;
    match opts.mode {
        EstimatorMode::Stochastic => stochastic_nll(op, partition, residual, est, opts.value),
        EstimatorMode::Dense => dense_nll(op, partition, residual, opts.value),
    }
}

fn stochastic_nll(
    op: &PrecisionOperator<'_>,
    partition: &VertexPartition,
    r: &[f64],
    est: &EstimatorConfig,
    with_value: bool,
) -> Result<MarginalNll> {
    est.validate()?;
    let cg = est.cg();
    let n = op.n();
    let (l, u) = (partition.labeled(), partition.unlabeled());
    let all: Vec<usize> = (0..n).collect();

    let u_sol = if u.is_empty() {
        Vec::new()
    } else {
        solve(&op.principal(u), &op.apply_block(u, l, r), &cg)?
    };
    let mut marginal = op.apply_block(l, l, r);
    if !u.is_empty() {
        for (m, c) in marginal.iter_mut().zip(op.apply_block(l, u, &u_sol)) {
            *m -= c;
        }
    }
    let quadratic = dot(r, &marginal);

    let mut v = vec![0.0; n];
    for (&i, &x) in l.iter().zip(r) {
        v[i] = x;
    }
    for (&i, &x) in u.iter().zip(&u_sol) {
        v[i] = -x;
    }

    let params = derivative_params(op.params().alphas().len());
    let full_views = params
        .iter()
        .map(|&p| op.derivative_view(p, &all, &all))
        .collect::<Result<Vec<_>>>()?;
    let uu_views = params
        .iter()
        .map(|&p| op.derivative_view(p, u, u))
        .collect::<Result<Vec<_>>>()?;

    let quad_grads: Vec<f64> = full_views.iter().map(|d| dot(&v, &d.apply_vec(&v))).collect();

    let whole = op.principal(&all);
    let block_uu = op.principal(u);
    let samples = map_probes(est, est.probes, |t| -> Result<Vec<f64>> {
        let z = probe_vector(est.seed, TRACE_STREAM + t as u64, n);
        let x = solve(&whole, &z, &cg)?;
        let z_u = gather(&z, u);
        let w = if u.is_empty() {
            Vec::new()
        } else {
            solve(&block_uu, &z_u, &cg)?
        };
        Ok(full_views
            .iter()
            .zip(&uu_views)
            .map(|(full, uu)| dot(&x, &full.apply_vec(&z)) - dot(&w, &uu.apply_vec(&z_u)))
            .collect())
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let traces: Vec<f64> = (0..params.len())
        .map(|k| samples.iter().map(|s| s[k]).sum::<f64>() / samples.len() as f64)
        .collect();

    let grads: Vec<f64> = quad_grads.iter().zip(&traces).map(|(q, t)| q - t).collect();
    let (d_beta, d_alpha) = grads.split_last().expect("beta gradient present");

    let value = if with_value {
        let ld = mean(&slq_logdet_samples(&whole, est, LOGDET_STREAM)?);
        let ld_uu = if u.is_empty() {
            0.0
        } else {
            mean(&slq_logdet_samples(&block_uu, est, LOGDET_UU_STREAM)?)
        };
        Some(quadratic - ld + ld_uu)
    } else {
        None
    };

    Ok(MarginalNll {
        value,
        quadratic,
        d_alpha: d_alpha.to_vec(),
        d_beta: *d_beta,
        d_yhat: residual_gradient(&marginal, 1),
        marginal_residual: marginal,
    })
}

fn dense_nll(
    op: &PrecisionOperator<'_>,
    partition: &VertexPartition,
    r: &[f64],
    with_value: bool,
) -> Result<MarginalNll> {
    use nalgebra::DVector;

    let n = op.n();
    if n > MAX_DENSE_N {
        return Err(Error::InvalidArgument(format!(
            "dense mode supports at most {MAX_DENSE_N} vertices, got {n}"
        )));
    }
    let (l, u) = (partition.labeled(), partition.unlabeled());
    let all: Vec<usize> = (0..n).collect();
    let g = dense::to_dense(op);
    let g_uu = dense::submatrix(&g, u, u);
    let schur = dense::schur_complement(&g, partition)?;
    let r_vec = DVector::from_column_slice(r);
    let marginal = &schur * &r_vec;
    let quadratic = r_vec.dot(&marginal);

    let rhs = dense::submatrix(&g, u, l) * &r_vec;
    let u_sol = dense::solve_spd(&g_uu, rhs.as_slice())?;
    let mut v = DVector::zeros(n);
    for (&i, &x) in l.iter().zip(r) {
        v[i] = x;
    }
    for (&i, &x) in u.iter().zip(&u_sol) {
        v[i] = -x;
    }

    let g_inv = dense::inverse_spd(&g)?;
    let g_uu_inv = dense::inverse_spd(&g_uu)?;
    let mut grads = Vec::new();
    for p in derivative_params(op.params().alphas().len()) {
        let dg = dense::to_dense(&op.derivative_view(p, &all, &all)?);
        let quad = v.dot(&(&dg * &v));
        // both factors symmetric: tr(AB) = Σ A_ij B_ij
        let tr = g_inv.component_mul(&dg).sum();
        let tr_uu = g_uu_inv.component_mul(&dense::submatrix(&dg, u, u)).sum();
        grads.push(quad - tr + tr_uu);
    }
    let d_beta = grads.pop().expect("beta gradient present");

    let value = if with_value {
        Some(quadratic - dense::logdet_spd(&g)? + dense::logdet_spd(&g_uu)?)
    } else {
        None
    };
    let marginal: Vec<f64> = marginal.iter().copied().collect();
    Ok(MarginalNll {
        value,
        quadratic,
        d_alpha: grads,
        d_beta,
        d_yhat: residual_gradient(&marginal, 1),
        marginal_residual: marginal,
    })
}

/// `ŷ_U - Γ_UU^{-1} Γ_UL (y_L - ŷ_L)`.
pub fn conditional_mean(
    op: &PrecisionOperator<'_>,
    partition: &VertexPartition,
    yhat_l: &[f64],
    yhat_u: &[f64],
    y_l: &[f64],
    mode: EstimatorMode,
    cg: &CgSettings,
) -> Result<Vec<f64>> {
    let (l, u) = (partition.labeled(), partition.unlabeled());
    if yhat_l.len() != l.len() || y_l.len() != l.len() || yhat_u.len() != u.len() {
        return Err(Error::DimensionMismatch {
            expected: l.len(),
            actual: y_l.len(),
            context: "labels and predictions vs partition",
        });
    }
    if u.is_empty() {
        return Ok(Vec::new());
    }
    if l.is_empty() {
        return Ok(yhat_u.to_vec());
    }
    let r: Vec<f64> = y_l.iter().zip(yhat_l).map(|(y, p)| y - p).collect();
    let rhs = op.apply_block(u, l, &r);
    let x = match mode {
        EstimatorMode::Stochastic => solve(&op.principal(u), &rhs, cg)?,
        EstimatorMode::Dense => {
            if op.n() > MAX_DENSE_N {
                return Err(Error::InvalidArgument(format!(
                    "dense mode supports at most {MAX_DENSE_N} vertices"
                )));
            }
            dense::solve_spd(&dense::to_dense(&op.principal(u)), &rhs)?
        }
    };
    Ok(yhat_u.iter().zip(&x).map(|(p, c)| p - c).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Labeled vertices per step; `None` uses all of them.
    pub batch_size: Option<usize>,
    pub lr_theta: f64,
    pub lr_alpha_beta: f64,
    /// Seeds the batch order; probe seeds derive from the estimator seed.
    pub seed: u64,
    pub eta: f64,
    pub init_alpha: f64,
    pub init_beta: f64,
    pub freeze_alpha: bool,
    pub freeze_beta: bool,
    pub freeze_theta: bool,
    pub mode: EstimatorMode,
    /// Estimate `Ω` every step for the objective trace (two SLQ runs per step).
    pub track_objective: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 75,
            batch_size: None,
            lr_theta: 1e-3,
            lr_alpha_beta: 0.1,
            seed: 0,
            eta: CorrelationParams::DEFAULT_ETA,
            init_alpha: 0.0,
            init_beta: 1.0,
            freeze_alpha: false,
            freeze_beta: false,
            freeze_theta: false,
            mode: EstimatorMode::Stochastic,
            track_objective: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub config: TrainConfig,
    pub epochs_run: usize,
    /// Epoch of the kept checkpoint (0 is the initialization).
    pub best_epoch: usize,
    /// Per-epoch mean of `r_Lᵀ Γ̄_LL r_L / |L|` over the steps.
    pub loss_trace: Vec<f64>,
    /// Per-epoch mean of `Ω / |L|`, when tracked.
    pub objective_trace: Vec<f64>,
    /// Per-epoch `α` after the epoch's last step.
    pub alpha_trace: Vec<Vec<f64>>,
    pub last_params: ParameterSet,
    pub last_correlation: CorrelationParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CgnnModel {
    pub format: String,
    pub version: u32,
    pub spec: RegressorSpec,
    pub params: ParameterSet,
    pub correlation: CorrelationParams,
    pub estimator: EstimatorConfig,
    pub mode: EstimatorMode,
    pub training: Option<TrainingRecord>,
}

impl CgnnModel {
    pub const FORMAT: &'static str = "corrgnn-model";
    pub const VERSION: u32 = 1;

    pub fn new(spec: RegressorSpec, params: ParameterSet, correlation: CorrelationParams, estimator: EstimatorConfig) -> Self {
        Self {
            format: Self::FORMAT.into(),
            version: Self::VERSION,
            spec,
            params,
            correlation,
            estimator,
            mode: EstimatorMode::Stochastic,
            training: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text)?;
        if model.format != Self::FORMAT || model.version != Self::VERSION {
            return Err(Error::Format {
                file: "model".into(),
                reason: format!("unsupported format {} v{}", model.format, model.version),
            });
        }
        let c = &model.correlation;
        CorrelationParams::new(c.alphas().to_vec(), c.beta(), c.eta())?;
        ParameterSet::from_parts(model.params.layout().to_vec(), model.params.values().to_vec())?;
        Ok(model)
    }
}

fn step_seed(base: u64, step: u64) -> u64 {
    base.wrapping_add(step.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn correlation_from(
    raw: &[f64],
    cfg: &TrainConfig,
    types: usize,
) -> Result<(CorrelationParams, crate::precision::ChainFactors)> {
    let (mut params, factors) = reparametrize(raw, cfg.eta)?;
    if cfg.freeze_alpha || cfg.freeze_beta {
        let alphas = if cfg.freeze_alpha {
            vec![cfg.init_alpha; types]
        } else {
            params.alphas().to_vec()
        };
        let beta = if cfg.freeze_beta { cfg.init_beta } else { params.beta() };
        params = CorrelationParams::new(alphas, beta, cfg.eta)?;
    }
    Ok((params, factors))
}

fn mean_squared(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len().max(1) as f64
}

/// Joint training of `θ` (Adam) and the raw `(α, β)` coordinates (gradient
/// descent) on mini-batches of `train`, keeping the checkpoint with the
/// lowest validation error of the conditional-mean prediction.
pub fn train_cgnn(
    graph: &AttributedGraph,
    train: &[usize],
    validation: &[usize],
    spec: &RegressorSpec,
    cfg: &TrainConfig,
    est: &EstimatorConfig,
) -> Result<CgnnModel> {
    let init = spec.init(graph.feature_dim())?;
    train_cgnn_from(graph, train, validation, spec, init, cfg, est)
}

/// [`train_cgnn`] starting from given regressor weights.
pub fn train_cgnn_from(
    graph: &AttributedGraph,
    train: &[usize],
    validation: &[usize],
    spec: &RegressorSpec,
    init: ParameterSet,
    cfg: &TrainConfig,
    est: &EstimatorConfig,
) -> Result<CgnnModel> {
    if train.is_empty() {
        return Err(Error::InvalidArgument("no training labels".into()));
    }
    est.validate()?;
    let n = graph.n();
    let types = graph.edge_type_count().max(1);
    let adjacency = TypedAdjacency::new(graph);
    let init_corr = CorrelationParams::new(vec![cfg.init_alpha; types], cfg.init_beta, cfg.eta)?;
    let mut raw = init_corr.to_raw();
    let mut params = init;
    let mut opt = OptimizerConfig::adam(cfg.lr_theta).build(params.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let cg = est.cg();

    let train_partition = VertexPartition::from_labeled(n, train)?;
    let y_train = graph.labels_on(train)?;
    let y_val = graph.labels_on(validation)?;
    let val_pos: Vec<usize> = {
        let pos = crate::operator::positions(n, train_partition.unlabeled());
        validation
            .iter()
            .map(|&v| {
                let p = pos[v];
                if p == usize::MAX {
                    Err(Error::InvalidArgument(format!("validation vertex {v} is also a training vertex")))
                } else {
                    Ok(p)
                }
            })
            .collect::<Result<_>>()?
    };
    let all: Vec<usize> = (0..n).collect();

    let validation_error = |p: &ParameterSet, corr: &CorrelationParams| -> Result<f64> {
        if validation.is_empty() {
            return Ok(0.0);
        }
        let op = PrecisionOperator::new(&adjacency, corr.clone())?;
        let (yhat, _) = forward(spec, p, graph, &all)?;
        let pred = conditional_mean(
            &op,
            &train_partition,
            &gather(&yhat, train_partition.labeled()),
            &gather(&yhat, train_partition.unlabeled()),
            &y_train,
            cfg.mode,
            &cg,
        )?;
        Ok(mean_squared(&gather(&pred, &val_pos), &y_val))
    };

    let (corr0, _) = correlation_from(&raw, cfg, types)?;
    let mut best = (validation_error(&params, &corr0)?, 0usize, params.clone(), corr0);
    let mut loss_trace = Vec::with_capacity(cfg.epochs);
    let mut objective_trace = Vec::new();
    let mut alpha_trace = Vec::with_capacity(cfg.epochs);
    let mut step = 0u64;

    for epoch in 1..=cfg.epochs {
        let mut fit_sum = 0.0;
        let mut obj_sum = 0.0;
        let mut steps = 0usize;
        for batch in epoch_batches(train, cfg.batch_size, &mut rng)? {
            let partition = VertexPartition::from_labeled(n, &batch)?;
            let y = graph.labels_on(&batch)?;
            let (pred, cache) = forward(spec, &params, graph, &batch)?;
            let r: Vec<f64> = y.iter().zip(&pred).map(|(t, p)| t - p).collect();
            let (corr, chain) = correlation_from(&raw, cfg, types)?;
            let op = PrecisionOperator::new(&adjacency, corr)?;
            let nll = marginal_nll_and_grads(
                &op,
                &partition,
                &r,
                &est.with_seed(step_seed(est.seed, step)),
                ObjectiveOptions {
                    mode: cfg.mode,
                    value: cfg.track_objective,
                },
            )?;
            let b = batch.len() as f64;
            fit_sum += nll.quadratic / b;
            obj_sum += nll.value.unwrap_or(f64::NAN) / b;
            steps += 1;

            if !cfg.freeze_theta {
                let upstream = residual_gradient(&nll.marginal_residual, batch.len());
                let grad = backward(spec, &params, graph, &cache, &upstream)?;
                opt.step(params.values_mut(), &grad);
            }
            let d_alpha: Vec<f64> = nll.d_alpha.iter().map(|g| g / b).collect();
            let g_raw = chain.pull_back(&d_alpha, nll.d_beta / b);
            let (g_raw_alpha, g_raw_beta) = g_raw.split_at(types);
            if !cfg.freeze_alpha {
                for (x, g) in raw[..types].iter_mut().zip(g_raw_alpha) {
                    *x -= cfg.lr_alpha_beta * g;
                }
            }
            if !cfg.freeze_beta {
                raw[types] -= cfg.lr_alpha_beta * g_raw_beta[0];
            }
            step += 1;
        }
        if raw.iter().chain(params.values()).any(|x| !x.is_finite()) {
            return Err(Error::Diverged {
                epoch,
                reason: "non-finite parameters".into(),
            });
        }
        let fit = fit_sum / steps as f64;
        if !fit.is_finite() {
            return Err(Error::Diverged {
                epoch,
                reason: format!("data-fit term {fit}"),
            });
        }
        loss_trace.push(fit);
        if cfg.track_objective {
            objective_trace.push(obj_sum / steps as f64);
        }
        let (corr, _) = correlation_from(&raw, cfg, types)?;
        alpha_trace.push(corr.alphas().to_vec());
        if !validation.is_empty() {
            let err = validation_error(&params, &corr)?;
            if err < best.0 {
                best = (err, epoch, params.clone(), corr);
            }
        }
    }

    let (last_corr, _) = correlation_from(&raw, cfg, types)?;
    let (best_epoch, best_params, best_corr) = if validation.is_empty() {
        (cfg.epochs, params.clone(), last_corr.clone())
    } else {
        (best.1, best.2, best.3)
    };
    let mut model = CgnnModel::new(spec.clone(), best_params, best_corr, est.clone());
    model.mode = cfg.mode;
    model.training = Some(TrainingRecord {
        config: cfg.clone(),
        epochs_run: cfg.epochs,
        best_epoch,
        loss_trace,
        objective_trace,
        alpha_trace,
        last_params: params,
        last_correlation: last_corr,
    });
    Ok(model)
}

/// Conditional-mean prediction on `partition.unlabeled()` given the labels
/// `labels_l` on `partition.labeled()`.
pub fn predict_cgnn(
    model: &CgnnModel,
    graph: &AttributedGraph,
    partition: &VertexPartition,
    labels_l: &[f64],
) -> Result<Vec<f64>> {
    if partition.n() != graph.n() {
        return Err(Error::DimensionMismatch {
            expected: graph.n(),
            actual: partition.n(),
            context: "partition size vs graph",
        });
    }
    let all: Vec<usize> = (0..graph.n()).collect();
    let (yhat, _) = forward(&model.spec, &model.params, graph, &all)?;
    let yhat_u = gather(&yhat, partition.unlabeled());
    if partition.labeled().is_empty() {
        return Ok(yhat_u);
    }
    let adjacency = TypedAdjacency::new(graph);
    let op = PrecisionOperator::new(&adjacency, model.correlation.clone())?;
    conditional_mean(
        &op,
        partition,
        &gather(&yhat, partition.labeled()),
        &yhat_u,
        labels_l,
        model.mode,
        &model.estimator.cg(),
    )
}

/// Prediction on an unseen graph with frozen parameters, conditioning on
/// the labels of `labeled`. Returns values for the remaining vertices in
/// increasing order; with no labels this is exactly the regressor output.
pub fn predict_inductive(
    model: &CgnnModel,
    graph: &AttributedGraph,
    labeled: &[usize],
    labels: &[f64],
) -> Result<Vec<f64>> {
    if graph.feature_dim() != model.params.layout()[0].inputs {
        return Err(Error::DimensionMismatch {
            expected: model.params.layout()[0].inputs,
            actual: graph.feature_dim(),
            context: "feature dimension of the new graph",
        });
    }
    let partition = VertexPartition::from_labeled(graph.n(), labeled)?;
    if labeled.is_empty() {
        let (yhat, _) = forward(&model.spec, &model.params, graph, partition.unlabeled())?;
        return Ok(yhat);
    }
    let mut sorted: Vec<(usize, f64)> = labeled.iter().copied().zip(labels.iter().copied()).collect();
    if sorted.len() != labeled.len() || labels.len() != labeled.len() {
        return Err(Error::DimensionMismatch {
            expected: labeled.len(),
            actual: labels.len(),
            context: "labels for the labeled vertices",
        });
    }
    sorted.sort_by_key(|p| p.0);
    let y_l: Vec<f64> = sorted.iter().map(|p| p.1).collect();
    predict_cgnn(model, graph, &partition, &y_l)
}
