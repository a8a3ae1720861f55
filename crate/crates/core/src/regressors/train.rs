use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{backward, forward, ParameterSet, RegressorSpec};
use crate::graph::{AttributedGraph, VertexPartition};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerConfig {
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64 },
    Sgd { lr: f64 },
}

impl OptimizerConfig {
    pub fn adam(lr: f64) -> Self {
        OptimizerConfig::Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn build(&self, len: usize) -> Optimizer {
        match *self {
            OptimizerConfig::Adam { lr, beta1, beta2, eps } => Optimizer::Adam(Adam {
                lr,
                beta1,
                beta2,
                eps,
                m: vec![0.0; len],
                v: vec![0.0; len],
                t: 0,
            }),
            OptimizerConfig::Sgd { lr } => Optimizer::Sgd { lr },
        }
    }
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self::adam(1e-3)
    }
}

#[derive(Clone, Debug)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

#[derive(Clone, Debug)]
pub enum Optimizer {
    Adam(Adam),
    Sgd { lr: f64 },
}

impl Optimizer {
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        match self {
            Optimizer::Sgd { lr } => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= *lr * g;
                }
            }
            Optimizer::Adam(a) => {
                a.t += 1;
                let c1 = 1.0 - a.beta1.powi(a.t);
                let c2 = 1.0 - a.beta2.powi(a.t);
                for k in 0..params.len() {
                    let g = grad[k];
                    a.m[k] = a.beta1 * a.m[k] + (1.0 - a.beta1) * g;
                    a.v[k] = a.beta2 * a.v[k] + (1.0 - a.beta2) * g * g;
                    let m_hat = a.m[k] / c1;
                    let v_hat = a.v[k] / c2;
                    params[k] -= a.lr * m_hat / (v_hat.sqrt() + a.eps);
                }
            }
        }
    }
}

/// Shuffles `train` and cuts it into sorted batches of `batch_size`
/// (the whole set when `None`).
pub fn epoch_batches(train: &[usize], batch_size: Option<usize>, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<usize>>> {
    let size = match batch_size {
        Some(0) => return Err(Error::InvalidArgument("batch size must be positive".into())),
        Some(b) if b > train.len() => {
            return Err(Error::InvalidArgument(format!(
                "batch size {b} exceeds the {} training vertices",
                train.len()
            )))
        }
        Some(b) => b,
        None => train.len(),
    };
    if size == train.len() {
        let mut all = train.to_vec();
        all.sort_unstable();
        return Ok(vec![all]);
    }
    let mut order = train.to_vec();
    order.shuffle(rng);
    Ok(order
        .chunks(size)
        .map(|c| {
            let mut b = c.to_vec();
            b.sort_unstable();
            b
        })
        .collect())
}

/// `dLoss/dŷ = −2 v / |batch|` for a weighted residual `v`.
pub fn residual_gradient(weighted_residual: &[f64], batch: usize) -> Vec<f64> {
    let scale = batch as f64;
    weighted_residual.iter().map(|v| -2.0 * v / scale).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub epochs: usize,
    /// Mini-batch size; `None` trains on all labeled vertices per step.
    pub batch_size: Option<usize>,
    pub optimizer: OptimizerConfig,
    /// Seeds the batch order.
    pub seed: u64,
    /// Multiplies the loss, as the precision `β` does when all `α` are zero.
    pub loss_scale: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            epochs: 75,
            batch_size: None,
            optimizer: OptimizerConfig::default(),
            seed: 0,
            loss_scale: 1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FitReport {
    pub last: ParameterSet,
    /// Parameters with the lowest validation error (epoch 0 is the
    /// initialization); equals `last` without a validation set.
    pub best: ParameterSet,
    pub best_epoch: usize,
    /// Mean squared training error after each epoch, starting at epoch 0.
    pub loss_trace: Vec<f64>,
}

fn mean_squared_error(pred: &[f64], truth: &[f64]) -> f64 {
    pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / pred.len() as f64
}

/// Trains from `init` on `train` minimizing `loss_scale · Σ (ŷ_i − y_i)² / |batch|`.
pub fn fit_squared_error(
    spec: &RegressorSpec,
    graph: &AttributedGraph,
    train: &[usize],
    validation: &[usize],
    init: ParameterSet,
    cfg: &FitConfig,
) -> Result<FitReport> {
    if train.is_empty() {
        return Err(Error::InvalidArgument("no training vertices".into()));
    }
    let y_train = graph.labels_on(train)?;
    let y_val = graph.labels_on(validation)?;
    let label_of = |batch: &[usize]| graph.labels_on(batch);

    let mut params = init;
    let mut opt = cfg.optimizer.build(params.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let evaluate = |p: &ParameterSet| -> Result<(f64, f64)> {
        let (pred, _) = forward(spec, p, graph, train)?;
        let train_loss = mean_squared_error(&pred, &y_train);
        let val_loss = if validation.is_empty() {
            0.0
        } else {
            let (pred, _) = forward(spec, p, graph, validation)?;
            mean_squared_error(&pred, &y_val)
        };
        Ok((train_loss, val_loss))
    };

    let (loss0, val0) = evaluate(&params)?;
    let mut loss_trace = vec![loss0];
    let mut best = (val0, 0usize, params.clone());

    for epoch in 1..=cfg.epochs {
        for batch in epoch_batches(train, cfg.batch_size, &mut rng)? {
            let y = label_of(&batch)?;
            let (pred, cache) = forward(spec, &params, graph, &batch)?;
            let weighted: Vec<f64> = y.iter().zip(&pred).map(|(t, p)| cfg.loss_scale * (t - p)).collect();
            let upstream = residual_gradient(&weighted, batch.len());
            let grad = backward(spec, &params, graph, &cache, &upstream)?;
            opt.step(params.values_mut(), &grad);
        }
        if params.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged {
                epoch,
                reason: "non-finite regressor parameters".into(),
            });
        }
        let (loss, val) = evaluate(&params)?;
        if !loss.is_finite() {
            return Err(Error::Diverged {
                epoch,
                reason: format!("training loss {loss}"),
            });
        }
        loss_trace.push(loss);
        if !validation.is_empty() && val < best.0 {
            best = (val, epoch, params.clone());
        }
    }

    let (best_epoch, best_params) = if validation.is_empty() {
        (cfg.epochs, params.clone())
    } else {
        (best.1, best.2)
    };
    Ok(FitReport {
        last: params,
        best: best_params,
        best_epoch,
        loss_trace,
    })
}

/// Trains a freshly initialized regressor on the labeled vertices and
/// returns the final parameters.
pub fn train_squared_error(
    spec: &RegressorSpec,
    graph: &AttributedGraph,
    partition: &VertexPartition,
    cfg: &FitConfig,
) -> Result<ParameterSet> {
    let init = spec.init(graph.feature_dim())?;
    Ok(fit_squared_error(spec, graph, partition.labeled(), &[], init, cfg)?.last)
}
