//! Synthetic data, bundle IO, preprocessing and evaluation metrics.

mod bundle;
mod ising;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::AttributedGraph;
use crate::{Error, Result};

pub use bundle::{read_bundle, write_bundle, Bundle};
pub use ising::{sample_ising, IsingChain, IsingConfig};

/// Standardizes every feature column to mean 0 and (population) standard
/// deviation 1. Constant columns become zero.
pub fn normalize_features(graph: &AttributedGraph) -> Result<AttributedGraph> {
    let (n, d) = (graph.n(), graph.feature_dim());
    if n < 2 {
        return Err(Error::InvalidArgument("normalization needs at least two vertices".into()));
    }
    let x = graph.features();
    let mut out = vec![0.0; n * d];
    for k in 0..d {
        let mean = (0..n).map(|i| x[i * d + k]).sum::<f64>() / n as f64;
        let var = (0..n).map(|i| (x[i * d + k] - mean).powi(2)).sum::<f64>() / n as f64;
        let std = var.sqrt();
        // relative threshold so rounding noise in a constant column stays zero
        let scale = (0..n).map(|i| x[i * d + k].abs()).fold(0.0, f64::max);
        if std <= 1e-12 * scale.max(f64::MIN_POSITIVE) || std == 0.0 {
            continue;
        }
        for i in 0..n {
            out[i * d + k] = (x[i * d + k] - mean) / std;
        }
    }
    graph.with_features(d, out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
    pub seed: u64,
}

impl SplitConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            train: 0.6,
            validation: 0.2,
            test: 0.2,
            seed,
        }
    }

    /// Set sizes for `n` vertices by largest remainder, ties going to
    /// train, then test, then validation.
    pub fn sizes(&self, n: usize) -> Result<(usize, usize, usize)> {
        let fr = [self.train, self.validation, self.test];
        if fr.iter().any(|f| !(*f >= 0.0)) {
            return Err(Error::InvalidArgument("split fractions must be non-negative".into()));
        }
        if (fr.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "split fractions sum to {}, expected 1",
                fr.iter().sum::<f64>()
            )));
        }
        let exact: Vec<f64> = fr.iter().map(|f| f * n as f64).collect();
        let mut sizes: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
        let mut left = n.saturating_sub(sizes.iter().sum());
        // train, test, validation
        let mut order = vec![0usize, 2, 1];
        let rem = |i: usize| exact[i] - exact[i].floor();
        order.sort_by(|&a, &b| {
            let (ra, rb) = (rem(a), rem(b));
            if (ra - rb).abs() <= 1e-9 {
                std::cmp::Ordering::Equal
            } else {
                rb.total_cmp(&ra)
            }
        });
        for &i in order.iter().cycle() {
            if left == 0 {
                break;
            }
            sizes[i] += 1;
            left -= 1;
        }
        Ok((sizes[0], sizes[1], sizes[2]))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Random disjoint train/validation/test cover of `0..n`, each set sorted.
pub fn split_vertices(n: usize, cfg: &SplitConfig) -> Result<Split> {
    if n < 3 {
        return Err(Error::InvalidArgument("splitting needs at least three vertices".into()));
    }
    let (a, b, _) = cfg.sizes(n)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    let sorted = |s: &[usize]| {
        let mut v = s.to_vec();
        v.sort_unstable();
        v
    };
    Ok(Split {
        train: sorted(&order[..a]),
        validation: sorted(&order[a..a + b]),
        test: sorted(&order[a + b..]),
    })
}

fn check_pair(predictions: &[f64], truth: &[f64]) -> Result<()> {
    if predictions.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            actual: predictions.len(),
            context: "predictions vs truth",
        });
    }
    if truth.is_empty() {
        return Err(Error::UndefinedMetric("no samples"));
    }
    Ok(())
}

/// Coefficient of determination `1 - SS_res / SS_tot`.
pub fn r_squared(predictions: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(predictions, truth)?;
    let mean = truth.iter().sum::<f64>() / truth.len() as f64;
    let ss_tot: f64 = truth.iter().map(|t| (t - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::UndefinedMetric("R² with constant truth"));
    }
    let ss_res: f64 = predictions.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Fraction of predictions whose sign matches a ±1 truth; 0 counts as +1.
pub fn binary_accuracy(predictions: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(predictions, truth)?;
    if truth.iter().any(|t| t.abs() != 1.0) {
        return Err(Error::InvalidArgument("binary truth must be -1 or +1".into()));
    }
    let hits = predictions
        .iter()
        .zip(truth)
        .filter(|(p, t)| (if **p >= 0.0 { 1.0 } else { -1.0 }) == **t)
        .count();
    Ok(hits as f64 / truth.len() as f64)
}
