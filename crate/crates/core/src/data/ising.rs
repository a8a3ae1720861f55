use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{grid_graph, AttributedGraph};
use crate::{Error, Result};

/// Ising model on a `rows × cols` grid with uniform coupling `J` and field
/// `h_i = field_scale · x_i1 · x_i2` over coordinates in `[-1, 1]`, sampled
/// from `P(σ) ∝ exp(Σ_{ij} J σ_i σ_j + Σ_i h_i σ_i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsingConfig {
    pub rows: usize,
    pub cols: usize,
    pub coupling: f64,
    pub field_scale: f64,
    pub burn_in: usize,
    /// Sweeps between consecutive samples drawn from one chain.
    pub gap: usize,
    pub seed: u64,
}

impl IsingConfig {
    /// 35 × 35 grid, `J = +0.1`.
    pub fn positive(seed: u64) -> Self {
        Self {
            rows: 35,
            cols: 35,
            coupling: 0.1,
            field_scale: 0.35,
            burn_in: 1000,
            gap: 10,
            seed,
        }
    }

    /// 35 × 35 grid, `J = -0.1`.
    pub fn negative(seed: u64) -> Self {
        Self {
            coupling: -0.1,
            ..Self::positive(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidArgument("grid dimensions must be at least 1".into()));
        }
        if self.burn_in == 0 {
            return Err(Error::InvalidArgument("burn-in must be at least one sweep".into()));
        }
        if !self.coupling.is_finite() || !self.field_scale.is_finite() {
            return Err(Error::NonFinite("Ising coupling or field"));
        }
        Ok(())
    }
}

/// Systematic-scan heat-bath Gibbs chain.
pub struct IsingChain {
    cfg: IsingConfig,
    grid: AttributedGraph,
    field: Vec<f64>,
    spins: Vec<i8>,
    rng: ChaCha8Rng,
}

impl IsingChain {
    /// Random initial spins followed by `burn_in` sweeps.
    pub fn new(cfg: &IsingConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = grid_graph(cfg.rows, cfg.cols)?;
        let field = (0..grid.n())
            .map(|i| {
                let x = grid.feature(i);
                cfg.field_scale * x[0] * x[1]
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let spins = (0..grid.n()).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
        let mut chain = Self {
            cfg: cfg.clone(),
            grid,
            field,
            spins,
            rng,
        };
        for _ in 0..cfg.burn_in {
            chain.sweep();
        }
        Ok(chain)
    }

    pub fn field(&self) -> &[f64] {
        &self.field
    }

    pub fn grid(&self) -> &AttributedGraph {
        &self.grid
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn sweep(&mut self) {
        for i in 0..self.spins.len() {
            let local: f64 = self.grid.neighbors(i).iter().map(|&j| self.spins[j] as f64).sum();
            let f = self.field[i] + self.cfg.coupling * local;
            let p_up = 1.0 / (1.0 + (-2.0 * f).exp());
            self.spins[i] = if self.rng.random::<f64>() < p_up { 1 } else { -1 };
        }
    }

    /// Advances `gap` sweeps (at least one) and returns the new state.
    pub fn next_sample(&mut self) -> &[i8] {
        for _ in 0..self.cfg.gap.max(1) {
            self.sweep();
        }
        &self.spins
    }
}

/// One configuration after burn-in, as ±1 labels on the grid graph whose
/// features are the vertex coordinates.
pub fn sample_ising(cfg: &IsingConfig) -> Result<AttributedGraph> {
    let chain = IsingChain::new(cfg)?;
    let labels = chain.spins.iter().map(|&s| Some(s as f64)).collect();
    chain.grid.with_labels(labels)
}
