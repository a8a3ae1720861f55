//! The residual precision `Γ = β(I - Σ_i α_i S^(i))`.
//!
//! `Γ` is never materialized. Blocks `Γ_PQ` are applied by restricting the
//! fused adjacency pass to the requested rows and columns, and the marginal
//! precision of the labeled block, `Γ̄_LL = Γ_LL - Γ_LU Γ_UU^{-1} Γ_UL`, is
//! applied with one CG solve on `Γ_UU`.

use serde::{Deserialize, Serialize};

use crate::graph::{TypedAdjacency, VertexPartition};
use crate::linalg::{solve, CgSettings};
use crate::operator::{positions, LinearOperator};
use crate::{Error, Result};

/// Correlation strengths `α_i` (one per edge type) and scale `β`.
///
/// Valid parameters satisfy `|α_i| ≤ 1 - η` and `β > 0`, which keeps `Γ`
/// positive definite with condition number at most `(2 - η) / η`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationParams {
    alphas: Vec<f64>,
    beta: f64,
    eta: f64,
}

impl CorrelationParams {
    pub const DEFAULT_ETA: f64 = 1e-3;

    pub fn new(alphas: Vec<f64>, beta: f64, eta: f64) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::InvalidArgument("at least one alpha is required".into()));
        }
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::InvalidArgument(format!("eta must lie in (0, 1), got {eta}")));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
        }
        if let Some(a) = alphas.iter().find(|a| !(a.abs() <= 1.0 - eta)) {
            return Err(Error::InvalidArgument(format!(
                "alpha {a} outside [-(1 - eta), 1 - eta] with eta = {eta}"
            )));
        }
        Ok(Self { alphas, beta, eta })
    }

    /// `α = 0`, `β = 1`: uncorrelated unit-precision residuals.
    pub fn independent(edge_types: usize) -> Self {
        Self {
            alphas: vec![0.0; edge_types.max(1)],
            beta: 1.0,
            eta: Self::DEFAULT_ETA,
        }
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn max_abs_alpha(&self) -> f64 {
        self.alphas.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    /// Unconstrained coordinates: `atanh(α_i / (1 - η))` then `ln β`.
    pub fn to_raw(&self) -> Vec<f64> {
        let scale = 1.0 - self.eta;
        let mut raw: Vec<f64> = self
            .alphas
            .iter()
            .map(|a| (a / scale).clamp(-1.0 + 1e-15, 1.0 - 1e-15).atanh())
            .collect();
        raw.push(self.beta.ln());
        raw
    }
}

/// Local derivatives of [`reparametrize`], for chaining gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainFactors {
    /// `dα_i / d raw_i`.
    pub d_alpha: Vec<f64>,
    /// `dβ / d raw_β`.
    pub d_beta: f64,
}

impl ChainFactors {
    /// Maps `(dΩ/dα, dΩ/dβ)` onto the unconstrained coordinates.
    pub fn pull_back(&self, d_alpha: &[f64], d_beta: f64) -> Vec<f64> {
        let mut g: Vec<f64> = d_alpha.iter().zip(&self.d_alpha).map(|(g, c)| g * c).collect();
        g.push(d_beta * self.d_beta);
        g
    }
}

/// `α_i = (1 - η) tanh(raw_i)`, `β = exp(raw_last)`.
///
/// `raw` holds one coordinate per edge type followed by the `β` coordinate.
pub fn reparametrize(raw: &[f64], eta: f64) -> Result<(CorrelationParams, ChainFactors)> {
    let Some((&raw_beta, raw_alphas)) = raw.split_last() else {
        return Err(Error::InvalidArgument("raw parameter vector is empty".into()));
    };
    if raw_alphas.is_empty() {
        return Err(Error::InvalidArgument("raw parameter vector needs an alpha coordinate".into()));
    }
    if raw.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("raw correlation parameters"));
    }
    let scale = 1.0 - eta;
    let tanh: Vec<f64> = raw_alphas.iter().map(|r| r.tanh()).collect();
    let beta = raw_beta.exp();
    let params = CorrelationParams::new(tanh.iter().map(|t| scale * t).collect(), beta, eta)?;
    let factors = ChainFactors {
        d_alpha: tanh.iter().map(|t| scale * (1.0 - t * t)).collect(),
        d_beta: beta,
    };
    Ok((params, factors))
}

/// Which parameter a derivative block is taken with respect to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Param {
    Alpha(usize),
    Beta,
}

/// Matrix-free `Γ` over a graph's typed adjacency.
#[derive(Clone, Debug)]
pub struct PrecisionOperator<'a> {
    adjacency: &'a TypedAdjacency,
    params: CorrelationParams,
}

impl<'a> PrecisionOperator<'a> {
    pub fn new(adjacency: &'a TypedAdjacency, params: CorrelationParams) -> Result<Self> {
        if params.alphas.len() != adjacency.type_count() {
            return Err(Error::DimensionMismatch {
                expected: adjacency.type_count(),
                actual: params.alphas.len(),
                context: "one alpha per edge type",
            });
        }
        Ok(Self { adjacency, params })
    }

    pub fn params(&self) -> &CorrelationParams {
        &self.params
    }

    pub fn adjacency(&self) -> &'a TypedAdjacency {
        self.adjacency
    }

    pub fn n(&self) -> usize {
        self.adjacency.n()
    }

    /// `Γ_PQ v` with `v` indexed by `cols`.
    pub fn apply_block(&self, rows: &[usize], cols: &[usize], v: &[f64]) -> Vec<f64> {
        self.block(rows, cols).apply_vec(v)
    }

    /// Reusable view of `Γ_PQ`; square principal views are [`LinearOperator`]s.
    pub fn block<'b>(&'b self, rows: &'b [usize], cols: &[usize]) -> PrecisionBlock<'b> {
        PrecisionBlock {
            op: self,
            rows,
            col_pos: positions(self.n(), cols),
            ncols: cols.len(),
            scale: self.params.beta,
            identity: true,
            weights: self.params.alphas.iter().map(|a| -a).collect(),
        }
    }

    pub fn principal<'b>(&'b self, set: &'b [usize]) -> PrecisionBlock<'b> {
        self.block(set, set)
    }

    /// `∂Γ_PQ/∂θ · v`: `-β S^(i)_PQ v` for `α_i`, `Γ_PQ v / β` for `β`.
    pub fn derivative_block(&self, which: Param, rows: &[usize], cols: &[usize], v: &[f64]) -> Result<Vec<f64>> {
        Ok(self.derivative_view(which, rows, cols)?.apply_vec(v))
    }

    pub(crate) fn derivative_view<'b>(
        &'b self,
        which: Param,
        rows: &'b [usize],
        cols: &[usize],
    ) -> Result<PrecisionBlock<'b>> {
        let mut view = self.block(rows, cols);
        match which {
            Param::Alpha(i) => {
                if i >= self.params.alphas.len() {
                    return Err(Error::InvalidArgument(format!("no edge type {i}")));
                }
                view.identity = false;
                view.weights = vec![0.0; self.params.alphas.len()];
                view.weights[i] = -1.0;
            }
            Param::Beta => view.scale = 1.0,
        }
        Ok(view)
    }

    /// `Γ̄_LL v_L = Γ_LL v_L - Γ_LU x` where `Γ_UU x = Γ_UL v_L`.
    pub fn apply_marginal(&self, partition: &VertexPartition, v_l: &[f64], cg: &CgSettings) -> Result<Vec<f64>> {
        let (l, u) = (partition.labeled(), partition.unlabeled());
        if v_l.len() != l.len() {
            return Err(Error::DimensionMismatch {
                expected: l.len(),
                actual: v_l.len(),
                context: "labeled-block vector",
            });
        }
        let mut out = self.apply_block(l, l, v_l);
        if u.is_empty() {
            return Ok(out);
        }
        let rhs = self.apply_block(u, l, v_l);
        let x = solve(&self.principal(u), &rhs, cg)?;
        for (o, c) in out.iter_mut().zip(self.apply_block(l, u, &x)) {
            *o -= c;
        }
        Ok(out)
    }
}

impl LinearOperator for PrecisionOperator<'_> {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.adjacency.apply_weighted_into(&self.params.alphas, x, out);
        let beta = self.params.beta;
        for (o, xi) in out.iter_mut().zip(x) {
            *o = beta * (xi - *o);
        }
    }
}

/// `scale · (δ_PQ · identity + Σ_i weights[i] S^(i)_PQ)`.
pub struct PrecisionBlock<'b> {
    op: &'b PrecisionOperator<'b>,
    rows: &'b [usize],
    col_pos: Vec<usize>,
    ncols: usize,
    scale: f64,
    identity: bool,
    weights: Vec<f64>,
}

impl PrecisionBlock<'_> {
    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    pub fn cols(&self) -> usize {
        self.ncols
    }

    pub fn apply_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows.len()];
        self.apply_rect(v, &mut out);
        out
    }

    fn apply_rect(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.ncols);
        self.op
            .adjacency
            .apply_weighted_block(&self.weights, self.rows, &self.col_pos, v, out);
        for (o, &i) in out.iter_mut().zip(self.rows) {
            let own = match (self.identity, self.col_pos[i]) {
                (true, p) if p != usize::MAX => v[p],
                _ => 0.0,
            };
            *o = self.scale * (own + *o);
        }
    }
}

impl LinearOperator for PrecisionBlock<'_> {
    fn dim(&self) -> usize {
        self.rows.len()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.apply_rect(x, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense;
    use crate::graph::{watts_strogatz, AttributedGraph};
    use crate::linalg::EstimatorConfig;
    use crate::operator::dot;
    use nalgebra::SymmetricEigen;
    use proptest::prelude::*;

    fn single_edge() -> TypedAdjacency {
        let g = AttributedGraph::new(2, [(0, 1, 0)], 1, 0, vec![], None).unwrap();
        TypedAdjacency::new(&g)
    }

    fn params(a: f64, b: f64) -> CorrelationParams {
        CorrelationParams::new(vec![a], b, 1e-3).unwrap()
    }

    #[test]
    fn validates_parameters() {
        assert!(CorrelationParams::new(vec![0.9995], 1.0, 1e-3).is_err());
        assert!(CorrelationParams::new(vec![0.999], 1.0, 1e-3).is_ok());
        assert!(CorrelationParams::new(vec![0.5], 0.0, 1e-3).is_err());
        assert!(CorrelationParams::new(vec![], 1.0, 1e-3).is_err());
        assert!(CorrelationParams::new(vec![f64::NAN], 1.0, 1e-3).is_err());
    }

    #[test]
    fn apply_examples() {
        let adj = single_edge();
        let op = PrecisionOperator::new(&adj, params(0.0, 2.0)).unwrap();
        assert_eq!(op.apply(&[1.5, -3.0]), vec![3.0, -6.0]);
        let op = PrecisionOperator::new(&adj, params(0.5, 1.0)).unwrap();
        assert_eq!(op.apply(&[1.0, 0.0]), vec![1.0, -0.5]);
    }

    #[test]
    fn block_examples() {
        let adj = single_edge();
        let op = PrecisionOperator::new(&adj, params(0.6, 2.0)).unwrap();
        let all = [0, 1];
        assert_eq!(op.apply_block(&all, &all, &[0.3, -0.7]), op.apply(&[0.3, -0.7]));
        // Γ_UL on the crossing edge is -αβ S_21 = -1.2
        let v = op.apply_block(&[1], &[0], &[1.0]);
        assert!((v[0] + 1.2).abs() < 1e-15);
        assert_eq!(op.apply_block(&[0, 1], &[], &[]), vec![0.0, 0.0]);
    }

    #[test]
    fn derivative_examples() {
        let adj = single_edge();
        let op = PrecisionOperator::new(&adj, params(0.4, 3.0)).unwrap();
        let all = [0, 1];
        let d = op.derivative_block(Param::Alpha(0), &all, &all, &[1.0, 0.0]).unwrap();
        assert_eq!(d, vec![0.0, -3.0]);
        let d = op.derivative_block(Param::Beta, &all, &all, &[1.0, 2.0]).unwrap();
        let g = op.apply(&[1.0, 2.0]);
        for (a, b) in d.iter().zip(g) {
            assert!((a - b / 3.0).abs() < 1e-14);
        }
        assert!(op.derivative_block(Param::Alpha(1), &all, &all, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn alpha_derivative_touches_only_its_type() {
        // path 0-1 (type 0), 2-3 (type 1); v supported on {0, 1}
        let g = AttributedGraph::new(4, [(0, 1, 0), (2, 3, 1)], 2, 0, vec![], None).unwrap();
        let adj = TypedAdjacency::new(&g);
        let op = PrecisionOperator::new(&adj, CorrelationParams::new(vec![0.3, 0.7], 1.0, 1e-3).unwrap()).unwrap();
        let all = [0, 1, 2, 3];
        let d = op.derivative_block(Param::Alpha(1), &all, &all, &[1.0, 2.0, 0.0, 0.0]).unwrap();
        assert_eq!(d, vec![0.0; 4]);
    }

    #[test]
    fn marginal_single_edge_is_scalar_schur() {
        let adj = single_edge();
        let (a, b) = (0.7, 1.5);
        let op = PrecisionOperator::new(&adj, params(a, b)).unwrap();
        let part = VertexPartition::from_labeled(2, &[0]).unwrap();
        let cg = EstimatorConfig::default().cg();
        let v = op.apply_marginal(&part, &[1.0], &cg).unwrap();
        assert!((v[0] - b * (1.0 - a * a)).abs() < 1e-8);
        let full = VertexPartition::from_labeled(2, &[0, 1]).unwrap();
        assert_eq!(op.apply_marginal(&full, &[1.0, 2.0], &cg).unwrap(), op.apply(&[1.0, 2.0]));
    }

    #[test]
    fn marginal_matches_dense_schur_complement() {
        let cg = CgSettings {
            tolerance: 1e-10,
            max_iters: 1000,
        };
        for (n, seed) in [(50, 1), (120, 2), (200, 3)] {
            let g = watts_strogatz(n, 4, 0.3, seed).unwrap();
            let adj = TypedAdjacency::new(&g);
            let op = PrecisionOperator::new(&adj, params(0.85, 1.3)).unwrap();
            let labeled: Vec<usize> = (0..n).filter(|i| (i * 7 + seed as usize) % 3 == 0).collect();
            let part = VertexPartition::from_labeled(n, &labeled).unwrap();
            let schur = dense::schur_complement(&dense::to_dense(&op), &part).unwrap();
            let v = crate::linalg::probe_vector(seed, 0, labeled.len());
            let got = op.apply_marginal(&part, &v, &cg).unwrap();
            let want = &schur * nalgebra::DVector::from_column_slice(&v);
            for (a, b) in got.iter().zip(want.iter()) {
                assert!((a - b).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn equal_typed_alphas_reproduce_single_alpha() {
        let base = watts_strogatz(40, 4, 0.2, 5).unwrap();
        let typed = AttributedGraph::new(
            40,
            base.edges().iter().map(|e| (e.u, e.v, e.u % 2)),
            2,
            0,
            vec![],
            None,
        )
        .unwrap();
        let (adj1, adj2) = (TypedAdjacency::new(&base), TypedAdjacency::new(&typed));
        let op1 = PrecisionOperator::new(&adj1, params(0.6, 1.1)).unwrap();
        let op2 = PrecisionOperator::new(&adj2, CorrelationParams::new(vec![0.6, 0.6], 1.1, 1e-3).unwrap()).unwrap();
        let v = crate::linalg::probe_vector(3, 0, 40);
        for (a, b) in op1.apply(&v).iter().zip(op2.apply(&v)) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn reparametrize_examples() {
        let (p, f) = reparametrize(&[0.0, 0.0], 1e-3).unwrap();
        assert_eq!((p.alphas()[0], p.beta()), (0.0, 1.0));
        assert_eq!(f.d_beta, 1.0);
        let (p, _) = reparametrize(&[50.0, 0.0], 1e-3).unwrap();
        assert!((p.alphas()[0] - 0.999).abs() < 1e-12);

        let raw = [0.3, -0.2];
        let (_, f) = reparametrize(&raw, 1e-3).unwrap();
        let h = 1e-6;
        for k in 0..2 {
            let mut plus = raw;
            let mut minus = raw;
            plus[k] += h;
            minus[k] -= h;
            let (pp, _) = reparametrize(&plus, 1e-3).unwrap();
            let (pm, _) = reparametrize(&minus, 1e-3).unwrap();
            let (fd, exact) = if k == 0 {
                ((pp.alphas()[0] - pm.alphas()[0]) / (2.0 * h), f.d_alpha[0])
            } else {
                ((pp.beta() - pm.beta()) / (2.0 * h), f.d_beta)
            };
            assert!(((fd - exact) / exact).abs() < 1e-6);
        }
        let p = CorrelationParams::new(vec![-0.4], 2.5, 1e-3).unwrap();
        let (back, _) = reparametrize(&p.to_raw(), 1e-3).unwrap();
        assert!((back.alphas()[0] + 0.4).abs() < 1e-12 && (back.beta() - 2.5).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn spectrum_within_bounds(seed in 0u64..1000, a in -0.99f64..0.99, b in 0.1f64..5.0, types in 1usize..3) {
            let base = watts_strogatz(40, 4, 0.4, seed).unwrap();
            let g = AttributedGraph::new(
                40,
                base.edges().iter().map(|e| (e.u, e.v, (e.u + e.v) % types)),
                types, 0, vec![], None,
            ).unwrap();
            let adj = TypedAdjacency::new(&g);
            let alphas: Vec<f64> = (0..types).map(|t| a * (1.0 - 0.3 * t as f64)).collect();
            let p = CorrelationParams::new(alphas, b, 1e-3).unwrap();
            let amax = p.max_abs_alpha();
            let op = PrecisionOperator::new(&adj, p).unwrap();
            let m = dense::to_dense(&op);
            let eig = SymmetricEigen::new(m).eigenvalues;
            prop_assert!(eig.min() > b * (1.0 - amax) - 1e-10);
            prop_assert!(eig.max() < b * (1.0 + amax) + 1e-10);
        }

        #[test]
        fn derivatives_match_finite_differences(seed in 0u64..1000, a in -0.9f64..0.9, b in 0.5f64..3.0) {
            let g = watts_strogatz(30, 4, 0.3, seed).unwrap();
            let adj = TypedAdjacency::new(&g);
            let rows: Vec<usize> = (0..30).filter(|i| i % 3 != 0).collect();
            let cols: Vec<usize> = (0..30).filter(|i| i % 2 == 0).collect();
            let v = crate::linalg::probe_vector(seed, 1, cols.len());
            let op = PrecisionOperator::new(&adj, params(a, b)).unwrap();
            let h = 1e-5;
            let at = |a: f64, b: f64| PrecisionOperator::new(&adj, params(a, b)).unwrap().apply_block(&rows, &cols, &v);
            for which in [Param::Alpha(0), Param::Beta] {
                let exact = op.derivative_block(which, &rows, &cols, &v).unwrap();
                let (plus, minus) = match which {
                    Param::Alpha(_) => (at(a + h, b), at(a - h, b)),
                    Param::Beta => (at(a, b + h), at(a, b - h)),
                };
                let fd: Vec<f64> = plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * h)).collect();
                let err = fd.iter().zip(&exact).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                let scale = dot(&exact, &exact).sqrt().max(1e-12);
                prop_assert!(err / scale < 1e-6);
            }
        }
    }
}
