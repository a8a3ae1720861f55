//! Label propagation with the normalized Laplacian `𝓛 = I - S`, and the
//! LP-GNN predictor that propagates regressor residuals.

use crate::graph::{AttributedGraph, TypedAdjacency, VertexPartition};
use crate::linalg::{conjugate_gradient, CgOutcome, CgSettings};
use crate::operator::{gather, positions, LinearOperator};
use crate::regressors::{forward, ParameterSet, RegressorSpec};
use crate::{Error, Result};

/// Tolerance and iteration cap used by [`label_propagation`].
pub const LP_CG: CgSettings = CgSettings {
    tolerance: 1e-8,
    max_iters: 100_000,
};

/// Matrix-free `𝓛 = I - S` with `S` summed over all edge types.
pub struct LaplacianOperator<'a> {
    adjacency: &'a TypedAdjacency,
    weights: Vec<f64>,
}

impl<'a> LaplacianOperator<'a> {
    pub fn new(adjacency: &'a TypedAdjacency) -> Self {
        Self {
            adjacency,
            weights: vec![-1.0; adjacency.type_count()],
        }
    }

    /// `𝓛_PQ v` with `v` indexed by `cols`.
    pub fn apply_block(&self, rows: &[usize], cols: &[usize], v: &[f64]) -> Vec<f64> {
        let pos = positions(self.adjacency.n(), cols);
        let mut out = vec![0.0; rows.len()];
        self.block_into(rows, &pos, v, &mut out);
        out
    }

    fn block_into(&self, rows: &[usize], col_pos: &[usize], v: &[f64], out: &mut [f64]) {
        self.adjacency.apply_weighted_block(&self.weights, rows, col_pos, v, out);
        for (o, &i) in out.iter_mut().zip(rows) {
            if col_pos[i] != usize::MAX {
                *o += v[col_pos[i]];
            }
        }
    }

    pub fn principal<'b>(&'b self, set: &'b [usize]) -> LaplacianBlock<'b> {
        LaplacianBlock {
            op: self,
            rows: set,
            pos: positions(self.adjacency.n(), set),
        }
    }
}

impl LinearOperator for LaplacianOperator<'_> {
    fn dim(&self) -> usize {
        self.adjacency.n()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.adjacency.apply_weighted_into(&self.weights, x, out);
        for (o, xi) in out.iter_mut().zip(x) {
            *o += xi;
        }
    }
}

/// Principal block `𝓛_PP`.
pub struct LaplacianBlock<'b> {
    op: &'b LaplacianOperator<'b>,
    rows: &'b [usize],
    pos: Vec<usize>,
}

impl LinearOperator for LaplacianBlock<'_> {
    fn dim(&self) -> usize {
        self.rows.len()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.op.block_into(self.rows, &self.pos, x, out)
    }
}

/// Solves `𝓛_UU z_U = -𝓛_UL z_L` by CG from zero and returns the full
/// outcome, including the residual report.
pub fn propagate(
    adjacency: &TypedAdjacency,
    z_l: &[f64],
    partition: &VertexPartition,
    cg: &CgSettings,
) -> Result<CgOutcome> {
    let (l, u) = (partition.labeled(), partition.unlabeled());
    if z_l.len() != l.len() {
        return Err(Error::DimensionMismatch {
            expected: l.len(),
            actual: z_l.len(),
            context: "labels on the labeled set",
        });
    }
    if z_l.iter().any(|z| !z.is_finite()) {
        return Err(Error::NonFinite("propagated labels"));
    }
    let lap = LaplacianOperator::new(adjacency);
    let rhs: Vec<f64> = lap.apply_block(u, l, z_l).into_iter().map(|x| -x).collect();
    conjugate_gradient(&lap.principal(u), &rhs, None, cg)
}

/// `z_U = -𝓛_UU^{-1} 𝓛_UL z_L`. Components of `U` with no path to `L`
/// receive 0, the minimal-norm solution of the singular system.
pub fn label_propagation(graph: &AttributedGraph, z_l: &[f64], partition: &VertexPartition) -> Result<Vec<f64>> {
    let adjacency = TypedAdjacency::new(graph);
    Ok(propagate(&adjacency, z_l, partition, &LP_CG)?.solution)
}

/// `y_U = ŷ_U + LP(y_L - ŷ_L)`.
pub fn lp_gnn_predict(
    spec: &RegressorSpec,
    params: &ParameterSet,
    graph: &AttributedGraph,
    partition: &VertexPartition,
    labels_l: &[f64],
) -> Result<Vec<f64>> {
    let all: Vec<usize> = (0..graph.n()).collect();
    let (yhat, _) = forward(spec, params, graph, &all)?;
    if labels_l.len() != partition.labeled().len() {
        return Err(Error::DimensionMismatch {
            expected: partition.labeled().len(),
            actual: labels_l.len(),
            context: "labels on the labeled set",
        });
    }
    let residual: Vec<f64> = labels_l
        .iter()
        .zip(gather(&yhat, partition.labeled()))
        .map(|(y, p)| y - p)
        .collect();
    let smoothed = label_propagation(graph, &residual, partition)?;
    Ok(gather(&yhat, partition.unlabeled())
        .iter()
        .zip(&smoothed)
        .map(|(p, s)| p + s)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::watts_strogatz;
    use crate::linalg::EstimatorConfig;
    use crate::model::{predict_cgnn, CgnnModel};
    use crate::precision::CorrelationParams;
    use crate::regressors::RegressorKind;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn path3() -> AttributedGraph {
        AttributedGraph::new(3, [(0, 1, 0), (1, 2, 0)], 1, 0, vec![], None).unwrap()
    }

    #[test]
    fn all_labeled_gives_empty_output() {
        let p = VertexPartition::from_labeled(3, &[0, 1, 2]).unwrap();
        assert!(label_propagation(&path3(), &[1.0, 2.0, 3.0], &p).unwrap().is_empty());
    }

    #[test]
    fn path_midpoint() {
        // z_1 = 0 and z_3 = 1 around an unlabeled middle vertex
        let p = VertexPartition::from_labeled(3, &[0, 2]).unwrap();
        let z = label_propagation(&path3(), &[0.0, 1.0], &p).unwrap();
        assert!((z[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-8);
    }

    #[test]
    fn constant_labels_on_regular_graph() {
        let g = watts_strogatz(30, 4, 0.0, 0).unwrap();
        let labeled: Vec<usize> = (0..30).step_by(4).collect();
        let p = VertexPartition::from_labeled(30, &labeled).unwrap();
        let z = label_propagation(&g, &vec![2.5; labeled.len()], &p).unwrap();
        assert!(z.iter().all(|v| (v - 2.5).abs() < 1e-6));
    }

    #[test]
    fn disconnected_component_gets_zero() {
        let g = AttributedGraph::new(5, [(0, 1, 0), (1, 2, 0), (3, 4, 0)], 1, 0, vec![], None).unwrap();
        let p = VertexPartition::from_labeled(5, &[0]).unwrap();
        let z = label_propagation(&g, &[1.0], &p).unwrap();
        assert_eq!(&z[2..], &[0.0, 0.0]);
        assert!(z[0] > 0.0 && z[1] > 0.0);
    }

    #[test]
    fn zero_regressor_matches_raw_propagation() {
        let g = watts_strogatz(40, 4, 0.3, 2).unwrap().with_features(1, vec![0.5; 40]).unwrap();
        let spec = RegressorSpec::new(RegressorKind::Linear, 0);
        let params = ParameterSet::from_parts(spec.layout(1), vec![0.0, 0.0]).unwrap();
        let labeled: Vec<usize> = (0..40).step_by(3).collect();
        let p = VertexPartition::from_labeled(40, &labeled).unwrap();
        let y: Vec<f64> = labeled.iter().map(|&i| (i as f64).cos()).collect();
        assert_eq!(
            lp_gnn_predict(&spec, &params, &g, &p, &y).unwrap(),
            label_propagation(&g, &y, &p).unwrap()
        );
    }

    #[test]
    fn perfect_regressor_is_unchanged() {
        let g = watts_strogatz(40, 4, 0.3, 2).unwrap();
        let x: Vec<f64> = (0..40).map(|i| i as f64 / 40.0).collect();
        let g = g.with_features(1, x.clone()).unwrap();
        let spec = RegressorSpec::new(RegressorKind::Linear, 0);
        let params = ParameterSet::from_parts(spec.layout(1), vec![2.0, -1.0]).unwrap();
        let labeled: Vec<usize> = (0..40).step_by(3).collect();
        let p = VertexPartition::from_labeled(40, &labeled).unwrap();
        let all: Vec<usize> = (0..40).collect();
        let (yhat, _) = forward(&spec, &params, &g, &all).unwrap();
        let y = gather(&yhat, &labeled);
        let out = lp_gnn_predict(&spec, &params, &g, &p, &y).unwrap();
        assert_eq!(out, gather(&yhat, p.unlabeled()));
    }

    #[test]
    fn correlated_model_approaches_propagation_as_alpha_tends_to_one() {
        for seed in 0..3 {
            let n = 50;
            let g = watts_strogatz(n, 4, 0.3, seed).unwrap().with_features(1, vec![0.0; n]).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let labeled: Vec<usize> = (0..n).filter(|_| rng.random::<f64>() < 0.4).collect();
            let p = VertexPartition::from_labeled(n, &labeled).unwrap();
            let y: Vec<f64> = labeled.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
            let spec = RegressorSpec::new(RegressorKind::Linear, 0);
            let params = ParameterSet::from_parts(spec.layout(1), vec![0.0, 0.0]).unwrap();
            let eta = 1e-7;
            let corr = CorrelationParams::new(vec![1.0 - 1e-6], 1.0, eta).unwrap();
            let est = EstimatorConfig {
                cg_tolerance: 1e-12,
                cg_max_iters: 100_000,
                ..EstimatorConfig::default()
            };
            let model = CgnnModel::new(spec, params, corr, est);
            let a = predict_cgnn(&model, &g, &p, &y).unwrap();
            let b = label_propagation(&g, &y, &p).unwrap();
            let gap = a.iter().zip(&b).map(|(x, z)| (x - z).abs()).fold(0.0, f64::max);
            assert!(gap < 1e-3, "seed {seed}: sup gap {gap}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn regular_graphs_interpolate(seed in 0u64..1000, k in 1usize..4) {
            let n = 24;
            let g = watts_strogatz(n, 2 * k, 0.0, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut labeled: Vec<usize> = (0..n).filter(|_| rng.random::<f64>() < 0.3).collect();
            if labeled.is_empty() {
                labeled.push(0);
            }
            let p = VertexPartition::from_labeled(n, &labeled).unwrap();
            let z: Vec<f64> = labeled.iter().map(|_| rng.random_range(-3.0..3.0)).collect();
            let lo = z.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for v in label_propagation(&g, &z, &p).unwrap() {
                prop_assert!(v >= lo - 1e-6 && v <= hi + 1e-6);
            }
        }

        #[test]
        fn irregular_graphs_satisfy_the_residual_equation(seed in 0u64..1000) {
            let n = 40;
            let g = watts_strogatz(n, 4, 0.5, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let labeled: Vec<usize> = (0..n).filter(|_| rng.random::<f64>() < 0.3).collect();
            let p = VertexPartition::from_labeled(n, &labeled).unwrap();
            let z: Vec<f64> = labeled.iter().map(|_| rng.random_range(-3.0..3.0)).collect();
            let adj = TypedAdjacency::new(&g);
            let out = propagate(&adj, &z, &p, &LP_CG).unwrap();
            let lap = LaplacianOperator::new(&adj);
            let lhs = lap.principal(p.unlabeled()).apply(&out.solution);
            let rhs = lap.apply_block(p.unlabeled(), p.labeled(), &z);
            let res: f64 = lhs.iter().zip(&rhs).map(|(a, b)| (a + b) * (a + b)).sum::<f64>().sqrt();
            let scale: f64 = rhs.iter().map(|b| b * b).sum::<f64>().sqrt().max(1.0);
            prop_assert!(res <= 1e-7 * scale);
        }
    }
}
