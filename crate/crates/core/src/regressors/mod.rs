//! Base regressors mapping vertex features to predictions `ŷ`.
//!
//! All kinds share one layout: zero or more hidden layers with ReLU,
//! followed by a linear head producing a scalar. `layers` hidden layers have
//! widths `hidden_width, …, hidden_width, representation_dim`; the linear
//! kind has no hidden layer. Graph kinds aggregate before each hidden layer:
//!
//! - `sage_mean`: `h_i ← φ(W · mean({h_i} ∪ {h_j : j ∈ N(i)}) + b)`
//! - `gcn`: `h_i ← φ(W · Σ_{j ∈ {i} ∪ N(i)} h_j / √((d_i+1)(d_j+1)) + b)`
//!
//! Gradients are exact reverse-mode derivatives written out by hand.

mod train;

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::AttributedGraph;
use crate::{Error, Result};

pub use train::{
    epoch_batches, fit_squared_error, residual_gradient, train_squared_error, Adam, FitConfig, FitReport,
    Optimizer, OptimizerConfig,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressorKind {
    Linear,
    Mlp,
    SageMean,
    Gcn,
}

impl RegressorKind {
    pub fn uses_graph(self) -> bool {
        matches!(self, RegressorKind::SageMean | RegressorKind::Gcn)
    }
}

impl fmt::Display for RegressorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegressorKind::Linear => "linear",
            RegressorKind::Mlp => "mlp",
            RegressorKind::SageMean => "sage_mean",
            RegressorKind::Gcn => "gcn",
        })
    }
}

impl FromStr for RegressorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(RegressorKind::Linear),
            "mlp" => Ok(RegressorKind::Mlp),
            "sage_mean" | "sage-mean" | "sage" => Ok(RegressorKind::SageMean),
            "gcn" => Ok(RegressorKind::Gcn),
            other => Err(Error::InvalidArgument(format!("unknown regressor kind '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressorSpec {
    pub kind: RegressorKind,
    pub hidden_width: usize,
    pub representation_dim: usize,
    pub layers: usize,
    pub activation: Activation,
    /// Seeds weight initialization.
    pub seed: u64,
}

impl RegressorSpec {
    pub fn new(kind: RegressorKind, seed: u64) -> Self {
        Self {
            kind,
            hidden_width: 16,
            representation_dim: 8,
            layers: 2,
            activation: Activation::Relu,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.kind != RegressorKind::Linear
            && (self.layers == 0 || self.hidden_width == 0 || self.representation_dim == 0)
        {
            return Err(Error::InvalidArgument("layer widths and depth must be positive".into()));
        }
        Ok(())
    }

    pub fn layout(&self, feature_dim: usize) -> Vec<LayerShape> {
        let mut shapes = Vec::new();
        let mut width = feature_dim;
        if self.kind != RegressorKind::Linear {
            for l in 0..self.layers {
                let out = if l + 1 == self.layers {
                    self.representation_dim
                } else {
                    self.hidden_width
                };
                shapes.push(LayerShape { inputs: width, outputs: out });
                width = out;
            }
        }
        shapes.push(LayerShape { inputs: width, outputs: 1 });
        shapes
    }

    /// Uniform `±√(6 / (fan_in + fan_out))` weights, zero biases.
    pub fn init(&self, feature_dim: usize) -> Result<ParameterSet> {
        self.validate()?;
        let layout = self.layout(feature_dim);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut values = Vec::with_capacity(layout.iter().map(LayerShape::size).sum());
        for shape in &layout {
            let limit = (6.0 / (shape.inputs + shape.outputs) as f64).sqrt();
            values.extend((0..shape.inputs * shape.outputs).map(|_| rng.random_range(-limit..=limit)));
            values.extend(std::iter::repeat_n(0.0, shape.outputs));
        }
        Ok(ParameterSet { layout, values })
    }
}

/// A dense layer: `outputs × inputs` weights (row-major) then `outputs` biases.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LayerShape {
    pub inputs: usize,
    pub outputs: usize,
}

impl LayerShape {
    pub fn size(&self) -> usize {
        self.outputs * (self.inputs + 1)
    }
}

/// Flat weight vector with its layer layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    layout: Vec<LayerShape>,
    values: Vec<f64>,
}

impl ParameterSet {
    pub fn from_parts(layout: Vec<LayerShape>, values: Vec<f64>) -> Result<Self> {
        let expected: usize = layout.iter().map(LayerShape::size).sum();
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: values.len(),
                context: "parameter vector",
            });
        }
        Ok(Self { layout, values })
    }

    pub fn layout(&self) -> &[LayerShape] {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn offset(&self, layer: usize) -> usize {
        self.layout[..layer].iter().map(LayerShape::size).sum()
    }

    fn weights(&self, layer: usize) -> (&[f64], &[f64]) {
        let shape = self.layout[layer];
        let start = self.offset(layer);
        let w_end = start + shape.inputs * shape.outputs;
        (&self.values[start..w_end], &self.values[w_end..w_end + shape.outputs])
    }

    fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.layout.hash(&mut h);
        for v in &self.values {
            v.to_bits().hash(&mut h);
        }
        h.finish()
    }
}

struct LayerCache {
    // aggregated inputs, rows × inputs
    input: Vec<f64>,
    // pre-activations, rows × outputs
    pre: Vec<f64>,
}

/// Intermediate values from [`forward`] needed by [`backward`].
pub struct ForwardCache {
    token: u64,
    kind: RegressorKind,
    vertices: Vec<usize>,
    // rows computed in each layer: all vertices for graph kinds, else `vertices`
    rows: Vec<usize>,
    hidden: Vec<LayerCache>,
    // head input, rows × repr
    head_input: Vec<f64>,
    graph_n: usize,
}

impl ForwardCache {
    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }
}

#[derive(Clone, Copy)]
enum Aggregation {
    None,
    Mean,
    Symmetric,
}

impl Aggregation {
    fn of(kind: RegressorKind) -> Self {
        match kind {
            RegressorKind::Linear | RegressorKind::Mlp => Aggregation::None,
            RegressorKind::SageMean => Aggregation::Mean,
            RegressorKind::Gcn => Aggregation::Symmetric,
        }
    }
}

/// Neighborhood aggregation over all vertices of `graph`, `width` columns.
fn aggregate(graph: &AttributedGraph, agg: Aggregation, h: &[f64], width: usize) -> Vec<f64> {
    let n = graph.n();
    let mut out = vec![0.0; n * width];
    for i in 0..n {
        let nbrs = graph.neighbors(i);
        let row = &mut out[i * width..(i + 1) * width];
        match agg {
            Aggregation::None => row.copy_from_slice(&h[i * width..(i + 1) * width]),
            Aggregation::Mean => {
                let c = 1.0 / (nbrs.len() + 1) as f64;
                for &j in std::iter::once(&i).chain(nbrs) {
                    for (o, x) in row.iter_mut().zip(&h[j * width..(j + 1) * width]) {
                        *o += c * x;
                    }
                }
            }
            Aggregation::Symmetric => {
                let di = (nbrs.len() + 1) as f64;
                for &j in std::iter::once(&i).chain(nbrs) {
                    let c = 1.0 / (di * (graph.neighbors(j).len() + 1) as f64).sqrt();
                    for (o, x) in row.iter_mut().zip(&h[j * width..(j + 1) * width]) {
                        *o += c * x;
                    }
                }
            }
        }
    }
    out
}

/// Adjoint of [`aggregate`].
fn aggregate_transpose(graph: &AttributedGraph, agg: Aggregation, g: &[f64], width: usize) -> Vec<f64> {
    let n = graph.n();
    let mut out = vec![0.0; n * width];
    for i in 0..n {
        let nbrs = graph.neighbors(i);
        let gi = &g[i * width..(i + 1) * width];
        let di = (nbrs.len() + 1) as f64;
        for &j in std::iter::once(&i).chain(nbrs) {
            let c = match agg {
                Aggregation::None => {
                    if j != i {
                        continue;
                    }
                    1.0
                }
                Aggregation::Mean => 1.0 / di,
                Aggregation::Symmetric => 1.0 / (di * (graph.neighbors(j).len() + 1) as f64).sqrt(),
            };
            for (o, x) in out[j * width..(j + 1) * width].iter_mut().zip(gi) {
                *o += c * x;
            }
        }
    }
    out
}

fn dense_forward(input: &[f64], rows: usize, w: &[f64], b: &[f64], shape: LayerShape) -> Vec<f64> {
    let mut out = vec![0.0; rows * shape.outputs];
    for r in 0..rows {
        let x = &input[r * shape.inputs..(r + 1) * shape.inputs];
        for o in 0..shape.outputs {
            let wo = &w[o * shape.inputs..(o + 1) * shape.inputs];
            out[r * shape.outputs + o] = b[o] + wo.iter().zip(x).map(|(a, c)| a * c).sum::<f64>();
        }
    }
    out
}

/// Predictions `ŷ` on `vertices`, plus the cache for [`backward`].
pub fn forward(
    spec: &RegressorSpec,
    params: &ParameterSet,
    graph: &AttributedGraph,
    vertices: &[usize],
) -> Result<(Vec<f64>, ForwardCache)> {
    let d = graph.feature_dim();
    if params.layout != spec.layout(params.layout[0].inputs) {
        return Err(Error::InvalidArgument("parameter layout does not match the regressor spec".into()));
    }
    if params.layout[0].inputs != d {
        return Err(Error::DimensionMismatch {
            expected: params.layout[0].inputs,
            actual: d,
            context: "feature dimension vs first layer",
        });
    }
    if let Some(&bad) = vertices.iter().find(|&&v| v >= graph.n()) {
        return Err(Error::InvalidArgument(format!("vertex {bad} out of range")));
    }
    let agg = Aggregation::of(spec.kind);
    let rows: Vec<usize> = if spec.kind.uses_graph() {
        (0..graph.n()).collect()
    } else {
        vertices.to_vec()
    };
    let mut h: Vec<f64> = rows.iter().flat_map(|&i| graph.feature(i).iter().copied()).collect();
    let hidden_layers = params.layout.len() - 1;
    let mut hidden = Vec::with_capacity(hidden_layers);
    for l in 0..hidden_layers {
        let shape = params.layout[l];
        let input = match agg {
            Aggregation::None => h,
            _ => aggregate(graph, agg, &h, shape.inputs),
        };
        let (w, b) = params.weights(l);
        let pre = dense_forward(&input, rows.len(), w, b, shape);
        h = pre.iter().map(|&z| z.max(0.0)).collect();
        hidden.push(LayerCache { input, pre });
    }
    let head = params.layout[hidden_layers];
    let (w, b) = params.weights(hidden_layers);
    let all = dense_forward(&h, rows.len(), w, b, head);
    let predictions = if spec.kind.uses_graph() {
        vertices.iter().map(|&v| all[v]).collect()
    } else {
        all
    };
    let cache = ForwardCache {
        token: params.fingerprint(),
        kind: spec.kind,
        vertices: vertices.to_vec(),
        rows,
        hidden,
        head_input: h,
        graph_n: graph.n(),
    };
    Ok((predictions, cache))
}

/// Gradient of `⟨upstream, ŷ⟩` with respect to all parameters, where `ŷ`
/// came from the [`forward`] call that produced `cache`.
pub fn backward(
    spec: &RegressorSpec,
    params: &ParameterSet,
    graph: &AttributedGraph,
    cache: &ForwardCache,
    upstream: &[f64],
) -> Result<Vec<f64>> {
    if cache.token != params.fingerprint() || cache.kind != spec.kind || cache.graph_n != graph.n() {
        return Err(Error::StaleCache);
    }
    if upstream.len() != cache.vertices.len() {
        return Err(Error::DimensionMismatch {
            expected: cache.vertices.len(),
            actual: upstream.len(),
            context: "upstream gradient",
        });
    }
    let rows = cache.rows.len();
    let g_rows: Vec<f64> = if spec.kind.uses_graph() {
        let mut g = vec![0.0; rows];
        for (&v, &u) in cache.vertices.iter().zip(upstream) {
            g[v] += u;
        }
        g
    } else {
        upstream.to_vec()
    };

    let mut grad = vec![0.0; params.len()];
    let hidden_layers = params.layout.len() - 1;

    // head
    let head = params.layout[hidden_layers];
    let start = params.offset(hidden_layers);
    let (w_head, _) = params.weights(hidden_layers);
    let mut dh = vec![0.0; rows * head.inputs];
    for r in 0..rows {
        let g = g_rows[r];
        if g == 0.0 {
            continue;
        }
        let x = &cache.head_input[r * head.inputs..(r + 1) * head.inputs];
        for k in 0..head.inputs {
            grad[start + k] += g * x[k];
            dh[r * head.inputs + k] = g * w_head[k];
        }
        grad[start + head.inputs] += g;
    }

    let agg = Aggregation::of(spec.kind);
    for l in (0..hidden_layers).rev() {
        let shape = params.layout[l];
        let start = params.offset(l);
        let (w, _) = params.weights(l);
        let layer = &cache.hidden[l];
        let mut d_input = vec![0.0; rows * shape.inputs];
        for r in 0..rows {
            let x = &layer.input[r * shape.inputs..(r + 1) * shape.inputs];
            for o in 0..shape.outputs {
                let idx = r * shape.outputs + o;
                if layer.pre[idx] <= 0.0 {
                    continue;
                }
                let dz = dh[idx];
                if dz == 0.0 {
                    continue;
                }
                let wrow = start + o * shape.inputs;
                for k in 0..shape.inputs {
                    grad[wrow + k] += dz * x[k];
                    d_input[r * shape.inputs + k] += dz * w[o * shape.inputs + k];
                }
                grad[start + shape.inputs * shape.outputs + o] += dz;
            }
        }
        if l > 0 {
            dh = match agg {
                Aggregation::None => d_input,
                _ => aggregate_transpose(graph, agg, &d_input, shape.inputs),
            };
        }
    }
    Ok(grad)
}

/// Serialized regressor: spec plus weights, exact under a JSON round trip.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressorCheckpoint {
    pub format: String,
    pub version: u32,
    pub spec: RegressorSpec,
    pub params: ParameterSet,
}

impl RegressorCheckpoint {
    pub const FORMAT: &'static str = "corrgnn-regressor";
    pub const VERSION: u32 = 1;

    pub fn new(spec: RegressorSpec, params: ParameterSet) -> Self {
        Self {
            format: Self::FORMAT.into(),
            version: Self::VERSION,
            spec,
            params,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Self = serde_json::from_str(text)?;
        if ck.format != Self::FORMAT || ck.version != Self::VERSION {
            return Err(Error::Format {
                file: "regressor checkpoint".into(),
                reason: format!("unsupported format {} v{}", ck.format, ck.version),
            });
        }
        let params = ParameterSet::from_parts(ck.params.layout.clone(), ck.params.values.clone())?;
        Ok(Self { params, ..ck })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::watts_strogatz;
    use rand::Rng;
    use proptest::prelude::*;

    fn featured(graph: AttributedGraph, d: usize, seed: u64) -> AttributedGraph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = (0..graph.n() * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        graph.with_features(d, x).unwrap()
    }

    fn path3(features: Vec<f64>) -> AttributedGraph {
        AttributedGraph::new(3, [(0, 1, 0), (1, 2, 0)], 1, 1, features, None).unwrap()
    }

    #[test]
    fn linear_with_zero_weights_predicts_bias() {
        let g = featured(watts_strogatz(10, 2, 0.0, 0).unwrap(), 3, 1);
        let spec = RegressorSpec::new(RegressorKind::Linear, 0);
        let mut p = spec.init(3).unwrap();
        p.values_mut().copy_from_slice(&[0.0, 0.0, 0.0, 0.7]);
        let (y, _) = forward(&spec, &p, &g, &[0, 4, 9]).unwrap();
        assert_eq!(y, vec![0.7; 3]);
    }

    #[test]
    fn sage_on_isolated_vertex_equals_mlp() {
        let g = AttributedGraph::new(3, [(0, 1, 0)], 1, 2, vec![0.1, 0.2, -0.3, 0.4, 0.9, -0.5], None).unwrap();
        let sage = RegressorSpec::new(RegressorKind::SageMean, 4);
        let mlp = RegressorSpec::new(RegressorKind::Mlp, 4);
        let p = sage.init(2).unwrap();
        let (a, _) = forward(&sage, &p, &g, &[2]).unwrap();
        let (b, _) = forward(&mlp, &p, &g, &[2]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sage_two_layers_on_path_by_hand() {
        // 1×1 weights: layer weights 2 and -1 with biases 0.5 and 1, head 3·h - 1
        let spec = RegressorSpec {
            hidden_width: 1,
            representation_dim: 1,
            ..RegressorSpec::new(RegressorKind::SageMean, 0)
        };
        let p = ParameterSet::from_parts(spec.layout(1), vec![2.0, 0.5, -1.0, 1.0, 3.0, -1.0]).unwrap();
        let g = path3(vec![1.0, -2.0, 4.0]);
        let (y, _) = forward(&spec, &p, &g, &[0, 1, 2]).unwrap();
        // layer 1: means (−0.5, 1, 1) → relu(2m + 0.5) = (0, 2.5, 2.5)
        // layer 2: means (1.25, 5/3, 2.5) → relu(−m + 1) = (0, 0, 0)
        // head: 3·0 − 1
        assert_eq!(y, vec![-1.0, -1.0, -1.0]);
        let p = ParameterSet::from_parts(spec.layout(1), vec![2.0, 0.5, -1.0, 4.0, 3.0, -1.0]).unwrap();
        let (y, _) = forward(&spec, &p, &g, &[0, 1, 2]).unwrap();
        // layer 2: relu(−m + 4) = (2.75, 7/3, 1.5) → head 3h − 1
        let want = [3.0 * 2.75 - 1.0, 3.0 * (4.0 - 5.0 / 3.0) - 1.0, 3.0 * 1.5 - 1.0];
        for (a, b) in y.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_upstream_gives_zero_gradient() {
        let g = featured(watts_strogatz(20, 4, 0.3, 2).unwrap(), 3, 2);
        for kind in [RegressorKind::Linear, RegressorKind::Mlp, RegressorKind::SageMean, RegressorKind::Gcn] {
            let spec = RegressorSpec::new(kind, 1);
            let p = spec.init(3).unwrap();
            let (_, cache) = forward(&spec, &p, &g, &[1, 2, 3]).unwrap();
            let grad = backward(&spec, &p, &g, &cache, &[0.0; 3]).unwrap();
            assert!(grad.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn linear_weight_gradient_is_weighted_feature_sum() {
        let g = featured(watts_strogatz(12, 2, 0.0, 0).unwrap(), 2, 3);
        let spec = RegressorSpec::new(RegressorKind::Linear, 0);
        let p = spec.init(2).unwrap();
        let verts = [0, 3, 7];
        let up = [0.5, -1.0, 2.0];
        let (_, cache) = forward(&spec, &p, &g, &verts).unwrap();
        let grad = backward(&spec, &p, &g, &cache, &up).unwrap();
        for k in 0..2 {
            let want: f64 = verts.iter().zip(&up).map(|(&v, u)| u * g.feature(v)[k]).sum();
            assert!((grad[k] - want).abs() < 1e-14);
        }
        assert!((grad[2] - 1.5).abs() < 1e-14);
    }

    #[test]
    fn stale_cache_is_rejected() {
        let g = featured(watts_strogatz(10, 2, 0.0, 0).unwrap(), 2, 3);
        let spec = RegressorSpec::new(RegressorKind::Mlp, 0);
        let mut p = spec.init(2).unwrap();
        let (_, cache) = forward(&spec, &p, &g, &[1]).unwrap();
        p.values_mut()[0] += 1.0;
        assert!(matches!(backward(&spec, &p, &g, &cache, &[1.0]), Err(Error::StaleCache)));
    }

    #[test]
    fn feature_dimension_mismatch() {
        let g = featured(watts_strogatz(10, 2, 0.0, 0).unwrap(), 2, 3);
        let spec = RegressorSpec::new(RegressorKind::Mlp, 0);
        let p = spec.init(3).unwrap();
        assert!(matches!(forward(&spec, &p, &g, &[1]), Err(Error::DimensionMismatch { .. })));
    }

    /// Central differences of `⟨u, ŷ(θ)⟩` against the backward pass.
    fn gradient_error(kind: RegressorKind, seed: u64) -> f64 {
        let g = featured(watts_strogatz(20, 4, 0.3, seed).unwrap(), 3, seed + 1);
        let spec = RegressorSpec::new(kind, seed);
        let mut p = spec.init(3).unwrap();
        // non-zero biases so ReLU kinks are not hit exactly
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 7);
        for v in p.values_mut() {
            *v += rng.random_range(-0.1..0.1);
        }
        let verts: Vec<usize> = (0..20).step_by(2).collect();
        let up: Vec<f64> = verts.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
        let objective = |p: &ParameterSet| {
            let (y, _) = forward(&spec, p, &g, &verts).unwrap();
            y.iter().zip(&up).map(|(a, b)| a * b).sum::<f64>()
        };
        let (_, cache) = forward(&spec, &p, &g, &verts).unwrap();
        let grad = backward(&spec, &p, &g, &cache, &up).unwrap();
        let mut num = 0.0;
        let mut den = 0.0;
        for k in 0..p.len() {
            let h = 1e-5 * p.values()[k].abs().max(1.0);
            let mut plus = p.clone();
            plus.values_mut()[k] += h;
            let mut minus = p.clone();
            minus.values_mut()[k] -= h;
            let fd = (objective(&plus) - objective(&minus)) / (2.0 * h);
            num += (fd - grad[k]).powi(2);
            den += grad[k].powi(2);
        }
        (num / den.max(1e-300)).sqrt()
    }

    #[test]
    fn gradients_match_finite_differences_for_every_kind() {
        for kind in [RegressorKind::Linear, RegressorKind::Mlp, RegressorKind::SageMean, RegressorKind::Gcn] {
            for seed in 0..3 {
                let err = gradient_error(kind, seed);
                assert!(err < 1e-4, "{kind} seed {seed}: relative error {err}");
            }
        }
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let spec = RegressorSpec::new(RegressorKind::Gcn, 17);
        let p = spec.init(5).unwrap();
        let ck = RegressorCheckpoint::new(spec, p);
        let text = ck.to_json().unwrap();
        let back = RegressorCheckpoint::from_json(&text).unwrap();
        assert_eq!(ck, back);
        assert_eq!(text, back.to_json().unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn sage_is_permutation_equivariant(seed in 0u64..500) {
            let g = featured(watts_strogatz(15, 4, 0.4, seed).unwrap(), 2, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut perm: Vec<usize> = (0..15).collect();
            rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
            // vertex i of g becomes perm[i] in h
            let mut feats = vec![0.0; 30];
            for i in 0..15 {
                feats[perm[i] * 2..perm[i] * 2 + 2].copy_from_slice(g.feature(i));
            }
            let h = AttributedGraph::new(
                15,
                g.edges().iter().map(|e| (perm[e.u], perm[e.v], 0)),
                1, 2, feats, None,
            ).unwrap();
            for kind in [RegressorKind::SageMean, RegressorKind::Gcn] {
                let spec = RegressorSpec::new(kind, seed);
                let p = spec.init(2).unwrap();
                let all: Vec<usize> = (0..15).collect();
                let (a, _) = forward(&spec, &p, &g, &all).unwrap();
                let (b, _) = forward(&spec, &p, &h, &perm).unwrap();
                for (x, y) in a.iter().zip(&b) {
                    prop_assert!((x - y).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn checkpoint_values_survive_json(values in proptest::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 4)) {
            let spec = RegressorSpec::new(RegressorKind::Linear, 0);
            let p = ParameterSet::from_parts(spec.layout(3), values).unwrap();
            let ck = RegressorCheckpoint::new(spec, p);
            let back = RegressorCheckpoint::from_json(&ck.to_json().unwrap()).unwrap();
            for (a, b) in ck.params.values().iter().zip(back.params.values()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
