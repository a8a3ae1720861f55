//! Semi-supervised graph regression with correlated residuals.
//!
//! A base regressor (linear, MLP or a graph network) predicts each vertex
//! label from features. The residuals `r = y - ŷ` are modeled jointly as a
//! Gaussian with sparse precision `Γ = β(I - Σ_i α_i S^(i))`, where `S^(i)`
//! are the normalized adjacency matrices of each edge type. Parameters are
//! fit by maximizing the marginal likelihood of the observed labels using
//! conjugate gradients, Hutchinson trace estimation and stochastic Lanczos
//! quadrature, all of which cost time linear in the number of edges.
//! Unlabeled vertices are predicted by Gaussian conditioning.
//!
//! Module map:
//!
//! - [`graph`]: attributed graphs, normalized adjacency operators, generators.
//! - [`linalg`]: CG, Lanczos, tridiagonal eigensolver, trace and log-det estimators.
//! - [`precision`]: the precision model, its blocks, Schur complement and derivatives.
//! - [`regressors`]: base regressors with exact backward passes and optimizers.
//! - [`model`]: the marginal likelihood objective, training and prediction.
//! - [`lp`]: label propagation and the LP-corrected regressor.
//! - [`data`]: Ising sampling, splits, metrics and the dataset bundle format.
//! - [`experiments`]: the experiment protocols driven by the CLI.

pub mod data;
pub mod dense;
mod error;
pub mod experiments;
pub mod graph;
pub mod linalg;
pub mod lp;
pub mod model;
pub mod operator;
pub mod precision;
pub mod regressors;

pub use error::{Error, Result};
pub use graph::{AttributedGraph, Edge, SparseSymmetric, TypedAdjacency, VertexPartition};
pub use linalg::EstimatorConfig;
pub use model::{CgnnModel, TrainConfig};
pub use operator::LinearOperator;
pub use precision::{CorrelationParams, PrecisionOperator};
pub use regressors::{ParameterSet, RegressorKind, RegressorSpec};
