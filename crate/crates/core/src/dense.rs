//! Dense reference computations.
//!
//! These materialize matrices and factorize them in `O(n^3)`. They back the
//! oracle mode of the likelihood and every accuracy check against the
//! stochastic estimators, and are meant for graphs of at most a few
//! thousand vertices.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::VertexPartition;
use crate::operator::LinearOperator;
use crate::{Error, Result};

/// Largest graph the dense oracle accepts.
pub const MAX_DENSE_N: usize = 4000;

pub fn to_dense<A: LinearOperator + ?Sized>(op: &A) -> DMatrix<f64> {
    let n = op.dim();
    let mut m = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply_into(&e, &mut col);
        m.column_mut(j).copy_from_slice(&col);
        e[j] = 0.0;
    }
    m
}

pub fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

fn cholesky(m: DMatrix<f64>) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    Cholesky::new(m).ok_or(Error::NotPositiveDefinite { node: f64::NAN })
}

/// `log det M` for symmetric positive definite `M`; zero for an empty matrix.
pub fn logdet_spd(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let chol = cholesky(m.clone())?;
    Ok(2.0 * chol.l().diagonal().iter().map(|x| x.ln()).sum::<f64>())
}

pub fn inverse_spd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.nrows() == 0 {
        return Ok(m.clone());
    }
    Ok(cholesky(m.clone())?.inverse())
}

pub fn solve_spd(m: &DMatrix<f64>, rhs: &[f64]) -> Result<Vec<f64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let x = cholesky(m.clone())?.solve(&DVector::from_column_slice(rhs));
    Ok(x.iter().copied().collect())
}

/// `M_LL - M_LU M_UU^{-1} M_UL`.
pub fn schur_complement(m: &DMatrix<f64>, partition: &VertexPartition) -> Result<DMatrix<f64>> {
    let (l, u) = (partition.labeled(), partition.unlabeled());
    let m_ll = submatrix(m, l, l);
    if u.is_empty() {
        return Ok(m_ll);
    }
    let m_lu = submatrix(m, l, u);
    let m_uu = submatrix(m, u, u);
    let solved = cholesky(m_uu)?.solve(&m_lu.transpose());
    Ok(m_ll - &m_lu * solved)
}

/// Random symmetric positive definite matrix with roughly `density` of its
/// off-diagonal entries nonzero and a dominant diagonal.
pub fn random_sparse_spd(n: usize, density: f64, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            if rng.random::<f64>() < density {
                let v: f64 = rng.random_range(-1.0..1.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
    }
    for i in 0..n {
        let row: f64 = (0..n).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum();
        m[(i, i)] = row + rng.random_range(0.1..2.0);
    }
    m
}
