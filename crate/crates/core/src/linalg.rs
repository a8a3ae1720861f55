//! Matrix-free Krylov machinery: conjugate gradients, Lanczos
//! tridiagonalization, Hutchinson trace estimation and stochastic Lanczos
//! quadrature (SLQ) for log-determinants.
//!
//! Every stochastic estimate is driven by an [`EstimatorConfig`]. Probe `t`
//! draws its Gaussian vector from a ChaCha stream keyed by `(seed, stream)`,
//! so probes are independent of scheduling: the parallel and sequential
//! paths compute identical per-probe values and reduce them in probe order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::operator::{dot, norm, LinearOperator};
use crate::precision::CorrelationParams;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    /// Number of probe vectors `T`.
    pub probes: usize,
    /// Lanczos steps `k` per probe.
    pub lanczos_steps: usize,
    /// Relative residual at which CG stops.
    pub cg_tolerance: f64,
    pub cg_max_iters: usize,
    pub seed: u64,
    /// Spread probes over the rayon pool. Ignored without the `parallel` feature.
    pub parallel: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            probes: 128,
            lanczos_steps: 32,
            cg_tolerance: 1e-6,
            cg_max_iters: 256,
            seed: 0,
            parallel: true,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.probes == 0 || self.lanczos_steps == 0 {
            return Err(Error::InvalidArgument(
                "probe count and Lanczos steps must be positive".into(),
            ));
        }
        if !(self.cg_tolerance > 0.0) || self.cg_max_iters == 0 {
            return Err(Error::InvalidArgument(
                "CG tolerance and iteration cap must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn cg(&self) -> CgSettings {
        CgSettings {
            tolerance: self.cg_tolerance,
            max_iters: self.cg_max_iters,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn sequential(&self) -> Self {
        Self {
            parallel: false,
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgSettings {
    pub tolerance: f64,
    pub max_iters: usize,
}

#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// `‖A x - b‖ / ‖b‖` from the recurrence (absolute when `b = 0`).
    pub relative_residual: f64,
    pub converged: bool,
}

impl CgOutcome {
    /// Turns a stalled solve into [`Error::NotConverged`].
    pub fn into_converged(self) -> Result<Vec<f64>> {
        if self.converged {
            Ok(self.solution)
        } else {
            Err(Error::NotConverged {
                iterations: self.iterations,
                residual: self.relative_residual,
            })
        }
    }
}

/// Unpreconditioned conjugate gradients.
///
/// Hitting `max_iters` is reported through [`CgOutcome::converged`] rather
/// than as an error. On a singular but consistent positive semi-definite
/// system, starting from zero yields the minimal-norm solution since every
/// iterate stays in the range of the operator.
pub fn conjugate_gradient<A: LinearOperator + ?Sized>(
    op: &A,
    rhs: &[f64],
    x0: Option<&[f64]>,
    settings: &CgSettings,
) -> Result<CgOutcome> {
    let n = op.dim();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: rhs.len(),
            context: "CG right-hand side",
        });
    }
    let mut x = match x0 {
        Some(x0) if x0.len() != n => {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: x0.len(),
                context: "CG initial guess",
            })
        }
        Some(x0) => x0.to_vec(),
        None => vec![0.0; n],
    };
    let b_norm = norm(rhs);
    if !b_norm.is_finite() {
        return Err(Error::NonFinite("CG right-hand side"));
    }
    let scale = if b_norm > 0.0 { b_norm } else { 1.0 };

    let mut r = rhs.to_vec();
    if x0.is_some() {
        let ax = op.apply(&x);
        for (ri, ai) in r.iter_mut().zip(&ax) {
            *ri -= ai;
        }
    }
    let mut rs = dot(&r, &r);
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut iterations = 0;
    while rs.sqrt() > settings.tolerance * scale && iterations < settings.max_iters {
        op.apply_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !pap.is_finite() {
            return Err(Error::NonFinite("CG"));
        }
        if pap <= 0.0 {
            // direction in the null space; nothing left to reduce
            break;
        }
        let step = rs / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        let rs_next = dot(&r, &r);
        let mix = rs_next / rs;
        for i in 0..n {
            p[i] = r[i] + mix * p[i];
        }
        rs = rs_next;
        iterations += 1;
    }
    if !rs.is_finite() {
        return Err(Error::NonFinite("CG"));
    }
    let relative_residual = rs.sqrt() / scale;
    Ok(CgOutcome {
        solution: x,
        iterations,
        relative_residual,
        converged: relative_residual <= settings.tolerance,
    })
}

/// CG from zero, failing if the tolerance is not reached.
pub fn solve<A: LinearOperator + ?Sized>(op: &A, rhs: &[f64], settings: &CgSettings) -> Result<Vec<f64>> {
    conjugate_gradient(op, rhs, None, settings)?.into_converged()
}

/// Upper bound `(1 + a) / (1 - a)`, `a = max_i |α_i|`, on the condition
/// number of `Γ` and of any principal block of it.
pub fn condition_bound(params: &CorrelationParams) -> Result<f64> {
    let a = params.max_abs_alpha();
    if a >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "condition bound requires max |alpha| < 1, got {a}"
        )));
    }
    Ok((1.0 + a) / (1.0 - a))
}

/// Gaussian probe `t` of dimension `dim`.
pub fn probe_vector(seed: u64, stream: u64, dim: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

/// Runs `f` for each probe index, in parallel when configured, returning
/// the results in probe order.
pub(crate) fn map_probes<T, F>(cfg: &EstimatorConfig, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if cfg.parallel {
        use rayon::prelude::*;
        return (0..count).into_par_iter().map(f).collect();
    }
    let _ = cfg;
    (0..count).map(f).collect()
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Per-probe Hutchinson samples `(A^{-1} z_t)ᵀ (B z_t)` on probe streams
/// `stream_base..stream_base + T`.
pub fn hutchinson_samples<S, B>(
    solve_a: S,
    apply_b: B,
    dim: usize,
    cfg: &EstimatorConfig,
    stream_base: u64,
) -> Result<Vec<f64>>
where
    S: Fn(&[f64]) -> Result<Vec<f64>> + Sync + Send,
    B: Fn(&[f64]) -> Vec<f64> + Sync + Send,
{
    cfg.validate()?;
    map_probes(cfg, cfg.probes, |t| {
        let z = probe_vector(cfg.seed, stream_base + t as u64, dim);
        let x = solve_a(&z)?;
        Ok(dot(&x, &apply_b(&z)))
    })
    .into_iter()
    .collect()
}

/// Unbiased estimate of `tr(A^{-1} B)` from `T` Gaussian probes.
pub fn hutchinson_trace<S, B>(solve_a: S, apply_b: B, dim: usize, cfg: &EstimatorConfig) -> Result<f64>
where
    S: Fn(&[f64]) -> Result<Vec<f64>> + Sync + Send,
    B: Fn(&[f64]) -> Vec<f64> + Sync + Send,
{
    Ok(mean(&hutchinson_samples(solve_a, apply_b, dim, cfg, 0)?))
}

/// Symmetric tridiagonal matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

impl Tridiagonal {
    pub fn size(&self) -> usize {
        self.diag.len()
    }
}

const BREAKDOWN: f64 = 1e-12;

/// `k` Lanczos steps from `v0` with full reorthogonalization.
///
/// Stops early, returning a smaller matrix, once the next off-diagonal
/// falls below `1e-12` times the running norm estimate of the operator.
pub fn lanczos_tridiagonalize<A: LinearOperator + ?Sized>(
    op: &A,
    v0: &[f64],
    k: usize,
) -> Result<Tridiagonal> {
    let n = op.dim();
    if v0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: v0.len(),
            context: "Lanczos start vector",
        });
    }
    let v_norm = norm(v0);
    if !(v_norm > 0.0) || !v_norm.is_finite() {
        return Err(Error::InvalidArgument("Lanczos start vector must be nonzero and finite".into()));
    }
    let k = k.min(n).max(1);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    basis.push(v0.iter().map(|x| x / v_norm).collect());
    let mut diag = Vec::with_capacity(k);
    let mut offdiag: Vec<f64> = Vec::with_capacity(k);
    let mut w = vec![0.0; n];
    let mut op_norm = 0.0f64;
    for j in 0..k {
        op.apply_into(&basis[j], &mut w);
        let a = dot(&basis[j], &w);
        if !a.is_finite() {
            return Err(Error::NonFinite("Lanczos"));
        }
        diag.push(a);
        op_norm = op_norm.max(a.abs());
        if j + 1 == k {
            break;
        }
        for (wi, qi) in w.iter_mut().zip(&basis[j]) {
            *wi -= a * qi;
        }
        if j > 0 {
            let b = offdiag[j - 1];
            for (wi, qi) in w.iter_mut().zip(&basis[j - 1]) {
                *wi -= b * qi;
            }
        }
        for q in &basis {
            let c = dot(q, &w);
            for (wi, qi) in w.iter_mut().zip(q) {
                *wi -= c * qi;
            }
        }
        let b = norm(&w);
        op_norm = op_norm.max(b);
        if b <= BREAKDOWN * op_norm {
            break;
        }
        offdiag.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
    Ok(Tridiagonal { diag, offdiag })
}

/// Eigenvalues (ascending) of a symmetric tridiagonal matrix and the first
/// component of each unit eigenvector, by implicit QL with Wilkinson shifts.
/// Only the first row of the eigenvector matrix is accumulated.
pub fn tridiag_eig(t: &Tridiagonal) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = t.size();
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    if t.offdiag.len() + 1 != n {
        return Err(Error::DimensionMismatch {
            expected: n - 1,
            actual: t.offdiag.len(),
            context: "tridiagonal off-diagonal",
        });
    }
    let mut d = t.diag.clone();
    let mut e = t.offdiag.clone();
    e.push(0.0);
    let mut z = vec![0.0; n];
    z[0] = 1.0;

    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > 100 {
                return Err(Error::NonFinite("tridiagonal eigensolver (no convergence)"));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    if d.iter().chain(&z).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("tridiagonal eigensolver"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    Ok((order.iter().map(|&i| d[i]).collect(), order.iter().map(|&i| z[i]).collect()))
}

/// Gauss quadrature of `log` from one Lanczos run on a unit start vector:
/// `Σ_i τ_i² log θ_i`.
pub(crate) fn lanczos_log_quadrature<A: LinearOperator + ?Sized>(
    op: &A,
    unit_start: &[f64],
    k: usize,
) -> Result<f64> {
    let t = lanczos_tridiagonalize(op, unit_start, k)?;
    let (nodes, first) = tridiag_eig(&t)?;
    let mut acc = 0.0;
    for (theta, tau) in nodes.iter().zip(&first) {
        if !(*theta > 0.0) {
            return Err(Error::NotPositiveDefinite { node: *theta });
        }
        acc += tau * tau * theta.ln();
    }
    Ok(acc)
}

/// Per-probe SLQ samples `n · Σ_i τ_ti² log θ_ti` on probe streams
/// `stream_base..stream_base + T`. Each Gaussian probe only supplies a
/// direction; the `n` scaling keeps every sample unbiased and makes the
/// estimate exact for multiples of the identity.
pub fn slq_logdet_samples<A: LinearOperator + ?Sized>(
    op: &A,
    cfg: &EstimatorConfig,
    stream_base: u64,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let n = op.dim();
    if n == 0 {
        return Ok(vec![0.0; cfg.probes]);
    }
    map_probes(cfg, cfg.probes, |t| {
        let z = probe_vector(cfg.seed, stream_base + t as u64, n);
        let zn = norm(&z);
        let u: Vec<f64> = z.iter().map(|x| x / zn).collect();
        Ok(n as f64 * lanczos_log_quadrature(op, &u, cfg.lanczos_steps)?)
    })
    .into_iter()
    .collect()
}

/// Stochastic Lanczos quadrature estimate of `log det A` for SPD `A`.
pub fn slq_logdet<A: LinearOperator + ?Sized>(op: &A, cfg: &EstimatorConfig) -> Result<f64> {
    Ok(mean(&slq_logdet_samples(op, cfg, 0)?))
}
