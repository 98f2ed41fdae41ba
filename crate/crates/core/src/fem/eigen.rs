//! Shift-invert block Lanczos for K u = λ M u (K, M symmetric, M SPD).
//!
//! The operator T = (K − σM)⁻¹M is self-adjoint in the M inner product; its
//! largest eigenvalues θ give the eigenvalues λ = σ + 1/θ closest to σ from
//! above. The Krylov basis is kept M-orthonormal by classical Gram–Schmidt
//! applied twice, and Ritz values come from the projected matrix.

use faer::{Mat, Side};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};

use super::linear::CholeskyFactor;
use super::sparse::SparseMatrix;

#[derive(Clone, Debug)]
pub struct EigenOptions {
    pub shift: f64,
    /// Required ‖Ku − λMu‖ / ‖Mu‖.
    pub tol: f64,
    pub block_size: usize,
    /// Maximum Krylov basis dimension.
    pub max_basis: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions { shift: 0.0, tol: 1e-8, block_size: 3, max_basis: 240, seed: 0x5eed_cafe }
    }
}

/// Relative gap below which neighbouring eigenvalues are reported as clustered.
pub const CLUSTER_GAP: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct EigenSolution {
    pub values: Vec<f64>,
    /// M-orthonormal eigenvectors in the reduced (free) numbering.
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub warnings: Vec<String>,
    pub basis_size: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct Basis<'a> {
    m: &'a SparseMatrix,
    q: Vec<Vec<f64>>,
}

impl Basis<'_> {
    /// M-orthogonalizes `w` against the basis (twice); returns the
    /// projection coefficients and the remaining M-norm.
    fn orthogonalize(&self, w: &mut [f64]) -> (Vec<f64>, f64) {
        let mut coef = vec![0.0; self.q.len()];
        for _ in 0..2 {
            let mw = self.m.mul_vec(w);
            let c: Vec<f64> = self.q.iter().map(|q| dot(q, &mw)).collect();
            for (qi, ci) in self.q.iter().zip(&c) {
                for (wk, qk) in w.iter_mut().zip(qi) {
                    *wk -= ci * qk;
                }
            }
            coef.iter_mut().zip(&c).for_each(|(a, b)| *a += b);
        }
        let mw = self.m.mul_vec(w);
        (coef, dot(w, &mw).max(0.0).sqrt())
    }
}

/// Smallest `count` eigenpairs of K u = λ M u above the shift.
pub fn solve_generalized_eig(
    k: &SparseMatrix,
    m: &SparseMatrix,
    count: usize,
    opts: &EigenOptions,
) -> Result<EigenSolution> {
    let n = k.n_rows();
    if count == 0 {
        return Err(Error::InvalidArgument("eigenpair count must be >= 1".into()));
    }
    if n == 0 {
        return Err(Error::EmptyFreeSet);
    }
    if count > n {
        return Err(Error::InvalidArgument(format!("asked for {count} eigenpairs of a {n}-dimensional problem")));
    }
    let shifted = if opts.shift == 0.0 {
        k.clone()
    } else {
        let mut t: Vec<(usize, usize, f64)> = Vec::with_capacity(k.nnz() + m.nnz());
        for i in 0..n {
            t.extend(k.row(i).map(|(j, v)| (i, j, v)));
            t.extend(m.row(i).map(|(j, v)| (i, j, -opts.shift * v)));
        }
        SparseMatrix::from_triplets(n, n, &t)?
    };
    let factor = CholeskyFactor::new(&shifted)?;

    let bs = opts.block_size.max(1).min(n);
    let max_basis = opts.max_basis.max(count + 2 * bs).min(n);
    let mut rng = StdRng::seed_from_u64(opts.seed);
    let mut basis = Basis { m, q: Vec::new() };
    // h[j] holds the coefficients of T q_j in the basis (column j of the projection).
    let mut h: Vec<Vec<f64>> = Vec::new();

    // Orthogonalizes w, appends the normalized remainder (or a random
    // replacement when w lies in the span) and returns the coefficients of w
    // in the basis, including the appended vector when there is one.
    let add_vector = |basis: &mut Basis, mut w: Vec<f64>, rng: &mut StdRng| -> (Vec<f64>, bool) {
        let norm0 = dot(&w, &basis.m.mul_vec(&w)).max(0.0).sqrt();
        let (mut coef, nrm) = basis.orthogonalize(&mut w);
        if nrm > 1e-10 * norm0.max(f64::MIN_POSITIVE) {
            w.iter_mut().for_each(|x| *x /= nrm);
            basis.q.push(w);
            coef.push(nrm);
            return (coef, true);
        }
        for _ in 0..3 {
            if basis.q.len() >= n {
                break;
            }
            let mut r: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
            let r0 = dot(&r, &basis.m.mul_vec(&r)).sqrt();
            let (_, rn) = basis.orthogonalize(&mut r);
            if rn > 1e-8 * r0 {
                r.iter_mut().for_each(|x| *x /= rn);
                basis.q.push(r);
                coef.push(0.0);
                return (coef, true);
            }
        }
        (coef, false)
    };

    let mut pending: Vec<usize> = Vec::new();
    for _ in 0..bs {
        let w: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
        if add_vector(&mut basis, w, &mut rng).1 {
            pending.push(basis.q.len() - 1);
        }
    }

    let mut steps = 0;
    let mut converged = 0;
    while !pending.is_empty() {
        steps += 1;
        let mut block: Vec<Vec<f64>> = pending.iter().map(|&j| m.mul_vec(&basis.q[j])).collect();
        factor.solve_columns(&mut block);
        let done = std::mem::take(&mut pending);
        for (w, &j) in block.into_iter().zip(&done) {
            let (coef, pushed) = add_vector(&mut basis, w, &mut rng);
            debug_assert_eq!(h.len(), j);
            h.push(coef);
            if pushed {
                pending.push(basis.q.len() - 1);
            }
        }
        let p = h.len();
        if p < count {
            continue;
        }
        let full = basis.q.len() >= max_basis || pending.is_empty();
        let hp = Mat::from_fn(p, p, |i, j| {
            let a = h[j].get(i).copied().unwrap_or(0.0);
            let b = h[i].get(j).copied().unwrap_or(0.0);
            0.5 * (a + b)
        });
        let evd = hp.self_adjoint_eigen(Side::Lower).map_err(|_| Error::KrylovBreakdown {
            steps,
            converged,
            wanted: count,
        })?;
        let s = evd.S();
        let u = evd.U();
        // θ ascending; the wanted eigenvalues are the largest θ
        let order: Vec<usize> = (0..p).rev().take(count).collect();
        converged = 0;
        for &idx in &order {
            let mut r2 = 0.0;
            for i in p..basis.q.len() {
                let mut acc = 0.0;
                for (j, hj) in h.iter().enumerate() {
                    acc += hj.get(i).copied().unwrap_or(0.0) * u[(j, idx)];
                }
                r2 += acc * acc;
            }
            if r2.sqrt() <= 1e-3 * opts.tol * s[idx].abs() {
                converged += 1;
            } else {
                break;
            }
        }
        if converged < count && !full {
            continue;
        }
        let mut values = Vec::with_capacity(count);
        let mut vectors = Vec::with_capacity(count);
        let mut residuals = Vec::with_capacity(count);
        for &idx in &order {
            let lambda = opts.shift + 1.0 / s[idx];
            let mut v = vec![0.0; n];
            for j in 0..p {
                let c = u[(j, idx)];
                for (vk, qk) in v.iter_mut().zip(&basis.q[j]) {
                    *vk += c * qk;
                }
            }
            let mn = m.quadratic_form(&v).sqrt();
            v.iter_mut().for_each(|x| *x /= mn);
            let kv = k.mul_vec(&v);
            let mv = m.mul_vec(&v);
            let r: Vec<f64> = kv.iter().zip(&mv).map(|(a, b)| a - lambda * b).collect();
            residuals.push(norm(&r) / norm(&mv));
            values.push(lambda);
            vectors.push(v);
        }
        let all_ok = residuals.iter().all(|r| *r <= opts.tol);
        if !all_ok {
            if full {
                let conv = residuals.iter().filter(|r| **r <= opts.tol).count();
                return Err(Error::KrylovBreakdown { steps, converged: conv, wanted: count });
            }
            continue;
        }
        let mut warnings = Vec::new();
        for i in 1..values.len() {
            let gap = (values[i] - values[i - 1]) / values[i].abs().max(f64::MIN_POSITIVE);
            if gap < CLUSTER_GAP {
                let msg = format!("eigenvalues {} and {} are clustered (relative gap {gap:.2e})", i - 1, i);
                log::warn!("{msg}");
                warnings.push(msg);
            }
        }
        return Ok(EigenSolution { values, vectors, residuals, warnings, basis_size: basis.q.len() });
    }
    Err(Error::KrylovBreakdown { steps, converged, wanted: count })
}

/// uᵀKu / uᵀMu.
pub fn rayleigh_quotient(u: &[f64], k: &SparseMatrix, m: &SparseMatrix) -> Result<f64> {
    let den = m.quadratic_form(u);
    if !(den > 0.0) {
        return Err(Error::ZeroNorm);
    }
    Ok(k.quadratic_form(u) / den)
}
