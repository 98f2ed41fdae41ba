use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::sparse::{SparseColMat, SymbolicSparseColMat};
use faer::{Mat, Side};

use crate::error::{Error, Result};

use super::sparse::SparseMatrix;

/// Sparse Cholesky factorization of an SPD matrix (fill-reducing ordering
/// chosen by the backend).
pub struct CholeskyFactor {
    llt: Llt<usize, f64>,
    n: usize,
}

impl std::fmt::Debug for CholeskyFactor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CholeskyFactor(n = {})", self.n)
    }
}

impl CholeskyFactor {
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        let n = a.n_rows();
        if n != a.n_cols() {
            return Err(Error::InvalidArgument("Cholesky needs a square matrix".into()));
        }
        let (col_ptr, rows, vals) = a.lower_csc();
        let symbolic = SymbolicSparseColMat::new_checked(n, n, col_ptr, None, rows);
        let mat = SparseColMat::new(symbolic, vals);
        let llt = mat.sp_cholesky(Side::Lower).map_err(|_| Error::NotPositiveDefinite)?;
        Ok(CholeskyFactor { llt, n })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let mut m = Mat::from_fn(self.n, 1, |i, _| b[i]);
        self.llt.solve_in_place(m.as_mut());
        for (i, x) in b.iter_mut().enumerate() {
            *x = m[(i, 0)];
        }
    }

    /// Solves for several right-hand sides stored as columns.
    pub fn solve_columns(&self, cols: &mut [Vec<f64>]) {
        if cols.is_empty() {
            return;
        }
        let mut m = Mat::from_fn(self.n, cols.len(), |i, j| cols[j][i]);
        self.llt.solve_in_place(m.as_mut());
        for (j, c) in cols.iter_mut().enumerate() {
            for (i, x) in c.iter_mut().enumerate() {
                *x = m[(i, j)];
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinearMethod {
    /// Sparse Cholesky with iterative refinement.
    Direct,
    /// Jacobi-preconditioned conjugate gradients.
    ConjugateGradient,
}

#[derive(Clone, Debug)]
pub struct LinearSolution {
    pub x: Vec<f64>,
    /// ‖b − A x‖ / ‖b‖
    pub residual: f64,
    pub iterations: usize,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let ax = a.mul_vec(x);
    b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
}

/// Solves the SPD system A x = b to relative residual `tol`.
pub fn solve_spd(a: &SparseMatrix, b: &[f64], tol: f64, method: LinearMethod) -> Result<LinearSolution> {
    let nb = norm2(b);
    if nb == 0.0 {
        return Ok(LinearSolution { x: vec![0.0; b.len()], residual: 0.0, iterations: 0 });
    }
    match method {
        LinearMethod::Direct => {
            let f = CholeskyFactor::new(a)?;
            solve_with_factor(&f, a, b, tol)
        }
        LinearMethod::ConjugateGradient => conjugate_gradient(a, b, tol, 20 * b.len().max(100)),
    }
}

/// Direct solve with up to a few steps of iterative refinement.
pub fn solve_with_factor(f: &CholeskyFactor, a: &SparseMatrix, b: &[f64], tol: f64) -> Result<LinearSolution> {
    let nb = norm2(b);
    if nb == 0.0 {
        return Ok(LinearSolution { x: vec![0.0; b.len()], residual: 0.0, iterations: 0 });
    }
    let mut x = b.to_vec();
    f.solve_in_place(&mut x);
    let mut r = residual(a, &x, b);
    let mut rel = norm2(&r) / nb;
    let mut it = 1;
    while rel > tol && it < 5 {
        f.solve_in_place(&mut r);
        x.iter_mut().zip(&r).for_each(|(xi, di)| *xi += di);
        r = residual(a, &x, b);
        rel = norm2(&r) / nb;
        it += 1;
    }
    if rel > tol {
        return Err(Error::NonConvergence { iterations: it, residual: rel });
    }
    Ok(LinearSolution { x, residual: rel, iterations: it })
}

pub fn conjugate_gradient(a: &SparseMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<LinearSolution> {
    let n = b.len();
    let nb = norm2(b);
    if nb == 0.0 {
        return Ok(LinearSolution { x: vec![0.0; n], residual: 0.0, iterations: 0 });
    }
    let dinv: Vec<f64> = a.diagonal().iter().map(|d| if *d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return Err(Error::NotPositiveDefinite);
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = norm2(&r) / nb;
        if rel <= tol {
            // confirm with the true residual
            let true_rel = norm2(&residual(a, &x, b)) / nb;
            if true_rel <= tol {
                return Ok(LinearSolution { x, residual: true_rel, iterations: it });
            }
        }
        for i in 0..n {
            z[i] = r[i] * dinv[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rel = norm2(&residual(a, &x, b)) / nb;
    Err(Error::NonConvergence { iterations: max_iter, residual: rel })
}
