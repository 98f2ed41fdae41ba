use crate::error::{Error, Result};
use crate::geometry::TaggedMesh;

use super::sparse::SparseMatrix;

/// Reduced system on the free (unconstrained) vertices.
#[derive(Clone, Debug)]
pub struct ConstrainedSystem {
    pub k: SparseMatrix,
    pub m: SparseMatrix,
    free: Vec<usize>,
    local: Vec<usize>,
}

/// Removes the rows and columns of `constrained` vertices from K and M.
pub fn apply_constraints(k: &SparseMatrix, m: &SparseMatrix, constrained: &[usize]) -> Result<ConstrainedSystem> {
    let n = k.n_rows();
    let mut mask = vec![false; n];
    for &v in constrained {
        if v >= n {
            return Err(Error::InvalidArgument(format!("constrained vertex {v} out of range")));
        }
        mask[v] = true;
    }
    apply_mask(k, m, &mask)
}

pub(crate) fn apply_mask(k: &SparseMatrix, m: &SparseMatrix, mask: &[bool]) -> Result<ConstrainedSystem> {
    let free: Vec<usize> = (0..mask.len()).filter(|&v| !mask[v]).collect();
    if free.is_empty() {
        return Err(Error::EmptyFreeSet);
    }
    let mut local = vec![usize::MAX; mask.len()];
    for (l, &g) in free.iter().enumerate() {
        local[g] = l;
    }
    Ok(ConstrainedSystem {
        k: k.principal_submatrix(&free, &local),
        m: m.principal_submatrix(&free, &local),
        free,
        local,
    })
}

impl ConstrainedSystem {
    /// Constrains every vertex that touches a Dirichlet or artificial facet.
    pub fn from_tagged(tagged: &TaggedMesh, k: &SparseMatrix, m: &SparseMatrix) -> Result<Self> {
        apply_mask(k, m, &tagged.constrained_vertices())
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    pub fn free_vertices(&self) -> &[usize] {
        &self.free
    }

    /// Free index of a vertex, if free.
    pub fn free_index(&self, vertex: usize) -> Option<usize> {
        match self.local[vertex] {
            usize::MAX => None,
            l => Some(l),
        }
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&g| full[g]).collect()
    }

    /// Scatters free values into a full vector whose constrained entries come from `lift`.
    pub fn expand(&self, free_values: &[f64], lift: Option<&[f64]>) -> Vec<f64> {
        let mut out = match lift {
            Some(l) => l.to_vec(),
            None => vec![0.0; self.local.len()],
        };
        for (l, &g) in self.free.iter().enumerate() {
            out[g] = free_values[l];
        }
        out
    }

    /// Right-hand side on free vertices for the problem K u = load with
    /// u = lift on constrained vertices: (load − K_full·lift₀) restricted,
    /// where lift₀ is `lift` with free entries zeroed.
    pub fn lifted_rhs(&self, k_full: &SparseMatrix, load: &[f64], lift: Option<&[f64]>) -> Vec<f64> {
        let mut rhs = self.restrict(load);
        if let Some(g) = lift {
            let mut g0 = g.to_vec();
            for &v in &self.free {
                g0[v] = 0.0;
            }
            let kg = k_full.mul_vec(&g0);
            for (l, &v) in self.free.iter().enumerate() {
                rhs[l] -= kg[v];
            }
        }
        rhs
    }
}
