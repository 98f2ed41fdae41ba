use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{simplex, FacetTag, Mesh, TaggedMesh};

use super::sparse::SparseMatrix;

/// P1 stiffness matrix ∫∇φ_i·∇φ_j (no boundary conditions applied).
pub fn assemble_stiffness(tagged: &TaggedMesh) -> Result<SparseMatrix> {
    stiffness_matrix(tagged.mesh())
}

/// P1 mass matrix ∫φ_iφ_j.
pub fn assemble_mass(tagged: &TaggedMesh) -> Result<SparseMatrix> {
    mass_matrix(tagged.mesh())
}

pub fn stiffness_matrix(mesh: &Mesh) -> Result<SparseMatrix> {
    assemble(mesh, |dim, pts, out| {
        let (g, vol) = simplex::barycentric_gradients(dim, pts);
        let n = dim + 1;
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = vol * (g[i][0] * g[j][0] + g[i][1] * g[j][1] + g[i][2] * g[j][2]);
            }
        }
        vol
    })
}

pub fn mass_matrix(mesh: &Mesh) -> Result<SparseMatrix> {
    assemble(mesh, |dim, pts, out| {
        let vol = simplex::signed_volume(dim, pts);
        let n = dim + 1;
        let base = vol / ((n * (n + 1)) as f64);
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = if i == j { 2.0 * base } else { base };
            }
        }
        vol
    })
}

/// Load vector ∫_{Neumann facets} f φ_i by facet quadrature: 3-point rule
/// for `degree` ≤ 2, 6-point (degree 4) otherwise. Only 3D meshes.
pub fn assemble_neumann_load<F>(tagged: &TaggedMesh, f: F, degree: usize) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    let mesh = tagged.mesh();
    if mesh.dim() != 3 {
        return Err(Error::Unsupported("Neumann loads are implemented for 3D meshes".into()));
    }
    let rule = crate::quadrature::triangle_rule(degree);
    let mut load = vec![0.0; mesh.n_vertices()];
    for fct in tagged.facets_with(FacetTag::Neumann) {
        let vs = mesh.facet(fct);
        let area = mesh.facet_measure(fct);
        for (b, w) in &rule {
            let mut x = [0.0; 3];
            for i in 0..3 {
                for k in 0..3 {
                    x[k] += b[i] * mesh.vertex(vs[i])[k];
                }
            }
            let fx = f(&x);
            for i in 0..3 {
                load[vs[i]] += area * w * fx * b[i];
            }
        }
    }
    Ok(load)
}

/// Local element matrix size: (dim + 1)² ≤ 16.
type Local = [f64; 16];

/// Sparsity pattern of the vertex graph (including the diagonal).
fn pattern(mesh: &Mesh) -> (Vec<usize>, Vec<usize>) {
    let nv = mesh.n_vertices();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for c in 0..mesh.n_cells() {
        let cell = mesh.cell(c);
        for &a in cell {
            adj[a].extend_from_slice(cell);
        }
    }
    let mut row_ptr = Vec::with_capacity(nv + 1);
    let mut col_idx = Vec::new();
    row_ptr.push(0);
    for row in adj.iter_mut() {
        row.sort_unstable();
        row.dedup();
        col_idx.extend_from_slice(row);
        row_ptr.push(col_idx.len());
    }
    (row_ptr, col_idx)
}

/// Generic assembly: element matrices are computed in parallel and
/// scattered sequentially in cell order, so the result is deterministic.
fn assemble<F>(mesh: &Mesh, element: F) -> Result<SparseMatrix>
where
    F: Fn(usize, &[&[f64]], &mut Local) -> f64 + Sync,
{
    let dim = mesh.dim();
    let n = dim + 1;
    let locals: Vec<(Local, f64)> = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            let pts = mesh.cell_points(c);
            let mut out = [0.0; 16];
            let vol = element(dim, &pts, &mut out);
            (out, vol)
        })
        .collect();
    let (row_ptr, col_idx) = pattern(mesh);
    let mut values = vec![0.0; col_idx.len()];
    for (c, (local, vol)) in locals.iter().enumerate() {
        if !(vol.abs() > 0.0) || !vol.is_finite() {
            let pts = mesh.cell_points(c);
            return Err(Error::DegenerateCell {
                cell: c,
                volume: *vol,
                min_dihedral_deg: simplex::min_angle_deg(dim, &pts),
            });
        }
        let cell = mesh.cell(c);
        for i in 0..n {
            let r = cell[i];
            let cols = &col_idx[row_ptr[r]..row_ptr[r + 1]];
            for j in 0..n {
                let k = cols.binary_search(&cell[j]).expect("pattern covers the cell");
                values[row_ptr[r] + k] += local[i * n + j];
            }
        }
    }
    let nv = mesh.n_vertices();
    Ok(SparseMatrix::from_csr(nv, nv, row_ptr, col_idx, values))
}
