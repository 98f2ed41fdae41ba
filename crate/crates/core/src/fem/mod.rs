//! P1 finite elements: assembly, constraints, linear and eigen solvers.

mod assembly;
mod constraints;
mod eigen;
mod field;
mod linear;
mod sparse;

pub use assembly::{assemble_mass, assemble_neumann_load, assemble_stiffness, mass_matrix, stiffness_matrix};
pub use constraints::{apply_constraints, ConstrainedSystem};
pub use eigen::{rayleigh_quotient, solve_generalized_eig, EigenOptions, EigenSolution, CLUSTER_GAP};
pub use field::Field;
pub use linear::{conjugate_gradient, solve_spd, solve_with_factor, CholeskyFactor, LinearMethod, LinearSolution};
pub use sparse::SparseMatrix;

use crate::error::Result;

/// Solves K u = load with u = `lift` on constrained vertices and returns the
/// full nodal field values.
pub fn solve_linear(
    sys: &ConstrainedSystem,
    k_full: &SparseMatrix,
    load: &[f64],
    lift: Option<&[f64]>,
    tol: f64,
    method: LinearMethod,
) -> Result<(Vec<f64>, LinearSolution)> {
    let rhs = sys.lifted_rhs(k_full, load, lift);
    let sol = solve_spd(&sys.k, &rhs, tol, method)?;
    Ok((sys.expand(&sol.x, lift), sol))
}
