//! Half-ball meshes, patch geometry and boundary tagging.

mod generate;
mod io;
mod locate;
mod mesh;
mod patch;
mod refine;
pub(crate) mod simplex;
mod sizing;
mod tagging;

pub use generate::{build_half_ball_mesh, build_half_ball_mesh_dim, refine_toward_origin, HalfBallBuilder};
pub use io::{read_mesh, write_mesh};
pub use mesh::Mesh;
pub use patch::{check_strict_star_shaped, PatchSpec, PreparedPatch};
pub use sizing::SizeField;
pub use tagging::{
    tag_boundary, tag_boundary_with, tag_dirichlet, tag_flat_face_neumann, FacetTag, TagOptions, TaggedMesh, FLAT_TOL,
    MIN_PATCH_FACETS,
};
