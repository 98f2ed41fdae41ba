use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::mesh::Mesh;
use super::patch::PatchSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FacetTag {
    Dirichlet,
    Neumann,
    ArtificialOuter,
}

impl FacetTag {
    pub fn code(self) -> u8 {
        match self {
            FacetTag::Dirichlet => 0,
            FacetTag::Neumann => 1,
            FacetTag::ArtificialOuter => 2,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(FacetTag::Dirichlet),
            1 => Ok(FacetTag::Neumann),
            2 => Ok(FacetTag::ArtificialOuter),
            _ => Err(Error::Parse(format!("unknown facet tag {code}"))),
        }
    }
}

/// Tolerance for "lies in the flat face x_N = 0".
pub const FLAT_TOL: f64 = 1e-12;

/// Minimum number of facets that must resolve a nonempty patch.
pub const MIN_PATCH_FACETS: usize = 8;

/// Mesh plus a boundary-condition tag per boundary facet.
#[derive(Clone, Debug)]
pub struct TaggedMesh {
    mesh: Arc<Mesh>,
    tags: Vec<FacetTag>,
    epsilon: f64,
}

impl TaggedMesh {
    pub fn from_parts(mesh: Arc<Mesh>, tags: Vec<FacetTag>, epsilon: f64) -> Result<Self> {
        if tags.len() != mesh.n_facets() {
            return Err(Error::InvalidArgument(format!("{} tags for {} boundary facets", tags.len(), mesh.n_facets())));
        }
        if !(epsilon >= 0.0) {
            return Err(Error::InvalidArgument(format!("epsilon must be >= 0, got {epsilon}")));
        }
        let dim = mesh.dim();
        for (f, t) in tags.iter().enumerate() {
            if *t == FacetTag::Neumann && mesh.facet(f).iter().any(|&v| mesh.vertex(v)[dim - 1].abs() > FLAT_TOL) {
                return Err(Error::InvalidArgument(format!("Neumann facet {f} is not in the flat face")));
            }
        }
        Ok(TaggedMesh { mesh, tags, epsilon })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn tags(&self) -> &[FacetTag] {
        &self.tags
    }

    pub fn tag(&self, f: usize) -> FacetTag {
        self.tags[f]
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn count(&self, tag: FacetTag) -> usize {
        self.tags.iter().filter(|&&t| t == tag).count()
    }

    pub fn facets_with(&self, tag: FacetTag) -> impl Iterator<Item = usize> + '_ {
        self.tags.iter().enumerate().filter(move |(_, &t)| t == tag).map(|(f, _)| f)
    }

    /// Total measure of the facets carrying `tag`.
    pub fn area(&self, tag: FacetTag) -> f64 {
        self.facets_with(tag).map(|f| self.mesh.facet_measure(f)).sum()
    }

    /// Vertices lying on at least one Dirichlet or artificial-outer facet.
    pub fn constrained_vertices(&self) -> Vec<bool> {
        let mut out = vec![false; self.mesh.n_vertices()];
        for (f, t) in self.tags.iter().enumerate() {
            if *t != FacetTag::Neumann {
                for &v in self.mesh.facet(f) {
                    out[v] = true;
                }
            }
        }
        out
    }
}

fn is_flat(mesh: &Mesh, f: usize) -> bool {
    let dim = mesh.dim();
    mesh.facet(f).iter().all(|&v| mesh.vertex(v)[dim - 1].abs() <= FLAT_TOL)
}

fn flat_point(mesh: &Mesh, b: [f64; 3]) -> [f64; 2] {
    if mesh.dim() == 3 {
        [b[0], b[1]]
    } else {
        [b[0], 0.0]
    }
}

/// Options for [`tag_boundary_with`].
#[derive(Clone, Copy, Debug, Default)]
pub struct TagOptions {
    /// Tag curved (non-flat) boundary facets as an artificial truncation.
    pub artificial_outer: bool,
}

/// Neumann on flat facets whose barycenter lies in `epsilon · patch`,
/// Dirichlet elsewhere.
pub fn tag_boundary(mesh: &Arc<Mesh>, patch: &PatchSpec, epsilon: f64) -> Result<TaggedMesh> {
    tag_boundary_with(mesh, patch, epsilon, TagOptions::default())
}

pub fn tag_boundary_with(mesh: &Arc<Mesh>, patch: &PatchSpec, epsilon: f64, opts: TagOptions) -> Result<TaggedMesh> {
    let prepared = patch.prepare()?;
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon must be finite and >= 0, got {epsilon}")));
    }
    if mesh.dim() == 2 && !matches!(patch, PatchSpec::Disk { .. }) {
        return Err(Error::Unsupported("only disk (interval) patches exist in 2D".into()));
    }
    let flat: Vec<usize> = (0..mesh.n_facets()).filter(|&f| is_flat(mesh, f)).collect();
    if flat.is_empty() {
        return Err(Error::InvalidArgument("mesh has no flat face in {x_N = 0}".into()));
    }
    let mut face_radius: f64 = 0.0;
    for &f in &flat {
        for &v in mesh.facet(f) {
            let p = mesh.vertex(v);
            face_radius = face_radius.max(p[..mesh.dim() - 1].iter().map(|x| x * x).sum::<f64>().sqrt());
        }
    }
    let patch_radius = epsilon * patch.circumradius();
    if patch_radius >= face_radius {
        return Err(Error::PatchOverflow { patch_radius, face_radius });
    }
    let other = if opts.artificial_outer { FacetTag::ArtificialOuter } else { FacetTag::Dirichlet };
    let mut tags = vec![FacetTag::Dirichlet; mesh.n_facets()];
    let flat_set: std::collections::HashSet<usize> = flat.iter().copied().collect();
    for (f, t) in tags.iter_mut().enumerate() {
        if !flat_set.contains(&f) {
            *t = other;
        }
    }
    let mut n_neumann = 0;
    if epsilon > 0.0 {
        for &f in &flat {
            let p = flat_point(mesh, mesh.facet_barycenter(f));
            if prepared.contains([p[0] / epsilon, p[1] / epsilon]) {
                tags[f] = FacetTag::Neumann;
                n_neumann += 1;
            }
        }
        if n_neumann < MIN_PATCH_FACETS {
            return Err(Error::UnderResolvedPatch { found: n_neumann, required: MIN_PATCH_FACETS });
        }
    }
    TaggedMesh::from_parts(mesh.clone(), tags, epsilon)
}

/// Every facet of the flat face Neumann, the rest Dirichlet.
pub fn tag_flat_face_neumann(mesh: &Arc<Mesh>) -> Result<TaggedMesh> {
    let tags =
        (0..mesh.n_facets()).map(|f| if is_flat(mesh, f) { FacetTag::Neumann } else { FacetTag::Dirichlet }).collect();
    TaggedMesh::from_parts(mesh.clone(), tags, f64::INFINITY)
}

/// All boundary facets Dirichlet (epsilon = 0).
pub fn tag_dirichlet(mesh: &Arc<Mesh>) -> TaggedMesh {
    TaggedMesh { mesh: mesh.clone(), tags: vec![FacetTag::Dirichlet; mesh.n_facets()], epsilon: 0.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::HalfBallBuilder;

    #[test]
    fn zero_epsilon_has_no_neumann() {
        let m = Arc::new(HalfBallBuilder::new(1.0, 0.4).build().unwrap());
        let t = tag_boundary(&m, &PatchSpec::disk(1.0), 0.0).unwrap();
        assert_eq!(t.count(FacetTag::Neumann), 0);
        assert_eq!(t.count(FacetTag::Dirichlet), m.n_facets());
    }

    #[test]
    fn overflow_and_under_resolution() {
        let m = Arc::new(HalfBallBuilder::new(1.0, 0.4).build().unwrap());
        assert!(matches!(tag_boundary(&m, &PatchSpec::disk(1.0), 1.5), Err(Error::PatchOverflow { .. })));
        assert!(matches!(tag_boundary(&m, &PatchSpec::disk(1.0), 0.05), Err(Error::UnderResolvedPatch { .. })));
    }

    #[test]
    fn artificial_outer_partition() {
        let m = Arc::new(HalfBallBuilder::new(1.0, 0.2).build().unwrap());
        let t = tag_boundary_with(&m, &PatchSpec::disk(1.0), 0.4, TagOptions { artificial_outer: true }).unwrap();
        let total = t.count(FacetTag::Dirichlet) + t.count(FacetTag::Neumann) + t.count(FacetTag::ArtificialOuter);
        assert_eq!(total, m.n_facets());
        assert!(t.count(FacetTag::ArtificialOuter) > 0);
    }
}
