use fnv::FnvHashMap as HashMap;
use std::sync::OnceLock;

use crate::error::{Error, Result};

use super::locate::Locator;
use super::simplex;

/// Conforming simplicial mesh (triangles in 2D, tetrahedra in 3D).
///
/// Cells are stored positively oriented; boundary facets are oriented so
/// that their normal points out of the adjacent cell.
#[derive(Debug)]
pub struct Mesh {
    dim: usize,
    coords: Vec<f64>,
    cells: Vec<usize>,
    facets: Vec<usize>,
    facet_cell: Vec<usize>,
    locator: OnceLock<Locator>,
}

impl Clone for Mesh {
    fn clone(&self) -> Self {
        Mesh {
            dim: self.dim,
            coords: self.coords.clone(),
            cells: self.cells.clone(),
            facets: self.facets.clone(),
            facet_cell: self.facet_cell.clone(),
            locator: OnceLock::new(),
        }
    }
}

/// Cells with |signed volume| below this are rejected as degenerate.
const MIN_VOLUME: f64 = 1e-300;

impl Mesh {
    /// Builds a mesh from flat coordinate and connectivity arrays, fixing
    /// cell orientation and extracting the boundary.
    pub fn new(dim: usize, coords: Vec<f64>, mut cells: Vec<usize>) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidArgument(format!("dimension {dim} not supported")));
        }
        if !coords.len().is_multiple_of(dim) || !cells.len().is_multiple_of(dim + 1) {
            return Err(Error::InvalidArgument("ragged coordinate or cell array".into()));
        }
        let nv = coords.len() / dim;
        if let Some(&bad) = cells.iter().find(|&&v| v >= nv) {
            return Err(Error::InvalidArgument(format!("vertex index {bad} out of range ({nv} vertices)")));
        }
        let nc = dim + 1;
        for (c, cell) in cells.chunks_mut(nc).enumerate() {
            let pts: Vec<&[f64]> = cell.iter().map(|&v| &coords[v * dim..(v + 1) * dim]).collect();
            let vol = simplex::signed_volume(dim, &pts);
            if vol.abs() <= MIN_VOLUME || !vol.is_finite() {
                return Err(Error::DegenerateCell {
                    cell: c,
                    volume: vol,
                    min_dihedral_deg: simplex::min_angle_deg(dim, &pts),
                });
            }
            if vol < 0.0 {
                cell.swap(0, 1);
            }
        }
        let (facets, facet_cell) = boundary_of(dim, &cells)?;
        Ok(Mesh { dim, coords, cells, facets, facet_cell, locator: OnceLock::new() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_vertices(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len() / (self.dim + 1)
    }

    pub fn n_facets(&self) -> usize {
        self.facet_cell.len()
    }

    pub fn vertex(&self, v: usize) -> &[f64] {
        &self.coords[v * self.dim..(v + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        let n = self.dim + 1;
        &self.cells[c * n..(c + 1) * n]
    }

    pub fn cells_flat(&self) -> &[usize] {
        &self.cells
    }

    pub fn facet(&self, f: usize) -> &[usize] {
        &self.facets[f * self.dim..(f + 1) * self.dim]
    }

    /// Cell adjacent to boundary facet `f`.
    pub fn facet_cell(&self, f: usize) -> usize {
        self.facet_cell[f]
    }

    pub fn cell_points(&self, c: usize) -> Vec<&[f64]> {
        self.cell(c).iter().map(|&v| self.vertex(v)).collect()
    }

    pub fn cell_volume(&self, c: usize) -> f64 {
        simplex::signed_volume(self.dim, &self.cell_points(c))
    }

    pub fn volume(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.cell_volume(c)).sum()
    }

    pub fn cell_longest_edge(&self, c: usize) -> f64 {
        let cell = self.cell(c);
        simplex::local_edges(cell.len())
            .iter()
            .map(|&(i, j)| simplex::dist2(self.vertex(cell[i]), self.vertex(cell[j])))
            .fold(0.0, f64::max)
            .sqrt()
    }

    pub fn cell_centroid(&self, c: usize) -> [f64; 3] {
        let mut out = [0.0; 3];
        let cell = self.cell(c);
        for &v in cell {
            for (k, x) in self.vertex(v).iter().enumerate() {
                out[k] += x / cell.len() as f64;
            }
        }
        out
    }

    pub fn facet_measure(&self, f: usize) -> f64 {
        let fv = self.facet(f);
        match self.dim {
            2 => simplex::dist2(self.vertex(fv[0]), self.vertex(fv[1])).sqrt(),
            _ => {
                let a = self.vertex(fv[0]);
                let e1 = simplex::sub3(self.vertex(fv[1]), a);
                let e2 = simplex::sub3(self.vertex(fv[2]), a);
                0.5 * simplex::norm(&simplex::cross3(&e1, &e2))
            }
        }
    }

    pub fn facet_barycenter(&self, f: usize) -> [f64; 3] {
        let mut out = [0.0; 3];
        let fv = self.facet(f);
        for &v in fv {
            for (k, x) in self.vertex(v).iter().enumerate() {
                out[k] += x / fv.len() as f64;
            }
        }
        out
    }

    /// Minimum dihedral (3D) or interior (2D) angle over all cells, degrees.
    pub fn min_angle_deg(&self) -> f64 {
        (0..self.n_cells())
            .map(|c| simplex::min_angle_deg(self.dim, &self.cell_points(c)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Stable 64-bit fingerprint of coordinates and connectivity.
    pub fn fingerprint(&self) -> u64 {
        use std::hash::Hasher;
        let mut h = fnv::FnvHasher::default();
        h.write_usize(self.dim);
        for x in &self.coords {
            h.write_u64(x.to_bits());
        }
        for v in &self.cells {
            h.write_usize(*v);
        }
        h.finish()
    }

    pub(crate) fn locator(&self) -> &Locator {
        self.locator.get_or_init(|| Locator::build(self))
    }

    /// Cell containing `p` and the barycentric coordinates of `p` in it.
    pub fn locate(&self, p: &[f64]) -> Option<(usize, [f64; 4])> {
        self.locator().locate(self, p)
    }

    pub(crate) fn into_parts(self) -> (usize, Vec<f64>, Vec<usize>) {
        (self.dim, self.coords, self.cells)
    }
}

fn sorted_key(v: &[usize]) -> [usize; 3] {
    let mut k = [usize::MAX; 3];
    k[..v.len()].copy_from_slice(v);
    k[..v.len()].sort_unstable();
    k
}

/// Facets adjacent to exactly one cell, oriented outward.
fn boundary_of(dim: usize, cells: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    let nc = dim + 1;
    let mut seen: HashMap<[usize; 3], (usize, usize, u8)> =
        HashMap::with_capacity_and_hasher(cells.len(), Default::default());
    for (c, cell) in cells.chunks(nc).enumerate() {
        for skip in 0..nc {
            let face: Vec<usize> = (0..nc).filter(|&i| i != skip).map(|i| cell[i]).collect();
            let e = seen.entry(sorted_key(&face)).or_insert((c, skip, 0));
            e.2 += 1;
            if e.2 > 2 {
                return Err(Error::NotWatertight(format!("facet {face:?} shared by more than two cells")));
            }
        }
    }
    let mut faces: Vec<([usize; 3], usize, usize)> =
        seen.into_iter().filter(|(_, v)| v.2 == 1).map(|(k, v)| (k, v.0, v.1)).collect();
    faces.sort_unstable();
    let mut facets = Vec::with_capacity(faces.len() * dim);
    let mut facet_cell = Vec::with_capacity(faces.len());
    for (_, c, skip) in faces {
        let cell = &cells[c * nc..(c + 1) * nc];
        // Facet opposite vertex `skip` of a positively oriented cell is
        // outward oriented when taken as the even permutation of the rest.
        let mut f: Vec<usize> = (0..nc).filter(|&i| i != skip).map(|i| cell[i]).collect();
        if skip % 2 == 1 {
            f.swap(0, 1);
        }
        facets.extend_from_slice(&f);
        facet_cell.push(c);
    }
    Ok((facets, facet_cell))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_cube() -> Mesh {
        // Kuhn subdivision of the unit cube into 6 tets
        let mut coords = Vec::new();
        for k in 0..2 {
            for j in 0..2 {
                for i in 0..2 {
                    coords.extend_from_slice(&[i as f64, j as f64, k as f64]);
                }
            }
        }
        let cells = vec![0, 1, 3, 7, 0, 1, 5, 7, 0, 2, 3, 7, 0, 2, 6, 7, 0, 4, 5, 7, 0, 4, 6, 7];
        Mesh::new(3, coords, cells).unwrap()
    }

    #[test]
    fn cube_boundary_and_volume() {
        let m = unit_cube();
        assert_eq!(m.n_facets(), 12);
        assert!((m.volume() - 1.0).abs() < 1e-14);
        let area: f64 = (0..m.n_facets()).map(|f| m.facet_measure(f)).sum();
        assert!((area - 6.0).abs() < 1e-14);
    }

    #[test]
    fn facets_point_outward() {
        let m = unit_cube();
        for f in 0..m.n_facets() {
            let fv = m.facet(f);
            let a = m.vertex(fv[0]);
            let n = simplex::cross3(&simplex::sub3(m.vertex(fv[1]), a), &simplex::sub3(m.vertex(fv[2]), a));
            let b = m.facet_barycenter(f);
            let out = [b[0] - 0.5, b[1] - 0.5, b[2] - 0.5];
            assert!(simplex::dot3(&n, &out) > 0.0, "facet {f} inward");
        }
    }

    #[test]
    fn rejects_degenerate_and_out_of_range() {
        let coords = vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1.0, 0.0];
        assert!(matches!(Mesh::new(3, coords.clone(), vec![0, 1, 2, 3]), Err(Error::DegenerateCell { .. })));
        assert!(Mesh::new(3, coords, vec![0, 1, 2, 9]).is_err());
    }

    #[test]
    fn orientation_is_fixed() {
        let coords = vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let m = Mesh::new(3, coords, vec![1, 0, 2, 3]).unwrap();
        assert!(m.cell_volume(0) > 0.0);
    }
}
