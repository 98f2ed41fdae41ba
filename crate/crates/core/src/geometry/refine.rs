//! Conforming longest-edge bisection with radial projection of new
//! vertices that land on spherical surfaces of the mesh.

use fnv::FnvHashMap;

use crate::error::{Error, Result};

use super::mesh::Mesh;
use super::simplex;

fn key(a: usize, b: usize) -> u64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    ((lo as u64) << 32) | hi as u64
}

fn face_key(f: &[usize]) -> [usize; 3] {
    let mut k = [usize::MAX; 3];
    k[..f.len()].copy_from_slice(f);
    k[..f.len()].sort_unstable();
    k
}

/// Facets lying on spheres centred at the origin (outer boundary or embedded
/// interfaces). Kept in step with the actual bisections so that a new vertex
/// is projected exactly when its edge lies on one of these facets.
#[derive(Clone, Debug, Default)]
pub(crate) struct CurvedEdges {
    faces: FnvHashMap<[usize; 3], f64>,
    edges: FnvHashMap<u64, (f64, usize)>,
}

impl CurvedEdges {
    /// Registers a surface triangle (3D) or segment (2D) on the sphere of
    /// the given radius.
    pub(crate) fn add_surface_facet(&mut self, radius: f64, facet: &[usize]) {
        if self.faces.insert(face_key(facet), radius).is_some() {
            return;
        }
        for (a, b) in facet_edges(facet) {
            self.edges.entry(key(a, b)).or_insert((radius, 0)).1 += 1;
        }
    }

    fn remove_facet(&mut self, facet: &[usize]) -> Option<f64> {
        let r = self.faces.remove(&face_key(facet))?;
        for (a, b) in facet_edges(facet) {
            let k = key(a, b);
            if let Some(e) = self.edges.get_mut(&k) {
                e.1 -= 1;
                if e.1 == 0 {
                    self.edges.remove(&k);
                }
            }
        }
        Some(r)
    }

    fn edge_radius(&self, a: usize, b: usize) -> Option<f64> {
        self.edges.get(&key(a, b)).map(|e| e.0)
    }

    /// Splits the registered facet `facet` (if any) along edge (a, b) at m.
    fn split_facet(&mut self, facet: &[usize], a: usize, b: usize, m: usize) {
        let Some(r) = self.remove_facet(facet) else {
            return;
        };
        let mut first = facet.to_vec();
        let mut second = facet.to_vec();
        for (x, y) in first.iter_mut().zip(second.iter_mut()) {
            if *x == b {
                *x = m;
            }
            if *y == a {
                *y = m;
            }
        }
        self.add_surface_facet(r, &first);
        self.add_surface_facet(r, &second);
    }
}

fn facet_edges(f: &[usize]) -> Vec<(usize, usize)> {
    if f.len() == 2 {
        vec![(f[0], f[1])]
    } else {
        (0..f.len()).map(|i| (f[i], f[(i + 1) % f.len()])).collect()
    }
}

/// Mutable working state of a refinement run.
pub(crate) struct Refiner {
    dim: usize,
    coords: Vec<f64>,
    cells: Vec<usize>,
    target: Vec<f64>,
    curved: CurvedEdges,
    mids: FnvHashMap<u64, usize>,
    min_volume: f64,
}

impl Refiner {
    pub(crate) fn new(dim: usize, coords: Vec<f64>, cells: Vec<usize>, curved: CurvedEdges) -> Self {
        let n = cells.len() / (dim + 1);
        Refiner {
            dim,
            coords,
            cells,
            target: vec![f64::INFINITY; n],
            curved,
            mids: FnvHashMap::default(),
            min_volume: 0.0,
        }
    }

    pub(crate) fn from_mesh(mesh: Mesh, curved: CurvedEdges) -> Self {
        let (dim, coords, cells) = mesh.into_parts();
        Refiner::new(dim, coords, cells, curved)
    }

    /// Cells whose volume falls below this abort the run.
    pub(crate) fn with_min_volume(mut self, v: f64) -> Self {
        self.min_volume = v;
        self
    }

    pub(crate) fn n_cells(&self) -> usize {
        self.cells.len() / (self.dim + 1)
    }

    pub(crate) fn cell(&self, c: usize) -> &[usize] {
        let n = self.dim + 1;
        &self.cells[c * n..(c + 1) * n]
    }

    pub(crate) fn vertex(&self, v: usize) -> &[f64] {
        &self.coords[v * self.dim..(v + 1) * self.dim]
    }

    pub(crate) fn set_target(&mut self, c: usize, t: f64) {
        self.target[c] = t;
    }

    /// Longest edge of a cell under the total order (length², lo, hi).
    fn longest(&self, c: usize) -> (usize, usize, f64) {
        let cell = self.cell(c);
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for &(i, j) in simplex::local_edges(cell.len()) {
            let (a, b) = (cell[i], cell[j]);
            let l2 = simplex::dist2(self.vertex(a), self.vertex(b));
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let cand = (l2, lo, hi, i, j);
            best = match best {
                None => Some(cand),
                Some(bst) => {
                    if (cand.0, cand.1, cand.2) > (bst.0, bst.1, bst.2) {
                        Some(cand)
                    } else {
                        Some(bst)
                    }
                }
            };
        }
        let b = best.unwrap();
        (b.3, b.4, b.0.sqrt())
    }

    fn has_hanging(&self, c: usize) -> bool {
        let cell = self.cell(c);
        simplex::local_edges(cell.len()).iter().any(|&(i, j)| self.mids.contains_key(&key(cell[i], cell[j])))
    }

    fn midpoint(&mut self, a: usize, b: usize) -> usize {
        let k = key(a, b);
        if let Some(&m) = self.mids.get(&k) {
            return m;
        }
        let dim = self.dim;
        let mut p: Vec<f64> = (0..dim).map(|d| 0.5 * (self.coords[a * dim + d] + self.coords[b * dim + d])).collect();
        let m = self.coords.len() / dim;
        if let Some(r) = self.curved.edge_radius(a, b) {
            let n = simplex::norm(&p);
            for x in p.iter_mut() {
                *x *= r / n;
            }
        }
        self.coords.extend_from_slice(&p);
        self.mids.insert(k, m);
        m
    }

    fn bisect(&mut self, c: usize, i: usize, j: usize) -> Result<usize> {
        let nv = self.dim + 1;
        let (a, b) = (self.cells[c * nv + i], self.cells[c * nv + j]);
        let m = self.midpoint(a, b);
        let cell = self.cell(c).to_vec();
        for skip in 0..nv {
            if skip != i && skip != j {
                let face: Vec<usize> = (0..nv).filter(|&k| k != skip).map(|k| cell[k]).collect();
                self.curved.split_facet(&face, a, b, m);
            }
        }
        let mut second: Vec<usize> = self.cell(c).to_vec();
        second[i] = m;
        self.cells[c * nv + j] = m;
        self.cells.extend_from_slice(&second);
        let t = self.target[c];
        self.target.push(t);
        let new = self.n_cells() - 1;
        for cc in [c, new] {
            let pts: Vec<&[f64]> = self.cell(cc).iter().map(|&v| self.vertex(v)).collect();
            let vol = simplex::signed_volume(self.dim, &pts);
            if vol <= 0.0 {
                return Err(Error::DegenerateCell {
                    cell: cc,
                    volume: vol,
                    min_dihedral_deg: simplex::min_angle_deg(self.dim, &pts),
                });
            }
            if vol < self.min_volume {
                return Err(Error::OverRefinement { volume: vol });
            }
        }
        Ok(new)
    }

    /// Bisects until no cell has a hanging edge and `want` is false for all
    /// cells. `want(refiner, cell, longest_edge, target)` decides whether a
    /// conforming cell still needs splitting.
    pub(crate) fn run<F>(&mut self, want: F) -> Result<usize>
    where
        F: Fn(&Refiner, usize, f64, f64) -> bool,
    {
        let start = self.n_cells();
        loop {
            let mut changed = false;
            let mut stack: Vec<usize> = (0..self.n_cells()).rev().collect();
            while let Some(c) = stack.pop() {
                let (i, j, len) = self.longest(c);
                if self.has_hanging(c) || want(self, c, len, self.target[c]) {
                    let new = self.bisect(c, i, j)?;
                    stack.push(new);
                    stack.push(c);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        self.mids.clear();
        Ok(self.n_cells() - start)
    }

    pub(crate) fn finish(self) -> Result<(Mesh, CurvedEdges)> {
        Ok((Mesh::new(self.dim, self.coords, self.cells)?, self.curved))
    }
}
