//! Structured half-ball meshes: a half-cube core, blended layers out to a
//! sphere, optional concentric spherical shells, split into simplices and then graded by bisection.

use std::collections::HashMap;

use crate::error::{Error, Result};

use super::mesh::Mesh;
use super::refine::{CurvedEdges, Refiner};
use super::sizing::SizeField;

/// Builder for meshes of `{|x| < radius, x_N > 0}`.
#[derive(Clone, Debug)]
pub struct HalfBallBuilder {
    dim: usize,
    radius: f64,
    h_far: f64,
    core_radius: Option<f64>,
    core_cells: Option<usize>,
    shells: Vec<f64>,
    size: Option<SizeField>,
}

impl HalfBallBuilder {
    pub fn new(radius: f64, h_far: f64) -> Self {
        HalfBallBuilder { dim: 3, radius, h_far, core_radius: None, core_cells: None, shells: Vec::new(), size: None }
    }

    pub fn dim(mut self, dim: usize) -> Self {
        self.dim = dim;
        self
    }

    /// Mapped-cube core of radius `core_radius` surrounded by shells whose
    /// outer radii are `shells` (increasing, last one equal to the domain
    /// radius). Every shell interface is an exactly embedded sphere.
    pub fn shells(mut self, core_radius: f64, shells: Vec<f64>) -> Self {
        self.core_radius = Some(core_radius);
        self.shells = shells;
        self
    }

    /// Number of core cells per half-axis (default derived from `h_far`).
    pub fn core_cells(mut self, n: usize) -> Self {
        self.core_cells = Some(n);
        self
    }

    pub fn size_field(mut self, size: SizeField) -> Self {
        self.size = Some(size);
        self
    }

    fn check(&self) -> Result<(f64, usize)> {
        if self.dim != 2 && self.dim != 3 {
            return Err(Error::InvalidArgument(format!("dimension {} not supported", self.dim)));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {}", self.radius)));
        }
        if !(self.h_far > 0.0) || self.h_far >= self.radius {
            return Err(Error::InvalidArgument(format!(
                "h_far must satisfy 0 < h_far < radius (h_far = {}, radius = {})",
                self.h_far, self.radius
            )));
        }
        let core = self.core_radius.unwrap_or(self.radius);
        let mut prev = core;
        for &s in &self.shells {
            if s <= prev {
                return Err(Error::InvalidArgument("shell radii must increase beyond the core radius".into()));
            }
            prev = s;
        }
        if (prev - self.radius).abs() > 1e-12 * self.radius {
            return Err(Error::InvalidArgument("outermost shell must coincide with the domain radius".into()));
        }
        let n = self
            .core_cells
            .unwrap_or_else(|| ((2f64.sqrt() * CUBE_FRACTION * core / self.h_far).ceil() as usize).max(1));
        Ok((core, n))
    }

    pub fn build(&self) -> Result<Mesh> {
        Ok(self.build_with_surfaces()?.0)
    }

    pub(crate) fn build_with_surfaces(&self) -> Result<(Mesh, CurvedEdges)> {
        let (core, n) = self.check()?;
        // transition layers: radial spacing at the face centres matches the cube spacing
        let layers = ((n as f64) * (1.0 - CUBE_FRACTION) / CUBE_FRACTION).ceil().max(1.0) as usize;
        let levels = levels_for(core, layers, &self.shells);
        let (coords, cells, curved) = if self.dim == 3 { structured_3d(n, &levels) } else { structured_2d(n, &levels) };
        let mesh = Mesh::new(self.dim, coords, cells)?;
        let Some(size) = &self.size else {
            return Ok((mesh, curved));
        };
        let mut r = Refiner::from_mesh(mesh, curved);
        r.run(|r, c, len, _| {
            let cell = r.cell(c);
            let dim = cell.len() - 1;
            let mut centroid = [0.0; 3];
            let mut h = f64::INFINITY;
            for &v in cell {
                let p = r.vertex(v);
                h = h.min(size.at(p));
                for k in 0..dim {
                    centroid[k] += p[k] / cell.len() as f64;
                }
            }
            h = h.min(size.at(&centroid[..dim]));
            len > h
        })?;
        r.finish()
    }
}

/// Half-ball mesh with optional grading toward the origin: the target size
/// is `h_far` far away and `h_far / grading_ratio` at the origin.
pub fn build_half_ball_mesh(radius: f64, h_far: f64, grading_ratio: f64) -> Result<Mesh> {
    build_half_ball_mesh_dim(3, radius, h_far, grading_ratio)
}

pub fn build_half_ball_mesh_dim(dim: usize, radius: f64, h_far: f64, grading_ratio: f64) -> Result<Mesh> {
    if !(grading_ratio >= 1.0) {
        return Err(Error::InvalidArgument(format!("grading ratio must be >= 1, got {grading_ratio}")));
    }
    let mut b = HalfBallBuilder::new(radius, h_far).dim(dim);
    if grading_ratio > 1.0 {
        b = b.size_field(SizeField::uniform(h_far).with_origin(h_far / grading_ratio, 0.5));
    }
    b.build()
}

/// Surfaces between the inner half-cube and the outer sphere: blends of the
/// cube surface and the core sphere, then concentric spheres.
#[derive(Clone, Copy, Debug)]
enum Level {
    Blend { a: f64, r: f64, t: f64 },
    Sphere(f64),
}

impl Level {
    /// Position of the surface point with max-norm-1 lattice direction `p`.
    fn place(self, p: &[f64]) -> Vec<f64> {
        let e = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        match self {
            Level::Blend { a, t, .. } if t == 0.0 => p.iter().map(|x| a * x).collect(),
            Level::Blend { a, r, t } => p.iter().map(|x| (1.0 - t) * a * x + t * r * x / e).collect(),
            Level::Sphere(rho) => p.iter().map(|x| rho * x / e).collect(),
        }
    }

    fn sphere(self) -> Option<f64> {
        match self {
            Level::Blend { r, t, .. } if t == 1.0 => Some(r),
            Level::Blend { .. } => None,
            Level::Sphere(rho) => Some(rho),
        }
    }
}

/// Inner half-cube half-width relative to the core radius; below 1/√3 so the
/// cube corners stay strictly inside the core sphere.
const CUBE_FRACTION: f64 = 0.5;

fn levels_for(core: f64, layers: usize, shells: &[f64]) -> Vec<Level> {
    let a = CUBE_FRACTION * core;
    let mut levels: Vec<Level> =
        (0..=layers).map(|k| Level::Blend { a, r: core, t: k as f64 / layers as f64 }).collect();
    levels.extend(shells.iter().map(|&r| Level::Sphere(r)));
    levels
}

/// Splits a quad (cyclic order) along the diagonal through its smallest
/// global vertex index, so that neighbours agree on the split.
fn quad_triangles(q: [usize; 4]) -> [[usize; 3]; 2] {
    let m = (0..4).min_by_key(|&i| q[i]).unwrap();
    if m % 2 == 0 {
        [[q[0], q[1], q[2]], [q[0], q[2], q[3]]]
    } else {
        [[q[0], q[1], q[3]], [q[1], q[2], q[3]]]
    }
}

fn push_hex(coords: &mut Vec<f64>, cells: &mut Vec<usize>, h: [usize; 8]) {
    let mut c = [0.0; 3];
    for &v in &h {
        for k in 0..3 {
            c[k] += coords[3 * v + k] / 8.0;
        }
    }
    let centre = coords.len() / 3;
    coords.extend_from_slice(&c);
    const FACES: [[usize; 4]; 6] = [[0, 1, 2, 3], [4, 5, 6, 7], [0, 1, 5, 4], [1, 2, 6, 5], [2, 3, 7, 6], [3, 0, 4, 7]];
    for f in FACES {
        for t in quad_triangles([h[f[0]], h[f[1]], h[f[2]], h[f[3]]]) {
            cells.extend_from_slice(&[centre, t[0], t[1], t[2]]);
        }
    }
}

fn push_quad(coords: &mut Vec<f64>, cells: &mut Vec<usize>, q: [usize; 4]) {
    let mut c = [0.0; 2];
    for &v in &q {
        for k in 0..2 {
            c[k] += coords[2 * v + k] / 4.0;
        }
    }
    let centre = coords.len() / 2;
    coords.extend_from_slice(&c);
    for i in 0..4 {
        cells.extend_from_slice(&[centre, q[i], q[(i + 1) % 4]]);
    }
}

fn structured_3d(n: usize, levels: &[Level]) -> (Vec<f64>, Vec<usize>, CurvedEdges) {
    let ni = n as i64;
    let nf = n as f64;
    let w = 2 * n + 1;
    let lid = |i: i64, j: i64, k: i64| -> usize { ((k as usize) * w + (j + ni) as usize) * w + (i + ni) as usize };
    let mut coords = Vec::new();
    for k in 0..=ni {
        for j in -ni..=ni {
            for i in -ni..=ni {
                coords.extend(levels[0].place(&[i as f64 / nf, j as f64 / nf, k as f64 / nf]));
            }
        }
    }

    // Surface quads of the half-cube (top face and four sides), cyclic order.
    let mut quads: Vec<[(i64, i64, i64); 4]> = Vec::new();
    for j in -ni..ni {
        for i in -ni..ni {
            quads.push([(i, j, ni), (i + 1, j, ni), (i + 1, j + 1, ni), (i, j + 1, ni)]);
        }
    }
    for k in 0..ni {
        for t in -ni..ni {
            quads.push([(ni, t, k), (ni, t + 1, k), (ni, t + 1, k + 1), (ni, t, k + 1)]);
            quads.push([(-ni, t, k), (-ni, t + 1, k), (-ni, t + 1, k + 1), (-ni, t, k + 1)]);
            quads.push([(t, ni, k), (t + 1, ni, k), (t + 1, ni, k + 1), (t, ni, k + 1)]);
            quads.push([(t, -ni, k), (t + 1, -ni, k), (t + 1, -ni, k + 1), (t, -ni, k + 1)]);
        }
    }
    let mut surf: Vec<(i64, i64, i64)> = quads.iter().flatten().copied().collect();
    surf.sort_unstable();
    surf.dedup();
    let sidx: HashMap<(i64, i64, i64), usize> = surf.iter().enumerate().map(|(s, &p)| (p, s)).collect();
    let n_lattice = coords.len() / 3;
    for level in &levels[1..] {
        for &(i, j, k) in &surf {
            coords.extend(level.place(&[i as f64 / nf, j as f64 / nf, k as f64 / nf]));
        }
    }
    let vid = |level: usize, p: (i64, i64, i64)| -> usize {
        if level == 0 {
            lid(p.0, p.1, p.2)
        } else {
            n_lattice + (level - 1) * surf.len() + sidx[&p]
        }
    };

    let mut cells = Vec::new();
    for k in 0..ni {
        for j in -ni..ni {
            for i in -ni..ni {
                let h = [
                    lid(i, j, k),
                    lid(i + 1, j, k),
                    lid(i + 1, j + 1, k),
                    lid(i, j + 1, k),
                    lid(i, j, k + 1),
                    lid(i + 1, j, k + 1),
                    lid(i + 1, j + 1, k + 1),
                    lid(i, j + 1, k + 1),
                ];
                push_hex(&mut coords, &mut cells, h);
            }
        }
    }
    for l in 0..levels.len() - 1 {
        for q in &quads {
            let h = [
                vid(l, q[0]),
                vid(l, q[1]),
                vid(l, q[2]),
                vid(l, q[3]),
                vid(l + 1, q[0]),
                vid(l + 1, q[1]),
                vid(l + 1, q[2]),
                vid(l + 1, q[3]),
            ];
            push_hex(&mut coords, &mut cells, h);
        }
    }
    let mut curved = CurvedEdges::default();
    for (l, level) in levels.iter().enumerate() {
        if let Some(rho) = level.sphere() {
            for q in &quads {
                for t in quad_triangles([vid(l, q[0]), vid(l, q[1]), vid(l, q[2]), vid(l, q[3])]) {
                    curved.add_surface_facet(rho, &t);
                }
            }
        }
    }
    (coords, cells, curved)
}

fn structured_2d(n: usize, levels: &[Level]) -> (Vec<f64>, Vec<usize>, CurvedEdges) {
    let ni = n as i64;
    let nf = n as f64;
    let w = 2 * n + 1;
    let lid = |i: i64, k: i64| -> usize { (k as usize) * w + (i + ni) as usize };
    let mut coords = Vec::new();
    for k in 0..=ni {
        for i in -ni..=ni {
            coords.extend(levels[0].place(&[i as f64 / nf, k as f64 / nf]));
        }
    }
    // Boundary nodes of the half-square from (n, 0) over the top to (-n, 0).
    let mut surf: Vec<(i64, i64)> = (0..ni).map(|k| (ni, k)).collect();
    surf.extend((-ni..=ni).rev().map(|i| (i, ni)));
    surf.extend((0..ni).rev().map(|k| (-ni, k)));
    let n_lattice = coords.len() / 2;
    for level in &levels[1..] {
        for &(i, k) in &surf {
            coords.extend(level.place(&[i as f64 / nf, k as f64 / nf]));
        }
    }
    let vid = |level: usize, s: usize| -> usize {
        if level == 0 {
            lid(surf[s].0, surf[s].1)
        } else {
            n_lattice + (level - 1) * surf.len() + s
        }
    };
    let mut cells = Vec::new();
    for k in 0..ni {
        for i in -ni..ni {
            push_quad(&mut coords, &mut cells, [lid(i, k), lid(i + 1, k), lid(i + 1, k + 1), lid(i, k + 1)]);
        }
    }
    for l in 0..levels.len() - 1 {
        for s in 0..surf.len() - 1 {
            push_quad(&mut coords, &mut cells, [vid(l, s), vid(l, s + 1), vid(l + 1, s + 1), vid(l + 1, s)]);
        }
    }
    let mut curved = CurvedEdges::default();
    for (l, level) in levels.iter().enumerate() {
        if let Some(rho) = level.sphere() {
            for s in 0..surf.len() - 1 {
                curved.add_surface_facet(rho, &[vid(l, s), vid(l, s + 1)]);
            }
        }
    }
    (coords, cells, curved)
}

/// Curved-surface data for the outer sphere of an existing half-ball mesh.
fn outer_sphere_surfaces(mesh: &Mesh) -> CurvedEdges {
    let r_out =
        (0..mesh.n_vertices()).map(|v| mesh.vertex(v).iter().map(|x| x * x).sum::<f64>().sqrt()).fold(0.0, f64::max);
    let on = |v: usize| {
        let r = mesh.vertex(v).iter().map(|x| x * x).sum::<f64>().sqrt();
        (r - r_out).abs() <= 1e-9 * r_out
    };
    let mut curved = CurvedEdges::default();
    for f in 0..mesh.n_facets() {
        let fv = mesh.facet(f);
        if fv.iter().all(|&v| on(v)) {
            curved.add_surface_facet(r_out, fv);
        }
    }
    curved
}

/// Bisects every cell that comes within `L / factor` of the origin (L the
/// mesh radius) until its longest edge is halved; conformity is restored.
pub fn refine_toward_origin(mesh: &Mesh, factor: f64) -> Result<Mesh> {
    if !(factor >= 1.0) {
        return Err(Error::InvalidArgument(format!("refinement factor must be >= 1, got {factor}")));
    }
    if factor == 1.0 {
        return Ok(mesh.clone());
    }
    let radius =
        (0..mesh.n_vertices()).map(|v| mesh.vertex(v).iter().map(|x| x * x).sum::<f64>().sqrt()).fold(0.0, f64::max);
    let reach = radius / factor;
    let curved = outer_sphere_surfaces(mesh);
    let mut r = Refiner::from_mesh(mesh.clone(), curved).with_min_volume(1e-14);
    for c in 0..mesh.n_cells() {
        let close = mesh.cell(c).iter().any(|&v| mesh.vertex(v).iter().map(|x| x * x).sum::<f64>().sqrt() < reach);
        if close {
            r.set_target(c, 0.5 * mesh.cell_longest_edge(c) * (1.0 + 1e-12));
        }
    }
    r.run(|_, _, len, target| len > target)?;
    Ok(r.finish()?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn half_ball_volume_converges_quadratically() {
        let exact = 2.0 * PI / 3.0;
        let coarse = HalfBallBuilder::new(1.0, 0.4).build().unwrap();
        let fine = HalfBallBuilder::new(1.0, 0.2).build().unwrap();
        let e1 = (coarse.volume() - exact).abs();
        let e2 = (fine.volume() - exact).abs();
        assert!(e2 < 0.02 * exact);
        assert!(e1 / e2 >= 3.0, "ratio {}", e1 / e2);
    }

    #[test]
    fn half_disk_area() {
        let m = build_half_ball_mesh_dim(2, 1.0, 0.05, 1.0).unwrap();
        assert!((m.volume() - PI / 2.0).abs() < 2e-3);
    }

    #[test]
    fn shells_embed_spheres() {
        let m = HalfBallBuilder::new(4.0, 0.5).shells(1.0, vec![2.0, 4.0]).core_cells(3).build().unwrap();
        let on_two = (0..m.n_vertices())
            .filter(|&v| (m.vertex(v).iter().map(|x| x * x).sum::<f64>().sqrt() - 2.0).abs() < 1e-12)
            .count();
        assert!(on_two > 20);
        assert!((m.volume() - 2.0 * PI / 3.0 * 64.0).abs() < 0.1 * 2.0 * PI / 3.0 * 64.0);
    }

    #[test]
    fn graded_refinement_projects_new_boundary_vertices() {
        let size = SizeField::uniform(0.5).with_origin(0.1, 0.2);
        let m = HalfBallBuilder::new(1.0, 0.5).size_field(size).build().unwrap();
        for f in 0..m.n_facets() {
            let b = m.facet_barycenter(f);
            if b[2] > 1e-12 {
                for &v in m.facet(f) {
                    let r = m.vertex(v).iter().map(|x| x * x).sum::<f64>().sqrt();
                    assert!((r - 1.0).abs() < 1e-12, "outer vertex off sphere: {r}");
                }
            }
        }
    }

    #[test]
    fn structured_mesh_has_no_slivers() {
        let m = HalfBallBuilder::new(1.0, 0.15).build().unwrap();
        assert!(m.min_angle_deg() > 5.0, "min angle {}", m.min_angle_deg());
    }

    #[test]
    fn origin_refinement_keeps_sphere_and_volume() {
        let m = HalfBallBuilder::new(1.0, 0.3).build().unwrap();
        let r = refine_toward_origin(&m, 4.0).unwrap();
        assert!(r.n_cells() > m.n_cells());
        assert!((r.volume() - m.volume()).abs() < 0.02 * m.volume());
        for f in 0..r.n_facets() {
            if r.facet_barycenter(f)[2] > 1e-12 {
                for &v in r.facet(f) {
                    let rad = r.vertex(v).iter().map(|x| x * x).sum::<f64>().sqrt();
                    assert!((rad - 1.0).abs() < 1e-12);
                }
            }
        }
    }
}
