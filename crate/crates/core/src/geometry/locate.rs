use rstar::primitives::{GeomWithData, Rectangle};
use rstar::RTree;

use super::mesh::Mesh;
use super::simplex;

type Entry = GeomWithData<Rectangle<[f64; 3]>, usize>;

/// Bounding-box tree over the cells of a mesh.
#[derive(Debug)]
pub(crate) struct Locator {
    tree: RTree<Entry>,
}

/// Barycentric slack accepted when a point sits on a shared face.
const BARY_TOL: f64 = 1e-10;

fn lift(p: &[f64]) -> [f64; 3] {
    [p[0], p[1], if p.len() > 2 { p[2] } else { 0.0 }]
}

impl Locator {
    pub(crate) fn build(mesh: &Mesh) -> Self {
        let mut extent: f64 = 0.0;
        for x in mesh.coords() {
            extent = extent.max(x.abs());
        }
        let pad = 1e-12 * extent.max(1.0);
        let entries: Vec<Entry> = (0..mesh.n_cells())
            .map(|c| {
                let mut lo = [f64::INFINITY; 3];
                let mut hi = [f64::NEG_INFINITY; 3];
                for &v in mesh.cell(c) {
                    let p = lift(mesh.vertex(v));
                    for k in 0..3 {
                        lo[k] = lo[k].min(p[k] - pad);
                        hi[k] = hi[k].max(p[k] + pad);
                    }
                }
                GeomWithData::new(Rectangle::from_corners(lo, hi), c)
            })
            .collect();
        Locator { tree: RTree::bulk_load(entries) }
    }

    /// Best containing cell: among candidates, the one whose smallest
    /// barycentric coordinate is largest (ties broken by cell index).
    pub(crate) fn locate(&self, mesh: &Mesh, p: &[f64]) -> Option<(usize, [f64; 4])> {
        let q = lift(p);
        let dim = mesh.dim();
        let mut best: Option<(usize, [f64; 4], f64)> = None;
        for e in self.tree.locate_all_at_point(&q) {
            let c = e.data;
            let b = simplex::barycentric(dim, &mesh.cell_points(c), p);
            let worst = b[..=dim].iter().copied().fold(f64::INFINITY, f64::min);
            if worst < -BARY_TOL {
                continue;
            }
            let better = match &best {
                None => true,
                Some((bc, _, bw)) => worst > *bw || (worst == *bw && c < *bc),
            };
            if better {
                best = Some((c, b, worst));
            }
        }
        best.map(|(c, b, _)| (c, b))
    }
}
