//! Small dense helpers for 2- and 3-simplices.

pub(crate) fn sub3(a: &[f64], b: &[f64]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Signed measure of a simplex given its vertex coordinates (dim + 1 points).
pub(crate) fn signed_volume(dim: usize, pts: &[&[f64]]) -> f64 {
    match dim {
        2 => {
            let (a, b, c) = (pts[0], pts[1], pts[2]);
            0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
        }
        3 => {
            let e1 = sub3(pts[1], pts[0]);
            let e2 = sub3(pts[2], pts[0]);
            let e3 = sub3(pts[3], pts[0]);
            dot3(&e1, &cross3(&e2, &e3)) / 6.0
        }
        _ => unreachable!("only 2D and 3D simplices are supported"),
    }
}

/// Gradients of the barycentric coordinates and the (unsigned) measure.
///
/// Row `i` of the result is the gradient of the hat function attached to
/// vertex `i`. Only the first `dim` components of each row are meaningful.
pub(crate) fn barycentric_gradients(dim: usize, pts: &[&[f64]]) -> ([[f64; 3]; 4], f64) {
    let mut grads = [[0.0; 3]; 4];
    match dim {
        2 => {
            let (a, b, c) = (pts[0], pts[1], pts[2]);
            let det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
            // inverse of [[b-a],[c-a]] columns
            let inv = 1.0 / det;
            let g1 = [(c[1] - a[1]) * inv, -(c[0] - a[0]) * inv, 0.0];
            let g2 = [-(b[1] - a[1]) * inv, (b[0] - a[0]) * inv, 0.0];
            grads[1] = g1;
            grads[2] = g2;
            grads[0] = [-g1[0] - g2[0], -g1[1] - g2[1], 0.0];
            (grads, 0.5 * det.abs())
        }
        3 => {
            let e1 = sub3(pts[1], pts[0]);
            let e2 = sub3(pts[2], pts[0]);
            let e3 = sub3(pts[3], pts[0]);
            let c23 = cross3(&e2, &e3);
            let c31 = cross3(&e3, &e1);
            let c12 = cross3(&e1, &e2);
            let det = dot3(&e1, &c23);
            let inv = 1.0 / det;
            for k in 0..3 {
                grads[1][k] = c23[k] * inv;
                grads[2][k] = c31[k] * inv;
                grads[3][k] = c12[k] * inv;
                grads[0][k] = -(grads[1][k] + grads[2][k] + grads[3][k]);
            }
            (grads, det.abs() / 6.0)
        }
        _ => unreachable!("only 2D and 3D simplices are supported"),
    }
}

/// Barycentric coordinates of `p` with respect to the simplex `pts`.
pub(crate) fn barycentric(dim: usize, pts: &[&[f64]], p: &[f64]) -> [f64; 4] {
    let (grads, _) = barycentric_gradients(dim, pts);
    let mut out = [0.0; 4];
    let mut rest = 1.0;
    for i in 1..=dim {
        let mut s = 0.0;
        for k in 0..dim {
            s += grads[i][k] * (p[k] - pts[0][k]);
        }
        out[i] = s;
        rest -= s;
    }
    out[0] = rest;
    out
}

/// Smallest dihedral angle of a tetrahedron (3D) or smallest interior angle
/// of a triangle (2D), in degrees.
pub(crate) fn min_angle_deg(dim: usize, pts: &[&[f64]]) -> f64 {
    match dim {
        2 => {
            let mut best = f64::INFINITY;
            for i in 0..3 {
                let a = pts[i];
                let b = pts[(i + 1) % 3];
                let c = pts[(i + 2) % 3];
                let u = [b[0] - a[0], b[1] - a[1]];
                let v = [c[0] - a[0], c[1] - a[1]];
                let cosang = (u[0] * v[0] + u[1] * v[1])
                    / ((u[0] * u[0] + u[1] * u[1]).sqrt() * (v[0] * v[0] + v[1] * v[1]).sqrt());
                best = best.min(cosang.clamp(-1.0, 1.0).acos().to_degrees());
            }
            best
        }
        3 => {
            // dihedral angle along edge (i, j) between faces (i, j, k) and (i, j, l)
            let mut best = f64::INFINITY;
            let pairs = [(0, 1, 2, 3), (0, 2, 1, 3), (0, 3, 1, 2), (1, 2, 0, 3), (1, 3, 0, 2), (2, 3, 0, 1)];
            for &(i, j, k, l) in &pairs {
                let e = sub3(pts[j], pts[i]);
                let nk = cross3(&e, &sub3(pts[k], pts[i]));
                let nl = cross3(&e, &sub3(pts[l], pts[i]));
                let den = norm(&nk) * norm(&nl);
                if den == 0.0 {
                    return 0.0;
                }
                let cosang = (dot3(&nk, &nl) / den).clamp(-1.0, 1.0);
                best = best.min(cosang.acos().to_degrees());
            }
            best
        }
        _ => unreachable!(),
    }
}

/// All vertex-index pairs of a simplex with `n` vertices.
pub(crate) fn local_edges(n: usize) -> &'static [(usize, usize)] {
    const TRI: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];
    const TET: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    match n {
        3 => &TRI,
        4 => &TET,
        _ => unreachable!(),
    }
}
