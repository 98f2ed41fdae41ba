//! Quadrature rules: Gauss–Legendre, the unit half-sphere, triangles,
//! tetrahedra, and integration over a cell clipped to a ball.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Product rule on the unit upper half-sphere {|θ| = 1, θ_N > 0} in 3D:
/// Gauss–Legendre in cos(polar angle), uniform in azimuth.
#[derive(Clone, Debug)]
pub struct HemisphereRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl HemisphereRule {
    pub fn new(n_polar: usize, n_azimuth: usize) -> Self {
        let (t, wt) = gauss_legendre(n_polar);
        let mut points = Vec::with_capacity(n_polar * n_azimuth);
        let mut weights = Vec::with_capacity(n_polar * n_azimuth);
        let dphi = 2.0 * PI / n_azimuth as f64;
        for (ti, wi) in t.iter().zip(&wt) {
            let z = 0.5 * (ti + 1.0);
            let s = (1.0 - z * z).max(0.0).sqrt();
            for j in 0..n_azimuth {
                let phi = (j as f64 + 0.5) * dphi;
                points.push([s * phi.cos(), s * phi.sin(), z]);
                weights.push(0.5 * wi * dphi);
            }
        }
        HemisphereRule { points, weights }
    }

    /// Rule exact for polynomials of degree ≤ 2·n_polar − 1 (polar) and
    /// n_azimuth − 1 (azimuth).
    pub fn standard() -> Self {
        HemisphereRule::new(16, 32)
    }
}

/// Γ(k/2) for positive integer k.
pub fn gamma_half(k: u32) -> f64 {
    assert!(k > 0);
    let (mut g, mut x) = if k.is_multiple_of(2) { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    while x < k as f64 / 2.0 - 0.25 {
        g *= x;
        x += 1.0;
    }
    g
}

/// ∫ x^a y^b z^c over the unit upper half-sphere in 3D (exact).
pub fn hemisphere_moment(a: u32, b: u32, c: u32) -> f64 {
    if a % 2 == 1 || b % 2 == 1 {
        return 0.0;
    }
    gamma_half(a + 1) * gamma_half(b + 1) * gamma_half(c + 1) / gamma_half(a + b + c + 3)
}

/// ∫ x^a y^b z^c over the upper half-ball of radius r in 3D (exact).
pub fn half_ball_moment(a: u32, b: u32, c: u32, r: f64) -> f64 {
    let d = (a + b + c + 3) as i32;
    hemisphere_moment(a, b, c) * r.powi(d) / d as f64
}

/// Symmetric triangle rules in barycentric coordinates: degree 2 (3 points)
/// and degree 4 (6 points). Weights sum to 1.
pub fn triangle_rule(degree: usize) -> Vec<([f64; 3], f64)> {
    if degree <= 2 {
        let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
        return vec![([a, b, b], 1.0 / 3.0), ([b, a, b], 1.0 / 3.0), ([b, b, a], 1.0 / 3.0)];
    }
    let (a1, b1, w1) = (0.108103018168070, 0.445948490915965, 0.223381589678011);
    let (a2, b2, w2) = (0.816847572980459, 0.091576213509771, 0.109951743655322);
    vec![
        ([a1, b1, b1], w1),
        ([b1, a1, b1], w1),
        ([b1, b1, a1], w1),
        ([a2, b2, b2], w2),
        ([b2, a2, b2], w2),
        ([b2, b2, a2], w2),
    ]
}

/// Degree-2 four-point tetrahedron rule (barycentric points, weights sum to 1).
pub fn tet_rule() -> [([f64; 4], f64); 4] {
    let (a, b) = (0.5854101966249685, 0.1381966011250105);
    [([a, b, b, b], 0.25), ([b, a, b, b], 0.25), ([b, b, a, b], 0.25), ([b, b, b, a], 0.25)]
}

/// Quadrature points (barycentric in the parent cell) and weights (absolute,
/// already multiplied by the parent volume) for ∫ over cell ∩ B_r(0).
///
/// Sub-simplices entirely inside the ball get the degree-2 rule, entirely
/// outside are dropped, and straddling ones are split (red refinement)
/// `depth` times before the rule is applied with the indicator evaluated
/// pointwise.
pub fn clipped_ball_rule(pts: &[&[f64]], volume: f64, r: f64, depth: u32) -> Vec<([f64; 4], f64)> {
    let dim = pts.len() - 1;
    let mut out = Vec::new();
    let root: Vec<[f64; 4]> = (0..=dim)
        .map(|i| {
            let mut b = [0.0; 4];
            b[i] = 1.0;
            b
        })
        .collect();
    clip_rec(pts, dim, &root, volume, r, depth, &mut out);
    out
}

fn physical(pts: &[&[f64]], dim: usize, b: &[f64; 4]) -> [f64; 3] {
    let mut p = [0.0; 3];
    for (i, q) in pts.iter().enumerate() {
        for k in 0..dim {
            p[k] += b[i] * q[k];
        }
    }
    p
}

fn norm3(p: &[f64; 3]) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}

fn clip_rec(
    pts: &[&[f64]],
    dim: usize,
    sub: &[[f64; 4]],
    vol: f64,
    r: f64,
    depth: u32,
    out: &mut Vec<([f64; 4], f64)>,
) {
    let phys: Vec<[f64; 3]> = sub.iter().map(|b| physical(pts, dim, b)).collect();
    let radii: Vec<f64> = phys.iter().map(norm3).collect();
    let rule = |out: &mut Vec<([f64; 4], f64)>, indicator: bool| {
        if dim == 3 {
            for (q, w) in tet_rule() {
                let mut b = [0.0; 4];
                for i in 0..4 {
                    for k in 0..4 {
                        b[k] += q[i] * sub[i][k];
                    }
                }
                if !indicator || norm3(&physical(pts, dim, &b)) < r {
                    out.push((b, w * vol));
                }
            }
        } else {
            for (q, w) in triangle_rule(2) {
                let mut b = [0.0; 4];
                for i in 0..3 {
                    for k in 0..3 {
                        b[k] += q[i] * sub[i][k];
                    }
                }
                if !indicator || norm3(&physical(pts, dim, &b)) < r {
                    out.push((b, w * vol));
                }
            }
        }
    };
    if radii.iter().all(|&x| x <= r) {
        rule(out, false);
        return;
    }
    // outside test: the sub-simplex lies in the ball around its centroid
    // with radius max distance to a vertex
    let mut c = [0.0; 3];
    for p in &phys {
        for k in 0..3 {
            c[k] += p[k] / phys.len() as f64;
        }
    }
    let spread = phys
        .iter()
        .map(|p| ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) + (p[2] - c[2]).powi(2)).sqrt())
        .fold(0.0, f64::max);
    if norm3(&c) - spread >= r {
        return;
    }
    if depth == 0 {
        rule(out, true);
        return;
    }
    for child in red_children(sub, dim) {
        let nchild = if dim == 3 { 8.0 } else { 4.0 };
        clip_rec(pts, dim, &child, vol / nchild, r, depth - 1, out);
    }
}

fn mid(a: &[f64; 4], b: &[f64; 4]) -> [f64; 4] {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2]), 0.5 * (a[3] + b[3])]
}

/// Uniform red refinement (8 tetrahedra / 4 triangles of equal volume).
fn red_children(s: &[[f64; 4]], dim: usize) -> Vec<Vec<[f64; 4]>> {
    if dim == 2 {
        let (m01, m02, m12) = (mid(&s[0], &s[1]), mid(&s[0], &s[2]), mid(&s[1], &s[2]));
        return vec![vec![s[0], m01, m02], vec![m01, s[1], m12], vec![m02, m12, s[2]], vec![m01, m12, m02]];
    }
    let m01 = mid(&s[0], &s[1]);
    let m02 = mid(&s[0], &s[2]);
    let m03 = mid(&s[0], &s[3]);
    let m12 = mid(&s[1], &s[2]);
    let m13 = mid(&s[1], &s[3]);
    let m23 = mid(&s[2], &s[3]);
    vec![
        vec![s[0], m01, m02, m03],
        vec![m01, s[1], m12, m13],
        vec![m02, m12, s[2], m23],
        vec![m03, m13, m23, s[3]],
        vec![m01, m02, m03, m13],
        vec![m01, m02, m12, m13],
        vec![m02, m03, m13, m23],
        vec![m02, m12, m13, m23],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(5);
        let int = |k: i32| x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(k)).sum::<f64>();
        assert!((int(0) - 2.0).abs() < 1e-14);
        assert!((int(8) - 2.0 / 9.0).abs() < 1e-14);
        assert!(int(9).abs() < 1e-14);
    }

    #[test]
    fn hemisphere_rule_matches_moments() {
        let rule = HemisphereRule::standard();
        for (a, b, c) in [(0, 0, 0), (0, 0, 2), (2, 0, 1), (2, 2, 0), (0, 0, 4), (4, 0, 1)] {
            let q: f64 = rule
                .points
                .iter()
                .zip(&rule.weights)
                .map(|(p, w)| w * p[0].powi(a) * p[1].powi(b) * p[2].powi(c))
                .sum();
            let exact = hemisphere_moment(a as u32, b as u32, c as u32);
            assert!((q - exact).abs() < 1e-12, "{a} {b} {c}: {q} vs {exact}");
        }
        assert!((hemisphere_moment(0, 0, 2) - 2.0 * PI / 3.0).abs() < 1e-14);
    }

    #[test]
    fn triangle_rules_integrate_exactly() {
        // ∫ λ0^2 λ1^2 over the reference triangle / area = 2·2!2!/6! ... = 1/90
        let r = triangle_rule(4);
        let q: f64 = r.iter().map(|(b, w)| w * b[0] * b[0] * b[1] * b[1]).sum();
        assert!((q - 2.0 * 4.0 / 720.0).abs() < 1e-12);
        let r = triangle_rule(2);
        let q: f64 = r.iter().map(|(b, w)| w * b[0] * b[1]).sum();
        assert!((q - 2.0 / 24.0).abs() < 1e-14);
    }

    #[test]
    fn clipped_rule_approximates_ball_volume() {
        // cube [-1,1]^3 split into 6 tets (Kuhn), clipped to the unit ball
        let corners: Vec<[f64; 3]> = (0..8)
            .map(|i| {
                [
                    if i & 1 == 1 { 1.0 } else { -1.0 },
                    if i & 2 == 2 { 1.0 } else { -1.0 },
                    if i & 4 == 4 { 1.0 } else { -1.0 },
                ]
            })
            .collect();
        let perms = [[1, 2, 4], [1, 4, 2], [2, 1, 4], [2, 4, 1], [4, 1, 2], [4, 2, 1]];
        let mut total = 0.0;
        for p in perms {
            let ids = [0, p[0], p[0] + p[1], 7];
            let pts: Vec<&[f64]> = ids.iter().map(|&i| &corners[i][..]).collect();
            let vol = crate::geometry::simplex::signed_volume(3, &pts).abs();
            total += clipped_ball_rule(&pts, vol, 1.0, 5).iter().map(|(_, w)| w).sum::<f64>();
        }
        assert!((total - 4.0 * PI / 3.0).abs() < 0.02, "{total}");
    }
}
