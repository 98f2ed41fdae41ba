use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the Neumann patch in the flat face, in unscaled coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PatchSpec {
    Disk {
        radius: f64,
    },
    /// Closed polygon; either orientation is accepted.
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
    /// Boundary radius sampled at the uniform angles `2πk/n`.
    Radial {
        radii: Vec<f64>,
    },
}

impl PatchSpec {
    pub fn disk(radius: f64) -> Self {
        PatchSpec::Disk { radius }
    }

    /// Axis-aligned square `[-a, a]²`.
    pub fn square(half_side: f64) -> Self {
        let a = half_side;
        PatchSpec::Polygon { vertices: vec![[-a, -a], [a, -a], [a, a], [-a, a]] }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PatchSpec::Disk { radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidPatch(format!("disk radius must be positive, got {radius}")));
                }
            }
            PatchSpec::Polygon { .. } | PatchSpec::Radial { .. } => {
                if let PatchSpec::Radial { radii } = self {
                    if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
                        return Err(Error::InvalidPatch("radial samples must be positive".into()));
                    }
                }
                let poly = self.polygon_ccw()?;
                if !point_in_polygon(&poly, [0.0, 0.0]) || polygon_distance(&poly, [0.0, 0.0]) == 0.0 {
                    return Err(Error::InvalidPatch("origin must lie in the interior of the patch".into()));
                }
            }
        }
        Ok(())
    }

    /// Boundary polygon, counter-clockwise. Disks are not polygonal.
    fn polygon_ccw(&self) -> Result<Vec<[f64; 2]>> {
        let mut poly = match self {
            PatchSpec::Disk { .. } => return Err(Error::Unsupported("disk has no polygonal boundary".into())),
            PatchSpec::Polygon { vertices } => vertices.clone(),
            PatchSpec::Radial { radii } => {
                let n = radii.len() as f64;
                radii
                    .iter()
                    .enumerate()
                    .map(|(k, r)| {
                        let t = 2.0 * std::f64::consts::PI * k as f64 / n;
                        [r * t.cos(), r * t.sin()]
                    })
                    .collect()
            }
        };
        if poly.len() < 3 {
            return Err(Error::InvalidPatch("boundary needs at least 3 vertices".into()));
        }
        if poly.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
            return Err(Error::InvalidPatch("non-finite boundary vertex".into()));
        }
        let n = poly.len();
        for i in 0..n {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            if a == b {
                return Err(Error::InvalidPatch(format!(
                    "repeated vertex at position {i}: boundary is not closed cleanly"
                )));
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                if segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]) {
                    return Err(Error::InvalidPatch(format!("self-intersecting boundary (edges {i} and {j})")));
                }
            }
        }
        if signed_area(&poly) < 0.0 {
            poly.reverse();
        }
        Ok(poly)
    }

    /// Validated, orientation-normalized form for repeated queries.
    pub fn prepare(&self) -> Result<PreparedPatch> {
        self.validate()?;
        Ok(match self {
            PatchSpec::Disk { radius } => PreparedPatch::Disk(*radius),
            _ => PreparedPatch::Polygon(self.polygon_ccw()?),
        })
    }

    /// Strict interior membership of a flat-face point.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.prepare().map(|q| q.contains(p)).unwrap_or(false)
    }

    /// Signed distance to the patch boundary, negative inside.
    pub fn signed_distance(&self, p: [f64; 2]) -> f64 {
        self.prepare().map(|q| q.signed_distance(p)).unwrap_or(f64::INFINITY)
    }

    /// Largest distance from the origin to the patch (circumscribed radius about 0).
    pub fn circumradius(&self) -> f64 {
        match self {
            PatchSpec::Disk { radius } => *radius,
            _ => self
                .polygon_ccw()
                .map(|poly| poly.iter().map(|p| p[0].hypot(p[1])).fold(0.0, f64::max))
                .unwrap_or(f64::NAN),
        }
    }

    /// Largest disk about 0 contained in the patch.
    pub fn inradius(&self) -> f64 {
        match self {
            PatchSpec::Disk { radius } => *radius,
            _ => self.polygon_ccw().map(|poly| polygon_distance(&poly, [0.0, 0.0])).unwrap_or(f64::NAN),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            PatchSpec::Disk { radius } => 2.0 * radius,
            _ => {
                let poly = match self.polygon_ccw() {
                    Ok(p) => p,
                    Err(_) => return f64::NAN,
                };
                let mut d: f64 = 0.0;
                for a in &poly {
                    for b in &poly {
                        d = d.max((a[0] - b[0]).hypot(a[1] - b[1]));
                    }
                }
                d
            }
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            PatchSpec::Disk { radius } => std::f64::consts::PI * radius * radius,
            _ => self.polygon_ccw().map(|p| signed_area(&p)).unwrap_or(f64::NAN),
        }
    }

    /// The same shape dilated by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        match self {
            PatchSpec::Disk { radius } => PatchSpec::Disk { radius: radius * s },
            PatchSpec::Polygon { vertices } => {
                PatchSpec::Polygon { vertices: vertices.iter().map(|p| [p[0] * s, p[1] * s]).collect() }
            }
            PatchSpec::Radial { radii } => PatchSpec::Radial { radii: radii.iter().map(|r| r * s).collect() },
        }
    }
}

#[derive(Clone, Debug)]
pub enum PreparedPatch {
    Disk(f64),
    Polygon(Vec<[f64; 2]>),
}

impl PreparedPatch {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        match self {
            PreparedPatch::Disk(r) => p[0] * p[0] + p[1] * p[1] < r * r,
            PreparedPatch::Polygon(poly) => point_in_polygon(poly, p),
        }
    }

    pub fn signed_distance(&self, p: [f64; 2]) -> f64 {
        match self {
            PreparedPatch::Disk(r) => p[0].hypot(p[1]) - r,
            PreparedPatch::Polygon(poly) => {
                let d = polygon_distance(poly, p);
                if point_in_polygon(poly, p) {
                    -d
                } else {
                    d
                }
            }
        }
    }
}

/// min over the boundary of x·ν(x); positive iff the patch is strictly
/// star-shaped with respect to the origin.
pub fn check_strict_star_shaped(patch: &PatchSpec) -> Result<f64> {
    match patch {
        PatchSpec::Disk { radius } => {
            patch.validate()?;
            Ok(*radius)
        }
        _ => {
            let poly = patch.polygon_ccw()?;
            let n = poly.len();
            let mut sigma = f64::INFINITY;
            for i in 0..n {
                let (a, b) = (poly[i], poly[(i + 1) % n]);
                let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
                let len = dx.hypot(dy);
                // outward normal of a counter-clockwise boundary
                let nu = [dy / len, -dx / len];
                sigma = sigma.min(a[0] * nu[0] + a[1] * nu[1]);
            }
            Ok(sigma)
        }
    }
}

fn signed_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        * 0.5
}

fn point_in_polygon(poly: &[[f64; 2]], p: [f64; 2]) -> bool {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside && polygon_distance(poly, p) > 0.0
}

fn polygon_distance(poly: &[[f64; 2]], p: [f64; 2]) -> f64 {
    let n = poly.len();
    (0..n).map(|i| segment_distance(poly[i], poly[(i + 1) % n], p)).fold(f64::INFINITY, f64::min)
}

fn segment_distance(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let t = (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
    (p[0] - a[0] - t * dx).hypot(p[1] - a[1] - t * dy)
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn segments_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    // touching or collinear overlap
    let on = |p: [f64; 2], q: [f64; 2], r: [f64; 2], o: f64| {
        o == 0.0 && r[0] >= p[0].min(q[0]) && r[0] <= p[0].max(q[0]) && r[1] >= p[1].min(q[1]) && r[1] <= p[1].max(q[1])
    };
    on(a, b, c, o1) || on(a, b, d, o2) || on(c, d, a, o3) || on(c, d, b, o4)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_shape_values() {
        assert_eq!(check_strict_star_shaped(&PatchSpec::disk(1.0)).unwrap(), 1.0);
        assert!((check_strict_star_shaped(&PatchSpec::square(1.0)).unwrap() - 1.0).abs() < 1e-15);
        // L-shape whose reentrant edges lie on lines through the origin
        let l = PatchSpec::Polygon {
            vertices: vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 0.0], [0.0, 0.0], [0.0, 1.0], [-1.0, 1.0]],
        };
        assert!(l.validate().is_err());
        // notch whose edge from (1,1) to (0.4,0.4) lies on a ray from the origin
        let reentrant =
            PatchSpec::Polygon { vertices: vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [0.4, 0.4], [-1.0, 1.0]] };
        reentrant.validate().unwrap();
        assert!(check_strict_star_shaped(&reentrant).unwrap() <= 1e-15);
    }

    #[test]
    fn rejects_bowtie() {
        let bow = PatchSpec::Polygon { vertices: vec![[-1.0, -1.0], [1.0, 1.0], [1.0, -1.0], [-1.0, 1.0]] };
        assert!(check_strict_star_shaped(&bow).is_err());
    }

    #[test]
    fn square_geometry() {
        let s = PatchSpec::square(1.0);
        assert!((s.area() - 4.0).abs() < 1e-14);
        assert!((s.circumradius() - 2f64.sqrt()).abs() < 1e-14);
        assert!((s.inradius() - 1.0).abs() < 1e-14);
        assert!(s.contains([0.9, -0.9]));
        assert!(!s.contains([1.1, 0.0]));
        assert!((s.signed_distance([0.5, 0.0]) + 0.5).abs() < 1e-15);
        // clockwise input is accepted and reoriented
        let cw = PatchSpec::Polygon { vertices: vec![[-1.0, -1.0], [-1.0, 1.0], [1.0, 1.0], [1.0, -1.0]] };
        assert!((check_strict_star_shaped(&cw).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn radial_circle_approximates_disk() {
        let r = PatchSpec::Radial { radii: vec![1.0; 64] };
        r.validate().unwrap();
        let s = check_strict_star_shaped(&r).unwrap();
        assert!(s > 0.99 && s < 1.0);
    }

    #[test]
    fn serde_round_trip() {
        let p = PatchSpec::square(0.5);
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"kind\":\"polygon\""));
        assert_eq!(serde_json::from_str::<PatchSpec>(&s).unwrap(), p);
    }
}
