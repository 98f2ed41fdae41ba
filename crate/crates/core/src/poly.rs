//! Polynomials in three variables, stored as sparse monomial lists.

use serde::{Deserialize, Serialize};

use crate::quadrature::{half_ball_moment, hemisphere_moment};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Poly {
    /// (exponents of x, y, z; coefficient)
    pub terms: Vec<([u32; 3], f64)>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn monomial(e: [u32; 3], c: f64) -> Self {
        Poly { terms: vec![(e, c)] }.normalized()
    }

    /// Merges equal monomials, drops zeros, sorts by exponent.
    pub fn normalized(mut self) -> Self {
        self.terms.sort_by_key(|t| t.0);
        let mut out: Vec<([u32; 3], f64)> = Vec::with_capacity(self.terms.len());
        for (e, c) in self.terms {
            match out.last_mut() {
                Some(last) if last.0 == e => last.1 += c,
                _ => out.push((e, c)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        Poly { terms: out }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(e, _)| e[0] + e[1] + e[2]).max().unwrap_or(0)
    }

    pub fn eval(&self, p: &[f64]) -> f64 {
        let z = if p.len() > 2 { p[2] } else { 0.0 };
        self.terms.iter().map(|(e, c)| c * p[0].powi(e[0] as i32) * p[1].powi(e[1] as i32) * z.powi(e[2] as i32)).sum()
    }

    pub fn scaled(&self, s: f64) -> Poly {
        Poly { terms: self.terms.iter().map(|&(e, c)| (e, c * s)).collect() }.normalized()
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut t = self.terms.clone();
        t.extend_from_slice(&other.terms);
        Poly { terms: t }.normalized()
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut t = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                t.push(([a[0] + b[0], a[1] + b[1], a[2] + b[2]], ca * cb));
            }
        }
        Poly { terms: t }.normalized()
    }

    pub fn derivative(&self, k: usize) -> Poly {
        let t = self
            .terms
            .iter()
            .filter(|(e, _)| e[k] > 0)
            .map(|&(e, c)| {
                let mut d = e;
                d[k] -= 1;
                (d, c * e[k] as f64)
            })
            .collect();
        Poly { terms: t }.normalized()
    }

    pub fn gradient(&self, p: &[f64]) -> [f64; 3] {
        [self.derivative(0).eval(p), self.derivative(1).eval(p), self.derivative(2).eval(p)]
    }

    pub fn laplacian(&self) -> Poly {
        self.derivative(0).derivative(0).add(&self.derivative(1).derivative(1)).add(&self.derivative(2).derivative(2))
    }

    /// ∫ over the unit upper half-sphere.
    pub fn hemisphere_integral(&self) -> f64 {
        self.terms.iter().map(|(e, c)| c * hemisphere_moment(e[0], e[1], e[2])).sum()
    }

    /// ∫ over the upper half-ball of radius r.
    pub fn half_ball_integral(&self, r: f64) -> f64 {
        self.terms.iter().map(|(e, c)| c * half_ball_moment(e[0], e[1], e[2], r)).sum()
    }

    /// ∫_{B_r⁺} |∇p|².
    pub fn energy(&self, r: f64) -> f64 {
        (0..3)
            .map(|k| {
                let d = self.derivative(k);
                d.mul(&d).half_ball_integral(r)
            })
            .sum()
    }
}

/// All monomials x^a y^b z^c of total degree `deg`.
pub fn monomials(deg: u32) -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    for c in 0..=deg {
        for b in 0..=deg - c {
            out.push([deg - b - c, b, c]);
        }
    }
    out
}

/// Basis of the homogeneous harmonic polynomials of degree `gamma` that
/// are odd in z (hence vanish on {z = 0}), as the reduced-row-echelon
/// nullspace of the Laplacian on the odd-in-z monomials. For gamma = 1 this
/// is {z}; for gamma = 2 it is {xz, yz}.
pub fn odd_harmonic_basis(gamma: u32) -> Vec<Poly> {
    assert!(gamma >= 1);
    let cols: Vec<[u32; 3]> = monomials(gamma).into_iter().filter(|e| e[2] % 2 == 1).collect();
    let rows: Vec<[u32; 3]> =
        if gamma >= 2 { monomials(gamma - 2).into_iter().filter(|e| e[2] % 2 == 1).collect() } else { Vec::new() };
    // Laplacian matrix: rows indexed by degree gamma-2 monomials
    let mut a = vec![vec![0.0; cols.len()]; rows.len()];
    for (j, e) in cols.iter().enumerate() {
        let lap = Poly::monomial(*e, 1.0).laplacian();
        for (f, c) in &lap.terms {
            let i = rows.iter().position(|r| r == f).expect("laplacian stays in the odd space");
            a[i][j] += c;
        }
    }
    // reduced row echelon form
    let mut pivots = Vec::new();
    let mut r = 0;
    for j in 0..cols.len() {
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).max_by(|&x, &y| a[x][j].abs().total_cmp(&a[y][j].abs())) else {
            break;
        };
        if a[p][j].abs() < 1e-12 {
            continue;
        }
        a.swap(r, p);
        let piv = a[r][j];
        for v in a[r].iter_mut() {
            *v /= piv;
        }
        for i in 0..rows.len() {
            if i != r && a[i][j] != 0.0 {
                let f = a[i][j];
                for k in 0..cols.len() {
                    a[i][k] -= f * a[r][k];
                }
            }
        }
        pivots.push(j);
        r += 1;
    }
    let free: Vec<usize> = (0..cols.len()).filter(|j| !pivots.contains(j)).collect();
    free.iter()
        .map(|&f| {
            let mut terms = vec![(cols[f], 1.0)];
            for (row, &pj) in pivots.iter().enumerate() {
                let v = -a[row][f];
                if v.abs() > 1e-14 {
                    terms.push((cols[pj], v));
                }
            }
            Poly { terms }.normalized()
        })
        .collect()
}
