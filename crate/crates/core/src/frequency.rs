//! Almgren-type frequency quantities of (evenly reflected) fields on a
//! half-ball mesh in 3D:
//!
//! H(v, r) = r^{1−N} ∫_{∂B_r} v²,  E(v, r, λ) = r^{2−N} ∫_{B_r} (|∇v|² − λ v²),
//! N = E / H.
//!
//! The field lives on the upper half only; the even reflection across
//! {x_N = 0} is accounted for by a factor 2 on every integral.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::Field;
use crate::quadrature::{clipped_ball_rule, HemisphereRule};

const N_DIM: i32 = 3;

#[derive(Clone, Debug)]
pub struct FrequencyOptions {
    /// Radii must satisfy r ≥ factor · (local mesh size).
    pub min_radius_factor: f64,
    /// Red-refinement depth for cells cut by the sphere.
    pub clip_depth: u32,
    pub sphere_rule: HemisphereRule,
}

impl Default for FrequencyOptions {
    fn default() -> Self {
        FrequencyOptions { min_radius_factor: 4.0, clip_depth: 4, sphere_rule: HemisphereRule::standard() }
    }
}

fn require_3d(v: &Field) -> Result<()> {
    if v.mesh().dim() != 3 {
        return Err(Error::Unsupported("frequency quantities are implemented for N = 3 only".into()));
    }
    Ok(())
}

/// ∫_{S_r⁺} v² and the largest cell size met by the quadrature nodes.
fn sphere_mass(v: &Field, r: f64, opts: &FrequencyOptions) -> Result<(f64, f64)> {
    let mesh = v.mesh();
    let mut sum = 0.0;
    let mut h_loc: f64 = 0.0;
    for (p, w) in opts.sphere_rule.points.iter().zip(&opts.sphere_rule.weights) {
        let x = [r * p[0], r * p[1], r * p[2]];
        let (c, b) = mesh.locate(&x).ok_or(Error::OutsideMesh(r))?;
        h_loc = h_loc.max(mesh.cell_longest_edge(c));
        let u = v.interpolate(c, &b);
        sum += w * u * u;
    }
    Ok((sum * r * r, h_loc))
}

fn check_resolution(r: f64, h_loc: f64, opts: &FrequencyOptions) -> Result<()> {
    if r < opts.min_radius_factor * h_loc {
        return Err(Error::UnderResolvedRadius { radius: r, local_h: h_loc, factor: opts.min_radius_factor });
    }
    Ok(())
}

pub fn compute_h(v: &Field, r: f64) -> Result<f64> {
    compute_h_with(v, r, &FrequencyOptions::default())
}

pub fn compute_h_with(v: &Field, r: f64, opts: &FrequencyOptions) -> Result<f64> {
    require_3d(v)?;
    let (mass, h_loc) = sphere_mass(v, r, opts)?;
    check_resolution(r, h_loc, opts)?;
    Ok(r.powi(1 - N_DIM) * 2.0 * mass)
}

/// (∫_{B_r⁺} |∇v|², ∫_{B_r⁺} v²), partial cells by clipped quadrature.
pub fn ball_integrals(v: &Field, r: f64, depth: u32) -> (f64, f64) {
    let mesh = v.mesh();
    let vals = v.values();
    (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            let pts = mesh.cell_points(c);
            let radii: Vec<f64> = pts.iter().map(|p| p.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
            let rmin_bound = {
                let cen = mesh.cell_centroid(c);
                let cn = (cen[0] * cen[0] + cen[1] * cen[1] + cen[2] * cen[2]).sqrt();
                cn - mesh.cell_longest_edge(c)
            };
            if rmin_bound >= r {
                return (0.0, 0.0);
            }
            let g = v.cell_gradient(c);
            let g2 = g[0] * g[0] + g[1] * g[1] + g[2] * g[2];
            let vol = mesh.cell_volume(c);
            let cell = mesh.cell(c);
            if radii.iter().all(|&x| x <= r) {
                let n = cell.len();
                let u: Vec<f64> = cell.iter().map(|&i| vals[i]).collect();
                let sq: f64 = u.iter().map(|x| x * x).sum();
                let s: f64 = u.iter().sum();
                return (vol * g2, vol * (sq + s * s) / ((n * (n + 1)) as f64));
            }
            let rule = clipped_ball_rule(&pts, vol, r, depth);
            let mut e = 0.0;
            let mut m = 0.0;
            for (b, w) in rule {
                let u = v.interpolate(c, &b);
                e += w * g2;
                m += w * u * u;
            }
            (e, m)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1))
}

pub fn compute_e(v: &Field, r: f64, lambda: f64) -> Result<f64> {
    compute_e_with(v, r, lambda, &FrequencyOptions::default())
}

pub fn compute_e_with(v: &Field, r: f64, lambda: f64, opts: &FrequencyOptions) -> Result<f64> {
    require_3d(v)?;
    let (_, h_loc) = sphere_mass(v, r, opts)?;
    check_resolution(r, h_loc, opts)?;
    let (grad, mass) = ball_integrals(v, r, opts.clip_depth);
    Ok(r.powi(2 - N_DIM) * 2.0 * (grad - lambda * mass))
}

/// Smallest H accepted as nonzero.
pub const H_FLOOR: f64 = 1e-14;

/// (H, E, N) at one radius.
pub fn frequency_at(v: &Field, r: f64, lambda: f64, opts: &FrequencyOptions) -> Result<(f64, f64, f64)> {
    require_3d(v)?;
    let (mass, h_loc) = sphere_mass(v, r, opts)?;
    check_resolution(r, h_loc, opts)?;
    let h = r.powi(1 - N_DIM) * 2.0 * mass;
    if !(h > H_FLOOR) {
        return Err(Error::VanishingH { radius: r, value: h });
    }
    let (grad, m) = ball_integrals(v, r, opts.clip_depth);
    let e = r.powi(2 - N_DIM) * 2.0 * (grad - lambda * m);
    Ok((h, e, e / h))
}

pub fn compute_n(v: &Field, r: f64, lambda: f64) -> Result<f64> {
    Ok(frequency_at(v, r, lambda, &FrequencyOptions::default())?.2)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrequencySeries {
    pub radii: Vec<f64>,
    pub h_values: Vec<f64>,
    pub e_values: Vec<f64>,
    pub n_values: Vec<f64>,
    pub lambda: f64,
    pub field_fingerprint: u64,
}

impl FrequencySeries {
    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "r,H,E,N")?;
        for i in 0..self.len() {
            writeln!(out, "{:?},{:?},{:?},{:?}", self.radii[i], self.h_values[i], self.e_values[i], self.n_values[i])?;
        }
        Ok(())
    }
}

fn field_fingerprint(v: &Field) -> u64 {
    use std::hash::Hasher;
    let mut h = fnv::FnvHasher::default();
    h.write_u64(v.mesh().fingerprint());
    for x in v.values() {
        h.write_u64(x.to_bits());
    }
    h.finish()
}

pub fn frequency_series(v: &Field, lambda: f64, radii: &[f64]) -> Result<FrequencySeries> {
    frequency_series_with(v, lambda, radii, &FrequencyOptions::default())
}

pub fn frequency_series_with(
    v: &Field,
    lambda: f64,
    radii: &[f64],
    opts: &FrequencyOptions,
) -> Result<FrequencySeries> {
    require_3d(v)?;
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("radii must be strictly increasing".into()));
    }
    let mut bad = Vec::new();
    for &r in radii {
        let (_, h_loc) = sphere_mass(v, r, opts)?;
        if r < opts.min_radius_factor * h_loc {
            bad.push(r);
        }
    }
    if !bad.is_empty() {
        return Err(Error::UnderResolvedRadii { radii: bad, factor: opts.min_radius_factor });
    }
    let vals: Vec<(f64, f64, f64)> = radii.iter().map(|&r| frequency_at(v, r, lambda, opts)).collect::<Result<_>>()?;
    Ok(FrequencySeries {
        radii: radii.to_vec(),
        h_values: vals.iter().map(|t| t.0).collect(),
        e_values: vals.iter().map(|t| t.1).collect(),
        n_values: vals.iter().map(|t| t.2).collect(),
        lambda,
        field_fingerprint: field_fingerprint(v),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DoublingReport {
    /// Smallest C with N(r)+1 ≤ e^{C(R−r)} (N(R)+1) for all r < R in the series.
    pub fitted_c: f64,
    pub cap: f64,
    pub pass: bool,
}

pub fn check_doubling_bound(series: &FrequencySeries, cap: f64) -> Result<DoublingReport> {
    if series.len() < 3 {
        return Err(Error::InvalidArgument("doubling check needs at least 3 radii".into()));
    }
    let mut c: f64 = 0.0;
    for i in 0..series.len() {
        for j in i + 1..series.len() {
            let (a, b) = (series.n_values[i] + 1.0, series.n_values[j] + 1.0);
            if !(a > 0.0 && b > 0.0) {
                return Ok(DoublingReport { fitted_c: f64::INFINITY, cap, pass: false });
            }
            c = c.max((a / b).ln() / (series.radii[j] - series.radii[i]));
        }
    }
    Ok(DoublingReport { fitted_c: c, cap, pass: c.is_finite() && c <= cap })
}
