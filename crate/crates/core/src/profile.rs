//! Half-space limit problems on truncated half-balls B_R⁺: the profile
//! w₀ (harmonic, Neumann data −∂_νψ on the patch Π, zero Dirichlet on the
//! rest of the flat face and on the artificial cap), the coefficient
//! m = J(w₀) and C = −2m, and the auxiliary fields U_R, Z_R, U = ψ + w₀.
//!
//! All truncation radii live on one mesh of B⁺_{R_outer} in which every
//! sphere of radius R is embedded; truncating at R keeps the cells inside
//! it, so the discrete spaces are nested and m(R) is exactly monotone.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{
    assemble_neumann_load, solve_linear, stiffness_matrix, ConstrainedSystem, Field, LinearMethod, SparseMatrix,
};
use crate::geometry::{
    tag_boundary_with, FacetTag, HalfBallBuilder, Mesh, PatchSpec, SizeField, TagOptions, TaggedMesh,
};
use crate::quadrature::HemisphereRule;
use crate::spectrum::PsiSpec;

/// Discretization of the profile problems. Radii are multiples of the
/// patch circumradius; mesh sizes are absolute.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileNumerics {
    pub r_list: Vec<f64>,
    /// Radius of the largest mesh, used for U = ψ + w₀.
    pub r_outer: f64,
    /// Mesh size at the origin, growing with `far_slope` outward.
    pub h_core: f64,
    pub far_slope: f64,
    /// Mesh size along the patch boundary, growing with `rim_slope`.
    pub h_rim: f64,
    pub rim_slope: f64,
    /// Embedded spheres per doubling of the radius.
    pub shells_per_octave: usize,
    pub linear_tol: f64,
    /// Also solve the patch scaled by 1/2 and 2 and compare with the
    /// homogeneity law m(rΠ) = r^{N+2γ−2} m(Π).
    pub scaling_check: bool,
}

impl Default for ProfileNumerics {
    fn default() -> Self {
        ProfileNumerics {
            r_list: vec![4.0, 8.0, 16.0],
            r_outer: 32.0,
            h_core: 0.25,
            far_slope: 0.15,
            h_rim: 0.01,
            rim_slope: 0.25,
            shells_per_octave: 4,
            linear_tol: 1e-11,
            scaling_check: false,
        }
    }
}

impl ProfileNumerics {
    pub fn validate(&self) -> Result<()> {
        if self.r_list.len() < 2 {
            return Err(Error::InvalidArgument("profile needs at least two truncation radii".into()));
        }
        if self.r_list.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("R_list must be strictly increasing".into()));
        }
        if self.r_list[0] < 4.0 {
            return Err(Error::InvalidArgument("truncation radii must be at least 4 patch diameters/2".into()));
        }
        if !(self.r_outer >= *self.r_list.last().unwrap()) {
            return Err(Error::InvalidArgument("r_outer must be at least the largest truncation radius".into()));
        }
        for &r in self.r_list.iter().chain(std::iter::once(&self.r_outer)) {
            let octaves = (r / 2.0).log2() * self.shells_per_octave as f64;
            if (octaves - octaves.round()).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "radius {r} is not 2·2^(k/{}) for an integer k",
                    self.shells_per_octave
                )));
            }
        }
        if !(self.h_core > 0.0 && self.h_rim > 0.0 && self.far_slope > 0.0 && self.rim_slope > 0.0) {
            return Err(Error::InvalidArgument("mesh sizes and slopes must be positive".into()));
        }
        Ok(())
    }
}

/// Meshes of B_R⁺ for every configured R, all cut from one outer mesh.
#[derive(Clone, Debug)]
pub struct ProfileDomain {
    pub patch: PatchSpec,
    /// Patch circumradius; radii below are absolute (= multiple · scale).
    pub scale: f64,
    truncations: Vec<(f64, Arc<Mesh>)>,
}

fn shell_radius(scale: f64, k: usize, per_octave: usize) -> f64 {
    let (q, r) = (k / per_octave, k % per_octave);
    2.0 * scale * 2f64.powi(q as i32) * 2f64.powf(r as f64 / per_octave as f64)
}

impl ProfileDomain {
    pub fn build(patch: &PatchSpec, numerics: &ProfileNumerics) -> Result<Self> {
        numerics.validate()?;
        patch.validate()?;
        let scale = patch.circumradius();
        let outer = numerics.r_outer * scale;
        let n_shells = ((numerics.r_outer / 2.0).log2() * numerics.shells_per_octave as f64).round() as usize;
        let shells: Vec<f64> = (1..=n_shells).map(|k| shell_radius(scale, k, numerics.shells_per_octave)).collect();
        let size = SizeField::uniform(f64::INFINITY).with_origin(numerics.h_core, numerics.far_slope).with_rim(
            patch,
            1.0,
            numerics.h_rim,
            numerics.rim_slope,
        )?;
        let mut shells = shells;
        *shells.last_mut().unwrap() = outer;
        let mesh = HalfBallBuilder::new(outer, numerics.h_core).shells(2.0 * scale, shells).size_field(size).build()?;
        let mesh = Arc::new(mesh);
        let mut truncations = Vec::new();
        for &m in &numerics.r_list {
            let r = m * scale;
            truncations.push((r, Arc::new(truncate(&mesh, r)?)));
        }
        truncations.push((outer, mesh));
        log::info!(
            "profile domain: {} cells on B_{outer}+, truncations {:?}",
            truncations.last().unwrap().1.n_cells(),
            truncations.iter().map(|t| t.0).collect::<Vec<_>>()
        );
        Ok(ProfileDomain { patch: patch.clone(), scale, truncations })
    }

    pub fn radii(&self) -> Vec<f64> {
        self.truncations.iter().map(|t| t.0).collect()
    }

    pub fn outer_radius(&self) -> f64 {
        self.truncations.last().unwrap().0
    }

    pub fn mesh(&self, r: f64) -> Result<&Arc<Mesh>> {
        self.truncations
            .iter()
            .find(|t| (t.0 - r).abs() <= 1e-9 * r)
            .map(|t| &t.1)
            .ok_or_else(|| Error::InvalidArgument(format!("no embedded truncation sphere at R = {r}")))
    }

    pub fn outer_mesh(&self) -> &Arc<Mesh> {
        &self.truncations.last().unwrap().1
    }

    /// Neumann on the patch, artificial elsewhere on the cap, Dirichlet on
    /// the rest of the flat face.
    pub fn tagged(&self, r: f64) -> Result<TaggedMesh> {
        tag_boundary_with(self.mesh(r)?, &self.patch, 1.0, TagOptions { artificial_outer: true })
    }
}

/// Cells of `mesh` inside the sphere of radius `r` (which must be embedded).
fn truncate(mesh: &Mesh, r: f64) -> Result<Mesh> {
    let mut map = vec![usize::MAX; mesh.n_vertices()];
    let mut coords = Vec::new();
    let mut cells = Vec::new();
    let dim = mesh.dim();
    for c in 0..mesh.n_cells() {
        let cen = mesh.cell_centroid(c);
        if (cen[0] * cen[0] + cen[1] * cen[1] + cen[2] * cen[2]).sqrt() >= r {
            continue;
        }
        for &v in mesh.cell(c) {
            if map[v] == usize::MAX {
                map[v] = coords.len() / dim;
                coords.extend_from_slice(mesh.vertex(v));
            }
            cells.push(map[v]);
        }
    }
    let sub = Mesh::new(dim, coords, cells)?;
    // every curved boundary vertex must sit on the sphere
    for f in 0..sub.n_facets() {
        if sub.facet_barycenter(f)[dim - 1] > 1e-12 {
            for &v in sub.facet(f) {
                let rv = sub.vertex(v).iter().map(|x| x * x).sum::<f64>().sqrt();
                if (rv - r).abs() > 1e-9 * r {
                    return Err(Error::InvalidArgument(format!("sphere of radius {r} is not embedded in the mesh")));
                }
            }
        }
    }
    Ok(sub)
}

#[derive(Clone, Debug)]
pub struct ProfileSolution {
    /// Discrete w₀ on B_R⁺ (zero on the cap and off the patch).
    pub field: Field,
    /// ½ ∫_Π w₀ ∂_ν ψ.
    pub m_boundary: f64,
    /// −½ ∫ |∇w₀|².
    pub m_energy: f64,
    pub truncation_radius: f64,
    pub psi: PsiSpec,
    pub linear_residual: f64,
}

/// Neumann datum −∂_ν ψ = ∂_{x_N} ψ on the flat face.
fn neumann_datum(psi: &PsiSpec) -> impl Fn(&[f64]) -> f64 {
    let dz = psi.poly().derivative(2);
    move |x: &[f64]| dz.eval(&[x[0], x[1], 0.0])
}

fn facet_degree(psi: &PsiSpec) -> usize {
    if psi.gamma <= 2 {
        2
    } else {
        4
    }
}

pub fn solve_w0_on(domain: &ProfileDomain, psi: &PsiSpec, r: f64, tol: f64) -> Result<ProfileSolution> {
    let tagged = domain.tagged(r)?;
    let mesh = tagged.mesh().clone();
    let k = stiffness_matrix(&mesh)?;
    let sys = ConstrainedSystem::from_tagged(&tagged, &k, &k)?;
    let load = assemble_neumann_load(&tagged, neumann_datum(psi), facet_degree(psi))?;
    let (w, sol) = solve_linear(&sys, &k, &load, None, tol, LinearMethod::Direct)?;
    let m_boundary = -0.5 * dot(&load, &w);
    let m_energy = -0.5 * k.quadratic_form(&w);
    Ok(ProfileSolution {
        field: Field::new(mesh, w)?,
        m_boundary,
        m_energy,
        truncation_radius: r,
        psi: psi.clone(),
        linear_residual: sol.residual,
    })
}

/// Standalone solve on B_R⁺ with R = `r_multiple` · circumradius and mesh
/// size `h` at the origin (rim size h/5).
pub fn solve_w0(patch: &PatchSpec, psi: &PsiSpec, r_multiple: f64, h: f64) -> Result<ProfileSolution> {
    if r_multiple < 8.0 {
        return Err(Error::InvalidArgument("standalone profile solves need R >= 8 patch radii".into()));
    }
    let numerics = ProfileNumerics {
        r_list: vec![r_multiple / 2.0, r_multiple],
        r_outer: r_multiple,
        h_core: h,
        h_rim: h / 5.0,
        ..ProfileNumerics::default()
    };
    let domain = ProfileDomain::build(patch, &numerics)?;
    solve_w0_on(&domain, psi, domain.outer_radius(), numerics.linear_tol)
}

/// (m_boundary, m_energy); the reported m is m_energy.
pub fn compute_m(sol: &ProfileSolution) -> (f64, f64) {
    (sol.m_boundary, sol.m_energy)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MRecord {
    pub r: f64,
    pub m_boundary: f64,
    pub m_energy: f64,
    pub dual_rel_diff: f64,
    pub n_vertices: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingCheck {
    pub factor: f64,
    pub m_ratio: f64,
    pub expected: f64,
    pub rel_error: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoefficientReport {
    pub patch: PatchSpec,
    pub psi: PsiSpec,
    pub r_list: Vec<f64>,
    pub m_values: Vec<MRecord>,
    /// Richardson extrapolation of the last two radii with exponent p.
    pub m_extrapolated: f64,
    /// Same from the first two radii (spread indicates extrapolation error).
    pub m_extrapolated_coarse: f64,
    pub assumed_order: f64,
    /// log2 of successive difference ratios (when radii double), if available.
    pub observed_order: Option<f64>,
    #[serde(rename = "C")]
    pub c: f64,
    pub scaling: Vec<ScalingCheck>,
    pub warnings: Vec<String>,
}

/// m∞ from m(R₁), m(R₂) assuming m(R) = m∞ + A R^{−p}.
pub fn richardson(r1: f64, m1: f64, r2: f64, m2: f64, p: f64) -> f64 {
    let t = (r2 / r1).powf(p);
    (t * m2 - m1) / (t - 1.0)
}

fn m_sequence(domain: &ProfileDomain, psi: &PsiSpec, numerics: &ProfileNumerics) -> Result<Vec<MRecord>> {
    let mut out = Vec::new();
    for &m in &numerics.r_list {
        let r = m * domain.scale;
        let sol = solve_w0_on(domain, psi, r, numerics.linear_tol)?;
        let dual = (sol.m_boundary - sol.m_energy).abs() / sol.m_energy.abs().max(f64::MIN_POSITIVE);
        out.push(MRecord {
            r,
            m_boundary: sol.m_boundary,
            m_energy: sol.m_energy,
            dual_rel_diff: if sol.m_energy == 0.0 { 0.0 } else { dual },
            n_vertices: sol.field.mesh().n_vertices(),
        });
    }
    for w in out.windows(2) {
        let tol = 1e-10 * w[0].m_energy.abs().max(w[1].m_energy.abs());
        if w[1].m_energy > w[0].m_energy + tol {
            return Err(Error::NonMonotoneTruncation {
                r_small: w[0].r,
                m_small: w[0].m_energy,
                r_large: w[1].r,
                m_large: w[1].m_energy,
            });
        }
    }
    Ok(out)
}

fn extrapolate(records: &[MRecord], p: f64) -> (f64, f64, Option<f64>) {
    let n = records.len();
    let fine = richardson(records[n - 2].r, records[n - 2].m_energy, records[n - 1].r, records[n - 1].m_energy, p);
    let coarse = richardson(records[0].r, records[0].m_energy, records[1].r, records[1].m_energy, p);
    let observed = if n >= 3 {
        let d1 = records[n - 3].m_energy - records[n - 2].m_energy;
        let d2 = records[n - 2].m_energy - records[n - 1].m_energy;
        let ratio = records[n - 2].r / records[n - 3].r;
        if d1 > 0.0 && d2 > 0.0 {
            Some((d1 / d2).ln() / ratio.ln())
        } else {
            None
        }
    } else {
        None
    };
    (fine, coarse, observed)
}

/// m(R) over the configured radii, extrapolated R → ∞, and C = −2 m∞.
pub fn compute_c(patch: &PatchSpec, psi: &PsiSpec, numerics: &ProfileNumerics) -> Result<CoefficientReport> {
    let domain = ProfileDomain::build(patch, numerics)?;
    compute_c_on(&domain, psi, numerics)
}

pub fn compute_c_on(domain: &ProfileDomain, psi: &PsiSpec, numerics: &ProfileNumerics) -> Result<CoefficientReport> {
    let mut warnings = Vec::new();
    if psi.is_zero() {
        warnings.push("psi = 0: empty problem, C = 0".to_string());
    }
    let records = m_sequence(domain, psi, numerics)?;
    let p = psi.rate_exponent() as f64;
    let (m_ext, m_coarse, observed) = extrapolate(&records, p);
    let m_ext = if psi.is_zero() { 0.0 } else { m_ext };
    if let Some(q) = observed {
        if (q - p).abs() > 1.0 {
            warnings.push(format!("observed truncation order {q:.2} differs from the assumed {p}"));
        }
    }
    let mut scaling = Vec::new();
    if numerics.scaling_check && !psi.is_zero() {
        for factor in [0.5, 2.0] {
            let other = compute_c(
                &domain.patch.scaled(factor),
                psi,
                &ProfileNumerics { scaling_check: false, ..numerics.clone() },
            )?;
            let ratio = other.m_extrapolated / m_ext;
            let expected = factor.powf(p);
            scaling.push(ScalingCheck {
                factor,
                m_ratio: ratio,
                expected,
                rel_error: (ratio - expected).abs() / expected,
            });
        }
    }
    Ok(CoefficientReport {
        patch: domain.patch.clone(),
        psi: psi.clone(),
        r_list: records.iter().map(|r| r.r).collect(),
        m_values: records,
        m_extrapolated: m_ext,
        m_extrapolated_coarse: if psi.is_zero() { 0.0 } else { m_coarse },
        assumed_order: p,
        observed_order: observed,
        c: -2.0 * m_ext,
        scaling,
        warnings,
    })
}

/// U = ψ + w₀ on the outer mesh.
pub fn solve_u(domain: &ProfileDomain, psi: &PsiSpec, tol: f64) -> Result<Field> {
    let sol = solve_w0_on(domain, psi, domain.outer_radius(), tol)?;
    let p = psi.poly();
    let mesh = sol.field.mesh().clone();
    let vals: Vec<f64> = (0..mesh.n_vertices()).map(|v| p.eval(mesh.vertex(v)) + sol.field.values()[v]).collect();
    Field::new(mesh, vals)
}

/// Harmonic field with Dirichlet data `lift` on the constrained vertices of
/// `tagged` (natural condition on its Neumann facets).
fn harmonic_with_lift(tagged: &TaggedMesh, k: &SparseMatrix, lift: Vec<f64>, tol: f64) -> Result<Field> {
    let sys = ConstrainedSystem::from_tagged(tagged, k, k)?;
    let zero = vec![0.0; lift.len()];
    let (u, _) = solve_linear(&sys, k, &zero, Some(&lift), tol, LinearMethod::Direct)?;
    Field::new(tagged.mesh().clone(), u)
}

/// U_R: harmonic on B_R⁺, = ψ on ∂B_R⁺ ∖ Σ, natural condition on Σ.
pub fn solve_u_r(domain: &ProfileDomain, psi: &PsiSpec, r: f64, tol: f64) -> Result<Field> {
    let tagged = domain.tagged(r)?;
    let mesh = tagged.mesh().clone();
    let k = stiffness_matrix(&mesh)?;
    let p = psi.poly();
    let lift: Vec<f64> = (0..mesh.n_vertices()).map(|v| p.eval(mesh.vertex(v))).collect();
    harmonic_with_lift(&tagged, &k, lift, tol)
}

/// Z_R: harmonic on B_R⁺, zero on the whole flat disk, = U on S_R⁺.
/// `u` must live on a mesh that contains B_R⁺ with the sphere embedded.
pub fn solve_z_r(domain: &ProfileDomain, r: f64, u: &Field, tol: f64) -> Result<Field> {
    let mesh = domain.mesh(r)?.clone();
    let tagged = crate::geometry::tag_dirichlet(&mesh);
    let k = stiffness_matrix(&mesh)?;
    let mut lift = vec![0.0; mesh.n_vertices()];
    for (v, l) in lift.iter_mut().enumerate() {
        let x = mesh.vertex(v);
        if x[2] > 1e-12 {
            let rv = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            if (rv - r).abs() <= 1e-9 * r {
                *l = u.evaluate(x).ok_or(Error::OutsideMesh(rv))?;
            }
        }
    }
    harmonic_with_lift(&tagged, &k, lift, tol)
}

/// g_R = ∫_{B_R⁺}|∇U_R|² − ∫_{B_R⁺}|∇ψ|². The ψ energy is that of its nodal
/// interpolant on the same mesh (see the design notes in the README).
pub fn compute_g_r(domain: &ProfileDomain, psi: &PsiSpec, r: f64, tol: f64) -> Result<f64> {
    let ur = solve_u_r(domain, psi, r, tol)?;
    let p = psi.poly();
    let psi_h = Field::from_fn(ur.mesh().clone(), |x| p.eval(x));
    Ok(ur.energy() - psi_h.energy())
}

/// χ(r) = ∫_{S₁⁺} U(rθ) Ψ(θ) dθ.
pub fn compute_chi(u: &Field, psi: &PsiSpec, r: f64) -> Result<f64> {
    let rule = HemisphereRule::standard();
    let p = psi.poly();
    let mut sum = 0.0;
    for (t, w) in rule.points.iter().zip(&rule.weights) {
        let x = [r * t[0], r * t[1], r * t[2]];
        let val = u.evaluate(&x).ok_or(Error::OutsideMesh(r))?;
        sum += w * val * p.eval(t);
    }
    Ok(sum)
}

/// Closed form χ(r) = π₀ r^γ − 2m/(N+2γ−2) · r^{−(N+γ−2)}.
pub fn chi_prediction(psi: &PsiSpec, m: f64, r: f64) -> f64 {
    let g = psi.gamma as i32;
    psi.pi0 * r.powi(g) - 2.0 * m / psi.rate_exponent() as f64 * r.powi(-(3 + g - 2))
}

/// ∫_{S_R⁺} ψ ∂_ν U, evaluated through Green's identity as ∫_{B_R⁺} ∇U·∇ψ
/// (ψ vanishes on the flat face, U is harmonic). The ψ–ψ part is exact;
/// only ∫∇(U − ψ)·∇ψ is taken from the mesh. `u` must live on a mesh in
/// which the sphere of radius R is embedded.
pub fn compute_flux_identity(u: &Field, psi: &PsiSpec, r: f64) -> Result<f64> {
    let mesh = u.mesh();
    let p = psi.poly();
    let psi_h = Field::from_fn(mesh.clone(), |x| p.eval(x));
    let mut sum = 0.0;
    let mut found = false;
    for c in 0..mesh.n_cells() {
        let cen = mesh.cell_centroid(c);
        if (cen[0] * cen[0] + cen[1] * cen[1] + cen[2] * cen[2]).sqrt() >= r {
            continue;
        }
        found = true;
        let gu = u.cell_gradient(c);
        let gp = psi_h.cell_gradient(c);
        sum += mesh.cell_volume(c) * ((gu[0] - gp[0]) * gp[0] + (gu[1] - gp[1]) * gp[1] + (gu[2] - gp[2]) * gp[2]);
    }
    if !found {
        return Err(Error::OutsideMesh(r));
    }
    Ok(p.energy(r) + sum)
}

/// π₀ γ R^{N+2γ−2} + 2(N+γ−2) m / (N+2γ−2).
pub fn flux_prediction(psi: &PsiSpec, m: f64, r: f64) -> f64 {
    let g = psi.gamma as i32;
    let p = psi.rate_exponent();
    psi.pi0 * g as f64 * r.powi(p) + 2.0 * (3 + g - 2) as f64 * m / p as f64
}

/// Number of vertices on the patch side of the flat face (diagnostics).
pub fn neumann_facet_count(domain: &ProfileDomain, r: f64) -> Result<usize> {
    Ok(domain.tagged(r)?.count(FacetTag::Neumann))
}
