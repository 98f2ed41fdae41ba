//! Limit (Dirichlet) and perturbed (mixed) eigenproblems, plus the blow-up
//! data at the origin: vanishing order γ and polynomial ψ.

use std::sync::Arc;

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{
    assemble_mass, assemble_stiffness, solve_generalized_eig, ConstrainedSystem, EigenOptions, Field, SparseMatrix,
};
use crate::frequency::{frequency_series_with, FrequencyOptions, FrequencySeries};
use crate::geometry::{FacetTag, Mesh, TaggedMesh};
use crate::poly::{monomials, odd_harmonic_basis, Poly};

#[derive(Clone, Debug)]
pub struct EigenPair {
    pub value: f64,
    /// Full nodal field (zero on constrained vertices), M-normalized.
    pub field: Field,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct SpectrumResult {
    pub epsilon: f64,
    pub eigenpairs: Vec<EigenPair>,
    pub mesh_fingerprint: u64,
    pub warnings: Vec<String>,
    /// Full mass matrix, kept for inner products between fields.
    pub mass: Arc<SparseMatrix>,
}

impl SpectrumResult {
    pub fn values(&self) -> Vec<f64> {
        self.eigenpairs.iter().map(|p| p.value).collect()
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        self.eigenpairs[0].field.mesh()
    }

    /// Refuses index `n0` (1-based) when its relative gap to the neighbours
    /// is below `threshold`.
    pub fn check_simple(&self, n0: usize, threshold: f64) -> Result<()> {
        if n0 == 0 || n0 > self.eigenpairs.len() {
            return Err(Error::InvalidArgument(format!("index {n0} outside the computed spectrum")));
        }
        let v = self.values();
        let l = v[n0 - 1];
        let mut gap = f64::INFINITY;
        if n0 >= 2 {
            gap = gap.min(l - v[n0 - 2]);
        }
        if n0 < v.len() {
            gap = gap.min(v[n0] - l);
        } else {
            return Err(Error::InvalidArgument(format!(
                "need eigenvalue {} to check that eigenvalue {n0} is simple",
                n0 + 1
            )));
        }
        if gap < threshold * l {
            return Err(Error::NotSimple { index: n0, gap: gap / l, threshold });
        }
        Ok(())
    }
}

/// Relative gap threshold for the simplicity requirement on λ_{n0}.
pub const SIMPLICITY_GAP: f64 = 1e-3;

fn solve(tagged: &TaggedMesh, count: usize, opts: &EigenOptions) -> Result<SpectrumResult> {
    let k = assemble_stiffness(tagged)?;
    let m = assemble_mass(tagged)?;
    let sys = ConstrainedSystem::from_tagged(tagged, &k, &m)?;
    let sol = solve_generalized_eig(&sys.k, &sys.m, count, opts)?;
    let mesh = tagged.mesh().clone();
    let eigenpairs = sol
        .values
        .iter()
        .zip(&sol.vectors)
        .zip(&sol.residuals)
        .map(|((&value, vec), &residual)| {
            let full = sys.expand(vec, None);
            Ok(EigenPair { value, field: Field::new(mesh.clone(), full)?, residual })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumResult {
        epsilon: tagged.epsilon(),
        eigenpairs,
        mesh_fingerprint: mesh.fingerprint(),
        warnings: sol.warnings,
        mass: Arc::new(m),
    })
}

/// Orients a limit eigenfield so that its largest-magnitude nodal value is
/// positive (deterministic; for φ₁ this makes it positive).
fn orient_by_peak(p: &mut EigenPair) {
    let v = p.field.values();
    let peak = v.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
    if peak < 0.0 {
        p.field = p.field.scaled(-1.0);
    }
}

pub fn compute_dirichlet_eigs(tagged: &TaggedMesh, count: usize, opts: &EigenOptions) -> Result<SpectrumResult> {
    if tagged.count(FacetTag::Neumann) > 0 {
        return Err(Error::InvalidArgument("limit problem needs a tagging without Neumann facets".into()));
    }
    let mut res = solve(tagged, count, opts)?;
    for p in res.eigenpairs.iter_mut() {
        orient_by_peak(p);
    }
    Ok(res)
}

/// Perturbed eigenpairs. When `reference` (a limit spectrum on the same
/// mesh) is given, each φ_i^ε is oriented so that ∫ φ_i^ε φ_i ≥ 0.
pub fn compute_mixed_eigs(
    tagged: &TaggedMesh,
    count: usize,
    opts: &EigenOptions,
    reference: Option<&SpectrumResult>,
) -> Result<SpectrumResult> {
    let mut res = solve(tagged, count, opts)?;
    match reference {
        Some(r) => {
            if r.mesh_fingerprint != res.mesh_fingerprint {
                return Err(Error::InvalidArgument("reference spectrum lives on a different mesh".into()));
            }
            let m = res.mass.clone();
            for (p, q) in res.eigenpairs.iter_mut().zip(&r.eigenpairs) {
                if m.bilinear(p.field.values(), q.field.values()) < 0.0 {
                    p.field = p.field.scaled(-1.0);
                }
            }
        }
        None => res.eigenpairs.iter_mut().for_each(orient_by_peak),
    }
    Ok(res)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VanishingOrder {
    /// Frequency at the smallest radius (unrounded).
    pub gamma_hat: f64,
    /// γ̂ rounded to the nearest positive integer.
    pub gamma: u32,
    pub series: FrequencySeries,
}

pub fn estimate_vanishing_order(phi: &Field, lambda: f64, r_grid: &[f64]) -> Result<VanishingOrder> {
    estimate_vanishing_order_with(phi, lambda, r_grid, &FrequencyOptions::default())
}

pub fn estimate_vanishing_order_with(
    phi: &Field,
    lambda: f64,
    r_grid: &[f64],
    opts: &FrequencyOptions,
) -> Result<VanishingOrder> {
    if r_grid.is_empty() {
        return Err(Error::InvalidArgument("empty radius grid".into()));
    }
    let mut radii = r_grid.to_vec();
    radii.sort_by(f64::total_cmp);
    let series = frequency_series_with(phi, lambda, &radii, opts)?;
    let gamma_hat = series.n_values[0];
    let gamma = gamma_hat.round().max(1.0) as u32;
    log::info!("vanishing order: N(r_min = {}) = {gamma_hat:.4}, rounded to {gamma}", radii[0]);
    Ok(VanishingOrder { gamma_hat, gamma, series })
}

/// Homogeneous harmonic blow-up polynomial ψ = Σ c_k b_k of degree γ,
/// vanishing on {x_N = 0}, with π₀ = ∫_{S₁⁺} ψ².
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PsiSpec {
    pub gamma: u32,
    pub basis: Vec<Poly>,
    pub coefficients: Vec<f64>,
    pub pi0: f64,
}

impl PsiSpec {
    pub fn new(gamma: u32, coefficients: Vec<f64>) -> Result<Self> {
        if gamma == 0 {
            return Err(Error::InvalidArgument("vanishing order must be positive".into()));
        }
        let basis = odd_harmonic_basis(gamma);
        if coefficients.len() != basis.len() {
            return Err(Error::InvalidArgument(format!(
                "degree {gamma} needs {} coefficients, got {}",
                basis.len(),
                coefficients.len()
            )));
        }
        let mut s = PsiSpec { gamma, basis, coefficients, pi0: 0.0 };
        let p = s.poly();
        s.pi0 = p.mul(&p).hemisphere_integral();
        Ok(s)
    }

    /// ψ = c·x_N.
    pub fn linear(c: f64) -> Self {
        PsiSpec::new(1, vec![c]).expect("degree-1 basis has one element")
    }

    pub fn poly(&self) -> Poly {
        self.basis.iter().zip(&self.coefficients).fold(Poly::zero(), |acc, (b, c)| acc.add(&b.scaled(*c)))
    }

    pub fn scaled(&self, s: f64) -> Self {
        PsiSpec::new(self.gamma, self.coefficients.iter().map(|c| c * s).collect()).expect("same shape")
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(|c| *c == 0.0)
    }

    /// Sum of squared coefficients; for γ = 1 this is c².
    pub fn coefficient_norm_sq(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum()
    }

    /// N + 2γ − 2 with N = 3.
    pub fn rate_exponent(&self) -> i32 {
        3 + 2 * self.gamma as i32 - 2
    }
}

/// Condition number above which the fit is refused.
pub const FIT_CONDITION_LIMIT: f64 = 1e12;

/// Least-squares fit of φ(x)/|x|^γ against the degree-γ odd harmonic basis
/// over the vertices in B⁺_{fit_radius}. Higher-order terms x_N·(monomials
/// of degree γ and γ+1) are fitted alongside as nuisance terms so that the
/// O(|x|^{γ+1}) remainder does not bias the coefficients.
pub fn extract_psi(phi: &Field, gamma: u32, fit_radius: f64) -> Result<PsiSpec> {
    if gamma == 0 {
        return Err(Error::InvalidArgument("vanishing order must be positive".into()));
    }
    let mesh = phi.mesh();
    if mesh.dim() != 3 {
        return Err(Error::Unsupported("extract_psi is implemented for N = 3 only".into()));
    }
    let basis = odd_harmonic_basis(gamma);
    let mut funcs: Vec<Poly> = basis.clone();
    let z = Poly::monomial([0, 0, 1], 1.0);
    for d in [gamma, gamma + 1] {
        for e in monomials(d) {
            funcs.push(z.mul(&Poly::monomial(e, 1.0)));
        }
    }
    let nf = funcs.len();
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for v in 0..mesh.n_vertices() {
        let p = mesh.vertex(v);
        let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        if r > fit_radius || r < 1e-12 * fit_radius.max(1.0) || p[2] <= 0.0 {
            continue;
        }
        let scale = r.powi(-(gamma as i32));
        rows.push((funcs.iter().map(|f| f.eval(p) * scale).collect(), phi.values()[v] * scale));
    }
    if rows.len() < 2 * nf {
        return Err(Error::InvalidArgument(format!(
            "only {} vertices in the fit ball of radius {fit_radius}; need at least {}",
            rows.len(),
            2 * nf
        )));
    }
    // normal equations with column equilibration
    let mut g = Mat::<f64>::zeros(nf, nf);
    let mut rhs = vec![0.0; nf];
    for (a, b) in &rows {
        for i in 0..nf {
            rhs[i] += a[i] * b;
            for j in 0..nf {
                g[(i, j)] += a[i] * a[j];
            }
        }
    }
    let d: Vec<f64> = (0..nf).map(|i| g[(i, i)].sqrt().max(1e-300)).collect();
    let gs = Mat::<f64>::from_fn(nf, nf, |i, j| g[(i, j)] / (d[i] * d[j]));
    let eig = gs.self_adjoint_eigen(Side::Lower).map_err(|_| Error::IllConditioned { condition: f64::INFINITY })?;
    let s = eig.S();
    let (mut smin, mut smax) = (f64::INFINITY, 0.0f64);
    for i in 0..nf {
        smin = smin.min(s[i]);
        smax = smax.max(s[i]);
    }
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition < FIT_CONDITION_LIMIT) {
        return Err(Error::IllConditioned { condition });
    }
    let u = eig.U();
    let bs: Vec<f64> = (0..nf).map(|i| rhs[i] / d[i]).collect();
    let mut y = vec![0.0; nf];
    for k in 0..nf {
        let proj: f64 = (0..nf).map(|i| u[(i, k)] * bs[i]).sum::<f64>() / s[k];
        for i in 0..nf {
            y[i] += u[(i, k)] * proj;
        }
    }
    let coefficients: Vec<f64> = (0..basis.len()).map(|i| y[i] / d[i]).collect();
    log::debug!("extract_psi: {} vertices, condition {condition:.3e}", rows.len());
    PsiSpec::new(gamma, coefficients)
}
