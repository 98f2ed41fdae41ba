//! ε-sweeps on the half-ball and the checks built on them: rate fit,
//! coefficient comparison, sandwich bounds, blow-up norm ratios.

use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{EigenOptions, Field};
use crate::frequency::ball_integrals;
use crate::geometry::{tag_boundary, tag_dirichlet, FacetTag, HalfBallBuilder, Mesh, PatchSpec, SizeField};
use crate::profile::{compute_c, ProfileNumerics};
use crate::spectrum::{
    compute_dirichlet_eigs, compute_mixed_eigs, estimate_vanishing_order, extract_psi, PsiSpec, SpectrumResult,
    SIMPLICITY_GAP,
};

/// Mesh ladder for the sweep: sizes near the patch are multiples of ε.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepMesh {
    pub h_far: f64,
    /// Size on εV as a fraction of ε.
    pub patch_h: f64,
    pub patch_slope: f64,
    /// Size along the rim of εV as a fraction of ε.
    pub rim_h: f64,
    pub rim_slope: f64,
}

impl Default for SweepMesh {
    fn default() -> Self {
        SweepMesh { h_far: 0.1, patch_h: 1.0 / 6.0, patch_slope: 0.15, rim_h: 0.05, rim_slope: 0.25 }
    }
}

impl SweepMesh {
    pub fn build(&self, radius: f64, patch: &PatchSpec, eps: f64) -> Result<Mesh> {
        let size = SizeField::uniform(self.h_far)
            .with_patch(patch, eps, self.patch_h * eps, self.patch_slope)?
            .with_rim(patch, eps, self.rim_h * eps, self.rim_slope)?;
        HalfBallBuilder::new(radius, self.h_far).size_field(size).build()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub radius: f64,
    pub patch: PatchSpec,
    /// Strictly decreasing.
    pub epsilon_list: Vec<f64>,
    /// 1-based index of the eigenvalue followed.
    pub n0: usize,
    pub mesh: SweepMesh,
    pub eigen_tol: f64,
    /// Ball radius for the ψ fit on the finest limit eigenfield.
    pub fit_radius: f64,
    /// Radii for the vanishing-order estimate.
    pub gamma_radii: Vec<f64>,
    /// Solve the profile problem for C_pred (costly).
    pub predict: bool,
    pub profile: ProfileNumerics,
    /// Per-ε records are appended here as JSON lines while the sweep runs.
    #[serde(skip)]
    pub partial_log: Option<PathBuf>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            radius: 1.0,
            patch: PatchSpec::disk(1.0),
            epsilon_list: vec![0.4, 0.3, 0.2, 0.15, 0.1],
            n0: 1,
            mesh: SweepMesh::default(),
            eigen_tol: 1e-8,
            fit_radius: 0.3,
            gamma_radii: vec![0.15, 0.2, 0.3],
            predict: false,
            profile: ProfileNumerics::default(),
            partial_log: None,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.patch.validate()?;
        if self.epsilon_list.is_empty() {
            return Err(Error::InvalidArgument("epsilon_list is empty".into()));
        }
        if self.epsilon_list.windows(2).any(|w| !(w[1] < w[0])) || self.epsilon_list.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::InvalidArgument("epsilon_list must be positive and strictly decreasing".into()));
        }
        let emax = self.epsilon_list[0];
        if !(emax < 1.0 && emax * self.patch.diameter() < self.radius) {
            return Err(Error::InvalidArgument(format!(
                "diameter constraint: need ε < 1 and ε·diam(V) < r₀, got ε = {emax}, ε·diam(V) = {}, r₀ = {}",
                emax * self.patch.diameter(),
                self.radius
            )));
        }
        if self.n0 == 0 {
            return Err(Error::InvalidArgument("n0 is 1-based".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpsRecord {
    pub epsilon: f64,
    pub lambda_eps: f64,
    pub lambda: f64,
    pub d: f64,
    /// d / ε^{N+2γ−2}
    pub c_emp: f64,
    pub mesh_fingerprint: u64,
    pub n_vertices: usize,
    pub n_neumann_facets: usize,
    /// All i ≤ count satisfy λ_i^ε ≤ λ_i on this mesh.
    pub nested_inequality: bool,
    pub residual_max: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub intercept_stderr: f64,
}

/// Ordinary least squares of ln d against ln ε.
pub fn fit_rate(eps: &[f64], d: &[f64]) -> Result<RateFit> {
    if eps.len() != d.len() {
        return Err(Error::InvalidArgument("eps and d differ in length".into()));
    }
    if eps.len() < 3 {
        return Err(Error::InvalidArgument(format!("rate fit needs at least 3 points, got {}", eps.len())));
    }
    if let Some(bad) = d.iter().find(|x| !(**x > 0.0)) {
        return Err(Error::InvalidArgument(format!("rate fit needs positive d, got {bad}")));
    }
    if eps.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidArgument("rate fit needs positive ε".into()));
    }
    let x: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let y: Vec<f64> = d.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(&y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let s2 = rss / (n - 2.0);
    let slope_stderr = (s2 / sxx).sqrt();
    let intercept_stderr = (s2 * (1.0 / n + mx * mx / sxx)).sqrt();
    Ok(RateFit { slope, intercept, slope_stderr, intercept_stderr })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepResult {
    pub records: Vec<EpsRecord>,
    pub gamma_hat: f64,
    pub gamma: u32,
    pub psi: PsiSpec,
    /// ψ coefficient c (γ = 1: ψ = c·x_N).
    pub c: f64,
    pub fit: Option<RateFit>,
    pub exponent: i32,
    /// C(patch, ψ) from the profile problem, when requested.
    pub c_pred: Option<f64>,
    pub warnings: Vec<String>,
    /// Perturbed eigenfields φ_{n0}^ε, same order as `records`.
    #[serde(skip)]
    pub fields: Vec<Field>,
    /// Limit eigenfield φ_{n0} on the finest mesh.
    #[serde(skip)]
    pub limit_field: Option<Field>,
}

impl SweepResult {
    pub fn record(&self, eps: f64) -> Option<&EpsRecord> {
        self.records.iter().find(|r| (r.epsilon - eps).abs() <= 1e-12 * eps)
    }

    pub fn field(&self, eps: f64) -> Option<&Field> {
        self.records.iter().position(|r| (r.epsilon - eps).abs() <= 1e-12 * eps).map(|i| &self.fields[i])
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "epsilon,lambda_eps,lambda,d,C_emp")?;
        for r in &self.records {
            writeln!(out, "{:?},{:?},{:?},{:?},{:?}", r.epsilon, r.lambda_eps, r.lambda, r.d, r.c_emp)?;
        }
        Ok(())
    }

    /// Two-column (ln ε, ln d) data for log-log plots.
    pub fn write_plot_data<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# ln(epsilon) ln(d)")?;
        for r in &self.records {
            writeln!(out, "{:?} {:?}", r.epsilon.ln(), r.d.ln())?;
        }
        Ok(())
    }
}

struct EpsOutcome {
    record: EpsRecord,
    field: Field,
    limit: SpectrumResult,
}

fn run_one(config: &SweepConfig, eps: f64, count: usize, opts: &EigenOptions) -> Result<EpsOutcome> {
    let mesh = Arc::new(config.mesh.build(config.radius, &config.patch, eps)?);
    let dir = tag_dirichlet(&mesh);
    let mixed = tag_boundary(&mesh, &config.patch, eps)?;
    let limit = compute_dirichlet_eigs(&dir, count, opts)?;
    let pert = compute_mixed_eigs(&mixed, count, opts, Some(&limit))?;
    let i = config.n0 - 1;
    let (lambda, lambda_eps) = (limit.eigenpairs[i].value, pert.eigenpairs[i].value);
    let nested = limit.values().iter().zip(pert.values()).all(|(a, b)| b <= a * (1.0 + 1e-12));
    let residual_max = limit.eigenpairs.iter().chain(&pert.eigenpairs).map(|p| p.residual).fold(0.0, f64::max);
    let record = EpsRecord {
        epsilon: eps,
        lambda_eps,
        lambda,
        d: lambda - lambda_eps,
        c_emp: f64::NAN,
        mesh_fingerprint: mesh.fingerprint(),
        n_vertices: mesh.n_vertices(),
        n_neumann_facets: mixed.count(FacetTag::Neumann),
        nested_inequality: nested,
        residual_max,
    };
    log::info!(
        "ε = {eps}: λ = {lambda:.8}, λ^ε = {lambda_eps:.8}, d = {:.6e}, {} vertices",
        record.d,
        record.n_vertices
    );
    if let Some(path) = &config.partial_log {
        let mut f = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
        writeln!(f, "{}", serde_json::to_string(&record).map_err(|e| Error::Parse(e.to_string()))?)?;
    }
    Ok(EpsOutcome { record, field: pert.eigenpairs[i].field.clone(), limit })
}

pub fn run_epsilon_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let count = config.n0 + 1;
    let opts = EigenOptions { tol: config.eigen_tol, ..EigenOptions::default() };
    let outcomes: Vec<EpsOutcome> =
        config.epsilon_list.par_iter().map(|&eps| run_one(config, eps, count, &opts)).collect::<Result<_>>()?;
    let finest = outcomes.last().unwrap();
    finest.limit.check_simple(config.n0, SIMPLICITY_GAP)?;
    let phi = &finest.limit.eigenpairs[config.n0 - 1];
    let order = estimate_vanishing_order(&phi.field, phi.value, &config.gamma_radii)?;
    let psi = extract_psi(&phi.field, order.gamma, config.fit_radius)?;
    let exponent = psi.rate_exponent();
    let mut warnings = Vec::new();
    let mut records = Vec::new();
    let mut fields = Vec::new();
    for o in &outcomes {
        let mut r = o.record.clone();
        r.c_emp = r.d / r.epsilon.powi(exponent);
        if !r.nested_inequality {
            warnings.push(format!("ε = {}: λ_i^ε ≤ λ_i violated on a shared mesh", r.epsilon));
        }
        records.push(r);
        fields.push(o.field.clone());
    }
    let eps: Vec<f64> = records.iter().map(|r| r.epsilon).collect();
    let d: Vec<f64> = records.iter().map(|r| r.d).collect();
    let fit = if eps.len() >= 3 && d.iter().all(|x| *x > 0.0) { Some(fit_rate(&eps, &d)?) } else { None };
    if fit.is_none() {
        warnings.push("rate fit skipped (fewer than 3 points or nonpositive d)".into());
    }
    let c_pred = if config.predict { Some(compute_c(&config.patch, &psi, &config.profile)?.c) } else { None };
    let c = psi.coefficients[0];
    Ok(SweepResult {
        records,
        gamma_hat: order.gamma_hat,
        gamma: order.gamma,
        psi,
        c,
        fit,
        exponent,
        c_pred,
        warnings,
        fields,
        limit_field: Some(phi.field.clone()),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SandwichReport {
    pub r_v: f64,
    pub big_r_v: f64,
    /// c²·C(B₁′, unit ψ)
    pub c_disk: f64,
    pub lower: f64,
    pub upper: f64,
    pub c_emp: f64,
    pub epsilon: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Checks C r_V^p (1 − tol) ≤ C_emp(ε_min) ≤ C R_V^p (1 + tol) where
/// C = c²·C(B₁′, unit ψ), r_V / R_V the inscribed / circumscribed radii.
pub fn sandwich_check(sweep: &SweepResult, patch: &PatchSpec, c_unit_disk: f64, tol: f64) -> Result<SandwichReport> {
    if sweep.gamma != 1 {
        return Err(Error::Unsupported("sandwich check is implemented for γ = 1".into()));
    }
    let last = sweep.records.last().ok_or_else(|| Error::InvalidArgument("empty sweep".into()))?;
    let (r_v, big_r_v) = (patch.inradius(), patch.circumradius());
    if !(r_v > 0.0 && big_r_v.is_finite()) {
        return Err(Error::InvalidPatch("inscribed/circumscribed radii not computable".into()));
    }
    let p = sweep.exponent;
    let c_disk = sweep.c * sweep.c * c_unit_disk;
    let lower = c_disk * r_v.powi(p) * (1.0 - tol);
    let upper = c_disk * big_r_v.powi(p) * (1.0 + tol);
    Ok(SandwichReport {
        r_v,
        big_r_v,
        c_disk,
        lower,
        upper,
        c_emp: last.c_emp,
        epsilon: last.epsilon,
        tol,
        pass: lower <= last.c_emp && last.c_emp <= upper,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlowupRow {
    pub epsilon: f64,
    pub ratio_l2: f64,
    pub ratio_h1: f64,
    /// ‖φ^ε‖²_{L²(Ω)}; the ratios assume 1.
    pub norm_sq: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlowupReport {
    pub r: f64,
    pub rows: Vec<BlowupRow>,
    pub tol: f64,
    /// Both ratios within tol of 1 at the smallest ε.
    pub within_tol: bool,
    /// |ratio − 1| decreases from the second-smallest to the smallest ε.
    pub improving: bool,
    pub pass: bool,
    pub warnings: Vec<String>,
}

const CLIP_DEPTH: u32 = 4;

/// ∫_{B_R⁺} |∇U|² and ∫_{B_R⁺} U².
pub fn profile_norms(u: &Field, r: f64) -> (f64, f64) {
    ball_integrals(u, r, CLIP_DEPTH)
}

/// ratio_L2 = ε^{−N−2γ} ∫_{B_{Rε}⁺}|φ^ε|² / ∫_{B_R⁺}U²,
/// ratio_H1 = ε^{−N−2γ+2} ∫_{B_{Rε}⁺}|∇φ^ε|² / ∫_{B_R⁺}|∇U|².
pub fn blowup_ratios(phi: &Field, eps: f64, gamma: u32, r: f64, u_norms: (f64, f64)) -> BlowupRow {
    let g = gamma as i32;
    let (pg, pm) = ball_integrals(phi, r * eps, CLIP_DEPTH);
    BlowupRow {
        epsilon: eps,
        ratio_l2: eps.powi(-3 - 2 * g) * pm / u_norms.1,
        ratio_h1: eps.powi(-1 - 2 * g) * pg / u_norms.0,
        norm_sq: phi.l2_norm_sq(),
    }
}

/// Blow-up ratios for the two smallest ε of the sweep. `u` is the limit
/// profile U = ψ + w₀ for the sweep's ψ.
pub fn blowup_norm_check(sweep: &SweepResult, r: f64, u: &Field, tol: f64) -> Result<BlowupReport> {
    let n = sweep.records.len();
    if n < 2 {
        return Err(Error::InvalidArgument("blow-up check needs two ε values".into()));
    }
    let pair = [sweep.records[n - 2].epsilon, sweep.records[n - 1].epsilon];
    blowup_norm_check_at(sweep, pair, r, u, tol)
}

/// As [`blowup_norm_check`], comparing the coarser ε `pair[0]` against the
/// finer `pair[1]`.
pub fn blowup_norm_check_at(sweep: &SweepResult, pair: [f64; 2], r: f64, u: &Field, tol: f64) -> Result<BlowupReport> {
    if !(pair[1] < pair[0]) {
        return Err(Error::InvalidArgument("blow-up pair must be (coarse ε, fine ε)".into()));
    }
    let norms = profile_norms(u, r);
    let rows: Vec<BlowupRow> = pair
        .iter()
        .map(|&eps| {
            let phi =
                sweep.field(eps).ok_or_else(|| Error::InvalidArgument(format!("sweep has no field for ε = {eps}")))?;
            Ok(blowup_ratios(phi, eps, sweep.gamma, r, norms))
        })
        .collect::<Result<_>>()?;
    let mut warnings = Vec::new();
    for row in &rows {
        if (row.norm_sq - 1.0).abs() > 1e-6 {
            warnings
                .push(format!("ε = {}: φ^ε has ‖φ‖² = {:.6}, ratios are off by that factor", row.epsilon, row.norm_sq));
        }
    }
    let dev = |row: &BlowupRow| (row.ratio_l2 - 1.0).abs().max((row.ratio_h1 - 1.0).abs());
    let within_tol = dev(&rows[1]) <= tol;
    let improving = (rows[1].ratio_l2 - 1.0).abs() < (rows[0].ratio_l2 - 1.0).abs()
        && (rows[1].ratio_h1 - 1.0).abs() < (rows[0].ratio_h1 - 1.0).abs();
    Ok(BlowupReport { r, rows, tol, within_tol, improving, pass: within_tol && improving, warnings })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckStatus {
    Pass,
    Warn,
    Fail,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub positive: bool,
    pub monotone: bool,
    pub small_at_min: bool,
    pub status: CheckStatus,
    pub notes: Vec<String>,
}

/// d(ε) > 0 on every mesh, nonincreasing as ε decreases (WARN only, since
/// each ε has its own mesh), and d(ε_min) < 0.1 λ_{n0}.
pub fn eigen_convergence_check(sweep: &SweepResult) -> Result<ConvergenceReport> {
    if sweep.records.len() < 3 {
        return Err(Error::InvalidArgument("convergence check needs at least 3 ε values".into()));
    }
    let mut notes = Vec::new();
    let positive = sweep.records.iter().all(|r| r.d > 0.0);
    let monotone = sweep.records.windows(2).all(|w| w[1].d <= w[0].d);
    if !monotone {
        notes.push("d(ε) not monotone across the per-ε meshes (spaces are not nested)".into());
    }
    let last = sweep.records.last().unwrap();
    let small_at_min = last.d < 0.1 * last.lambda;
    let status = if !positive || !small_at_min {
        CheckStatus::Fail
    } else if !monotone {
        CheckStatus::Warn
    } else {
        CheckStatus::Pass
    };
    Ok(ConvergenceReport { positive, monotone, small_at_min, status, notes })
}
