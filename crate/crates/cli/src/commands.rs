use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::ValueEnum;
use mixeig::fem::{EigenOptions, Field};
use mixeig::frequency::frequency_series;
use mixeig::geometry::{
    build_half_ball_mesh, tag_boundary, tag_dirichlet, tag_flat_face_neumann, FacetTag, Mesh, PatchSpec, TaggedMesh,
};
use mixeig::harness::{blowup_norm_check, eigen_convergence_check, run_epsilon_sweep, sandwich_check, SweepResult};
use mixeig::profile::{chi_prediction, compute_c, compute_c_on, compute_chi, solve_u, ProfileDomain};
use mixeig::spectrum::{compute_dirichlet_eigs, compute_mixed_eigs, PsiSpec, SpectrumResult};
use serde::{Deserialize, Serialize};

use crate::config::{Format, RunConfig};
use crate::error::CliError;
use crate::output::{create, envelope, out_path, read_field, write_field, write_json};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bc {
    /// Dirichlet on the whole boundary.
    Dirichlet,
    /// Neumann on εV, Dirichlet elsewhere.
    Mixed,
    /// Neumann on the whole flat face.
    Flat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Check {
    Sandwich,
    Blowup,
    Chi,
    Scaling,
}

fn out_dir(cfg: &RunConfig, out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(|| cfg.outputs.dir.clone())
}

/// Patch-graded ladder mesh for ε > 0, origin-graded mesh for ε = 0.
fn build_mesh(cfg: &RunConfig, eps: f64) -> Result<Arc<Mesh>, CliError> {
    cfg.check_epsilon(eps)?;
    let r = cfg.domain.radius;
    let mesh = if eps > 0.0 {
        cfg.numerics.mesh.build(r, &cfg.patch, eps)?
    } else {
        build_half_ball_mesh(r, cfg.numerics.h_far, cfg.numerics.grading)?
    };
    Ok(Arc::new(mesh))
}

fn tag(cfg: &RunConfig, mesh: &Arc<Mesh>, bc: Bc, eps: f64) -> Result<TaggedMesh, CliError> {
    Ok(match bc {
        Bc::Dirichlet => tag_dirichlet(mesh),
        Bc::Mixed => tag_boundary(mesh, &cfg.patch, eps)?,
        Bc::Flat => tag_flat_face_neumann(mesh)?,
    })
}

pub fn mesh(cfg: &RunConfig, eps: f64, mesh_out: Option<PathBuf>, out: Option<PathBuf>) -> Result<(), CliError> {
    let mesh = build_mesh(cfg, eps)?;
    let tagged = tag(cfg, &mesh, Bc::Mixed, eps)?;
    let path = match mesh_out {
        Some(p) => p,
        None => out_path(&out_dir(cfg, out), "mesh.txt")?,
    };
    let mut w = create(&path)?;
    mixeig::geometry::write_mesh(&tagged, &mut w)?;
    w.flush()?;
    let exact = 2.0 / 3.0 * PI * cfg.domain.radius.powi(3);
    println!("mesh: {} vertices, {} cells, {} boundary facets", mesh.n_vertices(), mesh.n_cells(), mesh.n_facets());
    println!(
        "volume {:.4} (half-ball {:.4}, deficit {:.2}%)",
        mesh.volume(),
        exact,
        100.0 * (1.0 - mesh.volume() / exact)
    );
    println!("min angle {:.2} deg", mesh.min_angle_deg());
    println!(
        "Neumann facets {} (area {:.5}) at ε = {eps}",
        tagged.count(FacetTag::Neumann),
        tagged.area(FacetTag::Neumann) + 0.0
    );
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct EigReport {
    bc: Bc,
    epsilon: f64,
    values: Vec<f64>,
    residuals: Vec<f64>,
    mesh_fingerprint: u64,
    n_vertices: usize,
    warnings: Vec<String>,
}

pub fn eig(cfg: &RunConfig, eps: f64, bc: Bc, out: Option<PathBuf>) -> Result<(), CliError> {
    let mesh = build_mesh(cfg, eps)?;
    let tagged = tag(cfg, &mesh, bc, eps)?;
    let opts = EigenOptions { tol: cfg.numerics.eigen_tol, ..EigenOptions::default() };
    let count = cfg.numerics.eig_count;
    let sp: SpectrumResult = match bc {
        Bc::Dirichlet => compute_dirichlet_eigs(&tagged, count, &opts)?,
        _ => compute_mixed_eigs(&tagged, count, &opts, None)?,
    };
    let report = EigReport {
        bc,
        epsilon: eps,
        values: sp.values(),
        residuals: sp.eigenpairs.iter().map(|p| p.residual).collect(),
        mesh_fingerprint: sp.mesh_fingerprint,
        n_vertices: mesh.n_vertices(),
        warnings: sp.warnings.clone(),
    };
    let dir = out_dir(cfg, out);
    let hash = cfg.hash();
    write_json(&out_path(&dir, "spectrum.json")?, &envelope("eig", &hash, &report))?;
    for (i, p) in sp.eigenpairs.iter().enumerate() {
        write_field(&out_path(&dir, &format!("phi_{}.field", i + 1))?, &tagged, &p.field)?;
    }
    for (i, v) in report.values.iter().enumerate() {
        println!("λ_{} = {v:.10}", i + 1);
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    println!("wrote {}", dir.display());
    Ok(())
}

pub fn profile(cfg: &RunConfig, out: Option<PathBuf>) -> Result<(), CliError> {
    let psi = cfg.psi_spec()?;
    let report = compute_c(&cfg.patch, &psi, &cfg.numerics.profile)?;
    let dir = out_dir(cfg, out);
    let hash = cfg.hash();
    write_json(&out_path(&dir, "profile.json")?, &envelope("profile", &hash, &report))?;
    for m in &report.m_values {
        println!("R = {:>6.2}: m = {:.8} (dual diff {:.1e})", m.r, m.m_energy, m.dual_rel_diff);
    }
    println!("m∞ = {:.8}, C = {:.8}", report.m_extrapolated, report.c);
    for s in &report.scaling {
        println!("scaling ×{}: m ratio {:.6} vs {:.6} ({:.2e})", s.factor, s.m_ratio, s.expected, s.rel_error);
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

pub fn frequency(field: &Path, lambda: f64, radii: &[f64], out: Option<PathBuf>) -> Result<(), CliError> {
    let v = read_field(field)?;
    let series = frequency_series(&v, lambda, radii)?;
    match out {
        Some(p) => {
            let mut w = create(&p)?;
            series.write_csv(&mut w)?;
            w.flush()?;
        }
        None => series.write_csv(std::io::stdout().lock())?,
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
pub struct CheckLine {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn print_table(res: &SweepResult) {
    println!("{:>8} {:>14} {:>14} {:>12} {:>10}", "epsilon", "lambda_eps", "lambda", "d", "C_emp");
    for r in &res.records {
        println!("{:>8} {:>14.8} {:>14.8} {:>12.5e} {:>10.4}", r.epsilon, r.lambda_eps, r.lambda, r.d, r.c_emp);
    }
    println!("γ̂ = {:.4} (γ = {}), c = {:.5}, exponent {}", res.gamma_hat, res.gamma, res.c, res.exponent);
    if let Some(f) = &res.fit {
        println!("fitted slope {:.4} ± {:.4}", f.slope, f.slope_stderr);
    }
    if let Some(c) = res.c_pred {
        println!("C_pred = {c:.5}");
    }
}

const PLOT_SCRIPT: &str = "set logscale xy
set xlabel 'epsilon'
set ylabel 'lambda - lambda_eps'
plot 'sweep.csv' every ::1 using 1:4 with linespoints title 'd(epsilon)'
";

/// Profile U = ψ + w₀ and its domain, built once for the checks that need it.
struct Profile {
    domain: ProfileDomain,
    u: Field,
}

fn ensure_profile<'a>(
    cfg: &RunConfig,
    res: &SweepResult,
    prof: &'a mut Option<Profile>,
) -> Result<&'a Profile, CliError> {
    if prof.is_none() {
        let numerics = &cfg.numerics.profile;
        let domain = ProfileDomain::build(&cfg.patch, numerics)?;
        let u = solve_u(&domain, &res.psi, numerics.linear_tol)?;
        *prof = Some(Profile { domain, u });
    }
    Ok(prof.as_ref().unwrap())
}

fn run_check(
    cfg: &RunConfig,
    res: &SweepResult,
    check: Check,
    prof: &mut Option<Profile>,
) -> Result<CheckLine, CliError> {
    let numerics = &cfg.numerics.profile;
    let line = match check {
        Check::Sandwich => {
            let c_unit = compute_c(&PatchSpec::disk(1.0), &PsiSpec::linear(1.0), numerics)?.c;
            let rep = sandwich_check(res, &cfg.patch, c_unit, cfg.sweep.sandwich_tol)?;
            CheckLine {
                name: "sandwich".into(),
                pass: rep.pass,
                detail: format!(
                    "{:.4} ≤ C_emp(ε = {}) = {:.4} ≤ {:.4} (r_V {:.4}, R_V {:.4}, tol {})",
                    rep.lower, rep.epsilon, rep.c_emp, rep.upper, rep.r_v, rep.big_r_v, rep.tol
                ),
            }
        }
        Check::Blowup => {
            let p = ensure_profile(cfg, res, prof)?;
            let rep = blowup_norm_check(res, cfg.sweep.blowup_radius, &p.u, cfg.sweep.blowup_tol)?;
            let rows: Vec<String> = rep
                .rows
                .iter()
                .map(|r| format!("ε = {}: L² {:.4}, H¹ {:.4}", r.epsilon, r.ratio_l2, r.ratio_h1))
                .collect();
            for w in &rep.warnings {
                eprintln!("warning: {w}");
            }
            CheckLine {
                name: "blowup".into(),
                pass: rep.pass,
                detail: format!("R = {}: {} (tol {}, improving {})", rep.r, rows.join("; "), rep.tol, rep.improving),
            }
        }
        Check::Chi => {
            let p = ensure_profile(cfg, res, prof)?;
            let m = compute_c_on(&p.domain, &res.psi, numerics)?.m_extrapolated;
            let scale = cfg.patch.circumradius();
            let mut parts = Vec::new();
            let mut pass = true;
            for (r, tol) in [(scale, 0.02), (2.0 * scale, 0.05)] {
                let x = compute_chi(&p.u, &res.psi, r)?;
                let e = chi_prediction(&res.psi, m, r);
                pass &= (x - e).abs() <= tol * e.abs();
                parts.push(format!("χ({r}) = {x:.5} vs {e:.5}"));
            }
            CheckLine { name: "chi".into(), pass, detail: parts.join("; ") }
        }
        Check::Scaling => {
            let mut n = numerics.clone();
            n.scaling_check = true;
            let rep = compute_c(&cfg.patch, &res.psi, &n)?;
            let pass = !rep.scaling.is_empty() && rep.scaling.iter().all(|s| s.rel_error <= 0.05);
            let parts: Vec<String> =
                rep.scaling.iter().map(|s| format!("×{}: {:.5} vs {:.5}", s.factor, s.m_ratio, s.expected)).collect();
            CheckLine { name: "scaling".into(), pass, detail: parts.join("; ") }
        }
    };
    println!("[{}] {}: {}", if line.pass { "PASS" } else { "FAIL" }, line.name, line.detail);
    Ok(line)
}

pub fn sweep(cfg: &RunConfig, out: Option<PathBuf>, checks: &[Check]) -> Result<(), CliError> {
    let dir = out_dir(cfg, out);
    let mut sc = cfg.sweep_config();
    let partial = out_path(&dir, "partial.jsonl")?;
    if partial.exists() {
        std::fs::remove_file(&partial).map_err(|e| CliError::Io { path: partial.clone(), source: e })?;
    }
    sc.partial_log = Some(partial);
    let res = run_epsilon_sweep(&sc)?;
    let hash = cfg.hash();
    if cfg.wants(Format::Json) {
        write_json(&out_path(&dir, "sweep.json")?, &envelope("sweep", &hash, &res))?;
    }
    if cfg.wants(Format::Csv) {
        let mut w = create(&out_path(&dir, "sweep.csv")?)?;
        res.write_csv(&mut w)?;
        w.flush()?;
        std::fs::write(out_path(&dir, "rate.gp")?, PLOT_SCRIPT)?;
    }
    if cfg.wants(Format::Dat) {
        let mut w = create(&out_path(&dir, "rate.dat")?)?;
        res.write_plot_data(&mut w)?;
        w.flush()?;
    }
    print_table(&res);
    for w in &res.warnings {
        eprintln!("warning: {w}");
    }
    let mut prof = None;
    let mut lines = Vec::new();
    for &c in checks {
        lines.push(run_check(cfg, &res, c, &mut prof)?);
    }
    if !lines.is_empty() {
        write_json(&out_path(&dir, "checks.json")?, &envelope("checks", &hash, &lines))?;
    }
    let failed: Vec<&str> = lines.iter().filter(|l| !l.pass).map(|l| l.name.as_str()).collect();
    if !failed.is_empty() {
        return Err(CliError::CheckFailed(failed.join(", ")));
    }
    Ok(())
}

pub fn report(input: &Path) -> Result<(), CliError> {
    let text = std::fs::read_to_string(input).map_err(|e| CliError::Io { path: input.to_path_buf(), source: e })?;
    let bad = |m: String| CliError::Core(mixeig::Error::Parse(format!("{}: {m}", input.display())));
    let mut doc: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    if doc.get("command").and_then(|c| c.as_str()) != Some("sweep") {
        return Err(bad("not a sweep report".into()));
    }
    let res: SweepResult = serde_json::from_value(doc["result"].take()).map_err(|e| bad(e.to_string()))?;
    println!("config {}", doc["config_hash"].as_str().unwrap_or("?"));
    print_table(&res);
    if res.records.len() >= 3 {
        let conv = eigen_convergence_check(&res)?;
        println!("convergence: {:?}", conv.status);
        for n in &conv.notes {
            println!("  {n}");
        }
    }
    for w in &res.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
