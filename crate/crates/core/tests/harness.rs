use std::sync::{Arc, OnceLock};

use mixeig::fem::Field;
use mixeig::geometry::PatchSpec;
use mixeig::harness::{
    blowup_norm_check, blowup_norm_check_at, eigen_convergence_check, fit_rate, sandwich_check, CheckStatus, EpsRecord,
    SweepConfig, SweepMesh, SweepResult,
};
use mixeig::profile::{solve_u, ProfileDomain, ProfileNumerics};
use mixeig::spectrum::PsiSpec;
use proptest::prelude::*;

fn record(eps: f64, d: f64) -> EpsRecord {
    let lambda = 20.19;
    EpsRecord {
        epsilon: eps,
        lambda_eps: lambda - d,
        lambda,
        d,
        c_emp: d / eps.powi(3),
        mesh_fingerprint: 0,
        n_vertices: 0,
        n_neumann_facets: 0,
        nested_inequality: true,
        residual_max: 0.0,
    }
}

fn sweep(records: Vec<EpsRecord>, fields: Vec<Field>, c: f64) -> SweepResult {
    SweepResult {
        records,
        gamma_hat: 1.0,
        gamma: 1,
        psi: PsiSpec::linear(c),
        c,
        fit: None,
        exponent: 3,
        c_pred: None,
        warnings: Vec::new(),
        fields,
        limit_field: None,
    }
}

fn power_law(c: f64, eps: &[f64]) -> SweepResult {
    sweep(eps.iter().map(|&e| record(e, c * e.powi(3))).collect(), Vec::new(), 1.0)
}

#[test]
fn convergence_check_statuses() {
    let good = power_law(1.0, &[0.4, 0.3, 0.2, 0.1]);
    assert_eq!(eigen_convergence_check(&good).unwrap().status, CheckStatus::Pass);
    let mut bumpy = good.clone();
    bumpy.records[2].d = 0.5;
    let rep = eigen_convergence_check(&bumpy).unwrap();
    assert_eq!(rep.status, CheckStatus::Warn);
    assert!(!rep.notes.is_empty());
    let mut negative = good.clone();
    negative.records[1].d = -1e-3;
    assert_eq!(eigen_convergence_check(&negative).unwrap().status, CheckStatus::Fail);
    let large = power_law(1e4, &[0.4, 0.3, 0.2, 0.1]);
    assert_eq!(eigen_convergence_check(&large).unwrap().status, CheckStatus::Fail);
    assert!(eigen_convergence_check(&power_law(1.0, &[0.1])).is_err());
}

#[test]
fn sandwich_bounds() {
    let c_unit = 4.0 / 3.0;
    // disk: r_V = R_V, the bounds collapse to c²·C(B₁′)
    let c = 2.0;
    let mut disk = sweep(vec![record(0.1, c * c * c_unit * 1e-3)], Vec::new(), c);
    let rep = sandwich_check(&disk, &PatchSpec::disk(1.0), c_unit, 0.0).unwrap();
    assert!((rep.lower - rep.upper).abs() < 1e-12);
    assert!((rep.c_emp - rep.lower).abs() < 1e-9);
    disk.records[0].c_emp *= 1.3;
    assert!(!sandwich_check(&disk, &PatchSpec::disk(1.0), c_unit, 0.25).unwrap().pass);
    let square = sweep(vec![record(0.1, 2.0 * c_unit * 1e-3)], Vec::new(), 1.0);
    let rep = sandwich_check(&square, &PatchSpec::square(1.0), c_unit, 0.25).unwrap();
    assert!((rep.big_r_v - 2f64.sqrt()).abs() < 1e-12);
    assert!((rep.upper / rep.lower - 2.0 * 2f64.sqrt() * 1.25 / 0.75).abs() < 1e-9);
    assert!(rep.pass);
    let mut quadratic = square.clone();
    quadratic.gamma = 2;
    assert!(sandwich_check(&quadratic, &PatchSpec::square(1.0), c_unit, 0.25).is_err());
}

fn coarse_profile() -> &'static Field {
    static U: OnceLock<Field> = OnceLock::new();
    U.get_or_init(|| {
        let numerics = ProfileNumerics { h_rim: 0.04, ..ProfileNumerics::default() };
        let d = ProfileDomain::build(&PatchSpec::disk(1.0), &numerics).unwrap();
        solve_u(&d, &PsiSpec::linear(1.0), 1e-10).unwrap()
    })
}

/// φ^ε(x) = ε U(x/ε) on the sweep mesh for ε, scaled to unit L² norm when
/// `normalise` is set.
fn synthetic(eps: f64, normalise: bool) -> (Field, f64) {
    let u = coarse_profile();
    let mesh = Arc::new(SweepMesh::default().build(1.0, &PatchSpec::disk(1.0), eps).unwrap());
    let phi = Field::from_fn(mesh, |x| eps * u.evaluate(&[x[0] / eps, x[1] / eps, x[2] / eps]).unwrap_or(0.0));
    let n = phi.l2_norm_sq();
    if normalise {
        (phi.scaled(1.0 / n.sqrt()), n)
    } else {
        (phi, n)
    }
}

#[test]
fn blowup_of_a_rescaled_profile() {
    let eps = [0.2, 0.1];
    let (fields, norms): (Vec<Field>, Vec<f64>) = eps.iter().map(|&e| synthetic(e, false)).unzip();
    let s = sweep(eps.iter().map(|&e| record(e, e.powi(3))).collect(), fields, 1.0);
    let rep = blowup_norm_check(&s, 4.0, coarse_profile(), 0.2).unwrap();
    for row in &rep.rows {
        assert!((row.ratio_l2 - 1.0).abs() < 0.03, "{row:?}");
        assert!((row.ratio_h1 - 1.0).abs() < 0.05, "{row:?}");
    }
    assert!(rep.within_tol);
    // the unnormalised fields are flagged
    assert_eq!(rep.warnings.len(), 2);
    assert!((rep.rows[0].norm_sq - norms[0]).abs() < 1e-12 * norms[0]);

    // normalising rescales both ratios by 1/‖φ‖²
    let (fields, _): (Vec<Field>, Vec<f64>) = eps.iter().map(|&e| synthetic(e, true)).unzip();
    let s2 = sweep(s.records.clone(), fields, 1.0);
    let rep2 = blowup_norm_check_at(&s2, [0.2, 0.1], 4.0, coarse_profile(), 0.2).unwrap();
    assert!(rep2.warnings.is_empty());
    for (a, b) in rep.rows.iter().zip(&rep2.rows) {
        assert!((b.ratio_l2 * a.norm_sq - a.ratio_l2).abs() < 1e-6 * a.ratio_l2);
    }
    assert!(blowup_norm_check_at(&s2, [0.1, 0.2], 4.0, coarse_profile(), 0.2).is_err());
    assert!(blowup_norm_check_at(&s2, [0.3, 0.2], 4.0, coarse_profile(), 0.2).is_err());
}

#[test]
fn csv_and_plot_outputs() {
    let s = power_law(2.0, &[0.4, 0.2, 0.1]);
    let mut buf = Vec::new();
    s.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next(), Some("epsilon,lambda_eps,lambda,d,C_emp"));
    assert_eq!(text.lines().count(), 4);
    let mut buf = Vec::new();
    s.write_plot_data(&mut buf).unwrap();
    assert!(!buf.is_empty());
    let json = serde_json::to_string(&s).unwrap();
    let back: SweepResult = serde_json::from_str(&json).unwrap();
    assert_eq!(back.records.len(), 3);
    assert!(back.fields.is_empty());
}

#[test]
fn config_schema() {
    let c: SweepConfig = serde_json::from_str(r#"{"epsilon_list": [0.3, 0.2, 0.1]}"#).unwrap();
    c.validate().unwrap();
    assert!(serde_json::from_str::<SweepConfig>(r#"{"epsilon_list": [0.3], "bogus": 1}"#).is_err());
    // square of half-side 1 has diameter 2√2, so ε = 0.4 violates ε·diam(V) < r₀
    let square = SweepConfig { patch: PatchSpec::square(1.0), ..SweepConfig::default() };
    let err = square.validate().unwrap_err().to_string();
    assert!(err.contains("diameter"), "{err}");
    let ok = SweepConfig { patch: PatchSpec::square(1.0), epsilon_list: vec![0.3, 0.2, 0.1], ..SweepConfig::default() };
    ok.validate().unwrap();
    let zero = SweepConfig { n0: 0, ..SweepConfig::default() };
    assert!(zero.validate().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fit_recovers_power_laws(a in 0.01f64..100.0, p in 1.0f64..6.0, n in 3usize..7) {
        let eps: Vec<f64> = (0..n).map(|i| 0.4 * 0.8f64.powi(i as i32)).collect();
        let d: Vec<f64> = eps.iter().map(|e| a * e.powf(p)).collect();
        let f = fit_rate(&eps, &d).unwrap();
        prop_assert!((f.slope - p).abs() < 1e-9);
        prop_assert!((f.intercept - a.ln()).abs() < 1e-8);
    }
}
