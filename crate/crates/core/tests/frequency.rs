use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use mixeig::fem::{EigenOptions, Field};
use mixeig::frequency::{check_doubling_bound, compute_e, compute_h, compute_n, frequency_series, FrequencySeries};
use mixeig::geometry::{tag_dirichlet, HalfBallBuilder, Mesh, SizeField};
use mixeig::spectrum::compute_dirichlet_eigs;
use mixeig::Error;
use proptest::prelude::*;

fn mesh() -> &'static Arc<Mesh> {
    static MESH: OnceLock<Arc<Mesh>> = OnceLock::new();
    MESH.get_or_init(|| {
        let size = SizeField::uniform(0.1).with_origin(0.006, 0.1);
        Arc::new(HalfBallBuilder::new(1.0, 0.1).size_field(size).build().unwrap())
    })
}

/// First Dirichlet pair (λ₁, φ₁) of the half-ball.
fn phi1() -> &'static (f64, Field) {
    static PHI: OnceLock<(f64, Field)> = OnceLock::new();
    PHI.get_or_init(|| {
        let sp = compute_dirichlet_eigs(&tag_dirichlet(mesh()), 1, &EigenOptions::default()).unwrap();
        let p = &sp.eigenpairs[0];
        (p.value, p.field.clone())
    })
}

fn field(f: impl Fn(&[f64]) -> f64 + Sync) -> Field {
    Field::from_fn(mesh().clone(), |x| f(x))
}

const RADII: [f64; 4] = [0.2, 0.4, 0.6, 0.8];

#[test]
fn linear_field() {
    let v = field(|x| x[2]);
    for r in RADII {
        let exact = 4.0 * PI / 3.0 * r * r;
        assert!((compute_h(&v, r).unwrap() - exact).abs() < 0.01 * exact);
        assert!((compute_e(&v, r, 0.0).unwrap() - exact).abs() < 0.01 * exact);
    }
    let s = frequency_series(&v, 0.0, &RADII).unwrap();
    assert!(s.n_values.iter().all(|n| (n - 1.0).abs() < 0.02), "{:?}", s.n_values);
    assert!(s.h_values.iter().all(|h| *h > 0.0));
}

#[test]
fn homogeneous_harmonics_have_their_degree() {
    let xz = field(|x| x[0] * x[2]);
    let saddle = field(|x| x[0] * x[0] - x[1] * x[1]);
    let cubic = field(|x| x[2] * (2.0 * x[2] * x[2] - 3.0 * (x[0] * x[0] + x[1] * x[1])));
    for (v, deg) in [(xz, 2.0), (saddle, 2.0), (cubic, 3.0)] {
        let s = frequency_series(&v, 0.0, &RADII).unwrap();
        assert!(s.n_values.iter().all(|n| (n - deg).abs() < 0.02 * deg), "{deg}: {:?}", s.n_values);
    }
}

#[test]
fn zero_field() {
    let v = field(|_| 0.0);
    assert_eq!(compute_h(&v, 0.5).unwrap(), 0.0);
    assert_eq!(compute_e(&v, 0.5, 3.0).unwrap(), 0.0);
    assert!(matches!(compute_n(&v, 0.5, 0.0), Err(Error::VanishingH { .. })));
}

#[test]
fn first_eigenfunction() {
    let (lam, phi) = phi1();
    let n = compute_n(phi, 0.05, *lam).unwrap();
    assert!((n - 1.0).abs() < 0.05, "N(0.05) = {n}");
    // E + rH ≥ 0 is a small-ball statement: on S_r it reads k j₁'(kr)/j₁(kr) + 1 ≥ 0,
    // which changes sign between r = 0.5 and 0.6
    let s = frequency_series(phi, *lam, &[0.05, 0.1, 0.2, 0.3, 0.4]).unwrap();
    for i in 0..s.len() {
        assert!(s.e_values[i] + s.radii[i] * s.h_values[i] >= 0.0, "r = {}", s.radii[i]);
        assert!(s.n_values[i] + 1.0 > 0.0);
    }
    // N decreases away from the origin for φ₁ (λ-term)
    assert!(s.n_values.windows(2).all(|w| w[1] < w[0]), "{:?}", s.n_values);
    let d = check_doubling_bound(&s, 50.0).unwrap();
    assert!(d.pass, "C = {}", d.fitted_c);
    let e = compute_e(phi, 0.8, *lam).unwrap();
    assert!(e + 0.8 * compute_h(phi, 0.8).unwrap() < 0.0);
    // a large λ drives E itself negative
    assert!(compute_e(phi, 0.8, 10.0 * lam).unwrap() < 0.0);
}

#[test]
fn series_preconditions() {
    let v = field(|x| x[2]);
    assert!(frequency_series(&v, 0.0, &[]).unwrap().is_empty());
    assert!(frequency_series(&v, 0.0, &[0.5, 0.4]).is_err());
    // the mesh is ~0.1 away from the origin, so 0.25 is resolved but 0.15 is not
    let far = Field::from_fn(Arc::new(HalfBallBuilder::new(1.0, 0.1).build().unwrap()), |x| x[2]);
    match frequency_series(&far, 0.0, &[0.1, 0.15, 0.6]) {
        Err(Error::UnderResolvedRadii { radii, .. }) => assert_eq!(radii, vec![0.1, 0.15]),
        other => panic!("expected an under-resolution error, got {other:?}"),
    }
}

#[test]
fn csv_output() {
    let s = frequency_series(&field(|x| x[2]), 0.0, &[0.2, 0.4]).unwrap();
    let mut buf = Vec::new();
    s.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next(), Some("r,H,E,N"));
    assert_eq!(text.lines().count(), 3);
}

fn series_of(n: Vec<f64>) -> FrequencySeries {
    let k = n.len();
    FrequencySeries {
        radii: (1..=k).map(|i| 0.1 * i as f64).collect(),
        h_values: vec![1.0; k],
        e_values: n.clone(),
        n_values: n,
        lambda: 0.0,
        field_fingerprint: 0,
    }
}

#[test]
fn doubling_preconditions() {
    assert!(check_doubling_bound(&series_of(vec![1.0, 1.0]), 50.0).is_err());
    let r = check_doubling_bound(&series_of(vec![-1.5, 1.0, 1.0]), 50.0).unwrap();
    assert!(!r.pass);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn h_and_e_are_quadratic(c in -5.0f64..5.0, r in 0.3f64..0.9) {
        let v = field(|x| x[2] + 0.3 * x[0] * x[2]);
        let w = field(|x| c * (x[2] + 0.3 * x[0] * x[2]));
        let (h, hw) = (compute_h(&v, r).unwrap(), compute_h(&w, r).unwrap());
        prop_assert!((hw - c * c * h).abs() <= 1e-10 * h.max(hw));
        let (e, ew) = (compute_e(&v, r, 2.0).unwrap(), compute_e(&w, r, 2.0).unwrap());
        prop_assert!((ew - c * c * e).abs() <= 1e-10 * e.abs().max(1.0));
    }
}
