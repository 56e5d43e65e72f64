//! Cross-cutting identity checks: the full registry on every frame mode and
//! dimension, plus an exact rational instance with frozen expected values.

mod common;

use common::chart_instance;
use norden::curvature::scalar_relation_check;
use norden::frame::{fundamental_f, levi_civita, nabla_j, square_norm_nabla_j};
use norden::model::ModelFile;
use norden::report::{verify_instance, Verdict};
use norden::{forge, Tolerances};

#[test]
fn full_registry_green_on_lie_instances() {
    let tols = Tolerances::default();
    for (name, n, seed) in [("QK4", 2usize, 1u64), ("QK6", 3, 2), ("QK8", 4, 3)] {
        let (s, f) = forge::quasi_kahler_search(n, seed, 200).unwrap();
        let rep = verify_instance(name, &s, &f, None, tols, None).unwrap();
        assert_eq!(rep.summary.fail, 0, "{name}:\n{}", rep.render_text());
    }
    for (name, n, seed) in [("R4", 2usize, 3u64), ("R8", 4, 1)] {
        let (s, f) = forge::random_norden(n, seed, 400).unwrap();
        let rep = verify_instance(name, &s, &f, None, tols, None).unwrap();
        assert_eq!(rep.summary.fail, 0, "{name}:\n{}", rep.render_text());
    }
}

#[test]
fn full_registry_green_on_chart_instance() {
    let (s, f) = chart_instance();
    let rep = verify_instance("CH4", &s, &f, None, Tolerances::default(), None).unwrap();
    assert_eq!(rep.summary.fail, 0, "chart:\n{}", rep.render_text());
    // the chart-only cross-check must actually run (not be skipped)
    let fd = rep.checks.iter().find(|c| c.check_id == "chart_fd_consistency").unwrap();
    assert_eq!(fd.verdict, Verdict::Pass);
    // curvature-layer checks run at fd tolerance in chart mode
    let dual = rep.checks.iter().find(|c| c.check_id == "curvature_dual_route").unwrap();
    assert_eq!(dual.verdict, Verdict::Pass);
}

#[test]
fn isotropic_instance_reports_equal_scalars() {
    let res = forge::isotropic_search(2, 21, 200).unwrap();
    let (s, f) = res.instance.expect("isotropic directions exist on this family");
    let rel = scalar_relation_check(&s, &f, &Tolerances::default()).unwrap();
    assert!(rel.norm_nabla_j.abs() < 1e-8);
    assert!((rel.tau - rel.tau_prime).abs() < 1e-8 * (1.0 + rel.tau.abs()));
    // nontrivial: nabla J itself does not vanish
    let conn = levi_civita(&s, &f).unwrap();
    let nj = nabla_j(&conn, &s, &f);
    assert!(nj.max_abs() > 0.05);
}

/// A hand-written model file whose invariants have exact rational values,
/// frozen from an independent symbolic computation: the bracket 3-form with
/// weights 2 and 1 on the two index triples gives
/// `||nabla J|| = 12`, `tau = -9/2`, `tau' = -6`, `max|F| = 2`, `max|T| = 1`.
#[test]
fn exact_instance_frozen_values() {
    let text = r#"{
  "kind": "lie_algebra",
  "dim": 4,
  "metric": [[1,0,0,0],[0,1,0,0],[0,0,-1,0],[0,0,0,-1]],
  "J": [[0,0,-1,0],[0,0,0,-1],[1,0,0,0],[0,1,0,0]],
  "structure_constants": [
    [1,2,3,-2.0], [1,3,2,-2.0], [2,3,1,2.0],
    [2,3,4,-1.0], [2,4,3,1.0], [3,4,2,1.0]
  ]
}"#;
    let (s, f) = ModelFile::from_json(text).unwrap().into_instance().unwrap();
    let conn = levi_civita(&s, &f).unwrap();
    let nj = nabla_j(&conn, &s, &f);
    let fund = fundamental_f(&nj, &s).unwrap();
    assert!((fund.f.max_abs() - 2.0).abs() < 1e-12);
    let nrm = square_norm_nabla_j(&s, &nj);
    assert!((nrm - 12.0).abs() < 1e-12, "square norm {nrm}");
    let rel = scalar_relation_check(&s, &f, &Tolerances::default()).unwrap();
    assert!((rel.tau - (-4.5)).abs() < 1e-12, "tau {}", rel.tau);
    assert!((rel.tau_prime - (-6.0)).abs() < 1e-12, "tau' {}", rel.tau_prime);
    // tau' - tau = -12/8 = -3/2 exactly
    assert!((rel.tau_prime - rel.tau + 1.5).abs() < 1e-12);
    let dc = norden::connection::canonical_connection(&s, &conn, &nj, false).unwrap();
    assert!((dc.torsion_lower.max_abs() - 1.0).abs() < 1e-12);
    let rep = verify_instance("QK4exact", &s, &f, None, Tolerances::default(), None).unwrap();
    assert_eq!(rep.summary.fail, 0, "{}", rep.render_text());
}

/// A polynomial chart presented purely through the file format: the metric
/// block is [[1+u1², 0.1·u2], [0.1·u2, -1-u1²]] with the standard J, a valid
/// Norden structure at the marked point and its whole stencil.
#[test]
fn chart_model_file_end_to_end() {
    let text = r#"{
  "kind": "chart",
  "dim": 2,
  "metric_poly": [
    [[{"c":1.0,"p":[0,0]},{"c":1.0,"p":[2,0]}], [{"c":0.1,"p":[0,1]}]],
    [[{"c":0.1,"p":[0,1]}], [{"c":-1.0,"p":[0,0]},{"c":-1.0,"p":[2,0]}]]
  ],
  "J_poly": [
    [[], [{"c":-1.0,"p":[0,0]}]],
    [[{"c":1.0,"p":[0,0]}], []]
  ],
  "point": [0.2, -0.3],
  "fd_step": 1e-5
}"#;
    let (s, f) = ModelFile::from_json(text).unwrap().into_instance().unwrap();
    assert_eq!(s.dim(), 2);
    let outcome = norden::model::validate(&s, &f, &Tolerances::default()).unwrap();
    assert!(outcome.is_valid());
    let rep = verify_instance("CH2", &s, &f, None, Tolerances::default(), None).unwrap();
    assert_eq!(rep.summary.fail, 0, "{}", rep.render_text());
    let fd = rep.checks.iter().find(|c| c.check_id == "chart_fd_consistency").unwrap();
    assert_eq!(fd.verdict, Verdict::Pass);
    // round trip through serialization keeps the polynomials intact
    let file = ModelFile::from_json(text).unwrap();
    let again = ModelFile::from_json(&file.to_json().unwrap()).unwrap();
    assert_eq!(file, again);
}

/// Same family with weights (3,4,5,0): an exact isotropic instance,
/// `||nabla J|| = 0` with `max|F| = 5` and `tau = tau' = 0`.
#[test]
fn exact_isotropic_frozen_values() {
    let text = r#"{
  "kind": "lie_algebra",
  "dim": 4,
  "metric": [[1,0,0,0],[0,1,0,0],[0,0,-1,0],[0,0,0,-1]],
  "J": [[0,0,-1,0],[0,0,0,-1],[1,0,0,0],[0,1,0,0]],
  "structure_constants": [
    [1,2,3,-3.0], [1,3,2,-3.0], [2,3,1,3.0],
    [1,2,4,-4.0], [1,4,2,-4.0], [2,4,1,4.0],
    [1,3,4,5.0], [1,4,3,-5.0], [3,4,1,-5.0]
  ]
}"#;
    let (s, f) = ModelFile::from_json(text).unwrap().into_instance().unwrap();
    let conn = levi_civita(&s, &f).unwrap();
    let nj = nabla_j(&conn, &s, &f);
    let fund = fundamental_f(&nj, &s).unwrap();
    assert!((fund.f.max_abs() - 5.0).abs() < 1e-12);
    let nrm = square_norm_nabla_j(&s, &nj);
    assert!(nrm.abs() < 1e-12, "isotropic square norm, got {nrm}");
    let rel = scalar_relation_check(&s, &f, &Tolerances::default()).unwrap();
    assert!(rel.tau.abs() < 1e-12 && rel.tau_prime.abs() < 1e-12);
    assert!(rel.isotropy_equivalence);
}
