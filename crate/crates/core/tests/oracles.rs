//! Cross-module checks against closed forms and the radial solver.

use std::sync::Arc;

use semistable::audit::{audit_subject, AuditOptions, Subject};
use semistable::planar::{
    linearized_eigenvalue_2d, minimal_branch_2d, solve_newton, BranchOptions2D, DomainMask, ScalarField2D, Shape,
};
use semistable::radial::{solve_shooting, ShootingOptions};
use semistable::Nonlinearity;

fn disk_solution(h: f64, lambda: f64) -> ScalarField2D {
    let mask = Arc::new(DomainMask::new(Shape::unit_disk(), h).unwrap());
    solve_newton(&mask, &Nonlinearity::Exponential, lambda, &ScalarField2D::zeros(mask.clone())).unwrap()
}

#[test]
fn disk_solution_matches_the_radial_profile() {
    let u = disk_solution(1.0 / 256.0, 1.0);
    // Liouville: λ = 1 gives μ = 3 - 2√2 and u(r) = log(8μ) - 2 log(1 + μ r²)
    let mu = 3.0 - 2.0 * 2f64.sqrt();
    let (_, radial) =
        solve_shooting(2, &Nonlinearity::Exponential, (8.0 * mu).ln(), &ShootingOptions::default()).unwrap();
    let mut worst = 0.0f64;
    for k in 0..u.len() {
        let (x, y) = u.mask.xy(k);
        let r = (x * x + y * y).sqrt();
        let exact = (8.0 * mu).ln() - 2.0 * (1.0 + mu * r * r).ln();
        assert!((radial.eval(r).0 - exact).abs() < 1e-9);
        worst = worst.max((u.values[k] - exact).abs());
    }
    assert!(worst < 5e-3, "max |u_2D - u_radial| = {worst}");
    assert!((u.max() - 0.31669).abs() < 1e-3);
}

#[test]
fn random_test_functions_see_a_positive_form() {
    let u = disk_solution(1.0 / 64.0, 1.0);
    let g = Nonlinearity::Exponential;
    let lambda1 = linearized_eigenvalue_2d(&u, &g, 1.0).unwrap();
    assert!(lambda1 > 0.0);
    let s = Subject::Planar { id: "disk".into(), field: u, lambda: 1.0 };
    let forms = s.sampled_quadratic_forms(&g, 50, 7).unwrap();
    assert_eq!(forms.len(), 50);
    for (q, e) in forms {
        assert!(q >= -1e-6 * e, "Q = {q}, energy {e}");
    }
}

#[test]
fn planar_minimal_branch_is_semistable() {
    let mask = Arc::new(DomainMask::new(Shape::unit_disk(), 1.0 / 32.0).unwrap());
    let grid: Vec<f64> = (1..=20).map(|i| 0.1 * i as f64).collect();
    let b = minimal_branch_2d(&mask, &Nonlinearity::Exponential, &grid, &BranchOptions2D::default()).unwrap();
    assert!(b.points.len() >= 15);
    let last = b.last_good.unwrap();
    for p in &b.points {
        if p.lambda < last {
            assert!(p.lambda1 >= -1e-4, "λ = {}: λ₁ = {}", p.lambda, p.lambda1);
        }
    }
    assert!(b.points.windows(2).all(|w| w[1].field.max() > w[0].field.max()));
}

#[test]
fn audit_of_the_planar_disk_holds() {
    let s = Subject::Planar { id: "disk".into(), field: disk_solution(1.0 / 128.0, 1.0), lambda: 1.0 };
    let recs = audit_subject(&s, &Nonlinearity::Exponential, &AuditOptions::default()).unwrap();
    assert!(recs.len() > 20);
    let bad: Vec<_> = recs.iter().filter(|r| !r.holds).map(|r| format!("{} {}", r.check_id, r.param)).collect();
    assert!(bad.is_empty(), "failing records: {bad:?}");
    assert!(recs.iter().all(|r| (0.0..=1.0).contains(&r.excluded_fraction)));
}
