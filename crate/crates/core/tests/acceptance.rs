//! The ten acceptance criteria, one test each. Criteria 1–9 share one suite
//! computed at the full resolution; criterion 10 times the reduced `verify`
//! run end to end.

use std::io::Write;
use std::sync::LazyLock;

use semistable::verify::{run_verify, CriterionResult, Verifier, VerifySettings, VERIFY_BUDGET_SECONDS};

static SUITE: LazyLock<Verifier> = LazyLock::new(|| Verifier::new(VerifySettings::full()));

fn report(r: &CriterionResult) {
    let _ = writeln!(std::io::stderr(), "{}", r.line());
    assert!(r.passed, "{}", r.line());
}

fn criterion(id: usize) {
    report(&SUITE.criterion(id));
}

#[test]
fn criterion_01_closed_form_branch() {
    criterion(1);
}

#[test]
fn criterion_02_singular_regime() {
    criterion(2);
}

#[test]
fn criterion_03_semistability_along_minimal_branches() {
    criterion(3);
}

#[test]
fn criterion_04_level_set_hessian_identity() {
    criterion(4);
}

#[test]
fn criterion_05_coarea_consistency() {
    criterion(5);
}

#[test]
fn criterion_06_stability_inequality_and_phik_chain() {
    criterion(6);
}

#[test]
fn criterion_07_level_sobolev_gauss_bonnet_isoperimetric() {
    criterion(7);
}

#[test]
fn criterion_08_main_estimate_and_poisson_anchors() {
    criterion(8);
}

#[test]
fn criterion_09_boundary_and_lower_bound_constants() {
    criterion(9);
}

#[test]
fn criterion_10_verify_runtime() {
    let rep = run_verify(VerifySettings::reduced());
    for r in &rep.results[..9] {
        let _ = writeln!(std::io::stderr(), "  reduced: {}", r.line());
    }
    assert!(rep.passed(), "reduced verify failed:\n{}", rep.to_text());
    let r = &rep.results[9];
    assert!(rep.seconds < VERIFY_BUDGET_SECONDS);
    report(r);
}
