//! Randomized invariants.

use std::path::Path;
use std::sync::Arc;

use proptest::prelude::*;

use semistable::audit::{audit_tolerance, build_phik, AuditRecord, PhiFunction, Subject};
use semistable::levelgeom::extract_level;
use semistable::par::{self, Exec};
use semistable::planar::{DomainMask, ScalarField2D, Shape};
use semistable::radial::{linearized_eigenvalue, solve_shooting, EigenOptions, ShootingOptions};
use semistable::report::ExperimentConfig;
use semistable::Nonlinearity;

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let n = 400;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

fn nonlinearity() -> impl Strategy<Value = Nonlinearity> {
    prop_oneof![
        Just(Nonlinearity::Exponential),
        (1.1f64..4.0).prop_map(|p| Nonlinearity::Power { p }),
        (0.1f64..3.0, 0.1f64..3.0).prop_map(|(a, b)| Nonlinearity::Affine { a, b }),
        (0.1f64..3.0).prop_map(|c| Nonlinearity::Constant { c }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn derivative_and_primitive_are_consistent(g in nonlinearity(), s in 0.05f64..5.0) {
        let e = 1e-5;
        let fd = (g.eval(s + e).unwrap() - g.eval(s - e).unwrap()) / (2.0 * e);
        let d = g.deriv(s).unwrap();
        prop_assert!((d - fd).abs() <= 1e-6 * d.abs().max(1.0), "g' = {d}, fd = {fd}");
        let a = 0.5 * s;
        let q = simpson(|x| g.eval(x).unwrap(), a, s);
        let p = g.primitive(s).unwrap() - g.primitive(a).unwrap();
        prop_assert!((p - q).abs() <= 1e-9 * q.abs().max(1.0), "ΔG = {p}, quadrature {q}");
    }

    #[test]
    fn audit_records_hold_by_the_slack_rule(lhs in -1e6f64..1e6, rhs in -1e6f64..1e6, tweak in -1e-7f64..1e-7) {
        for (l, r) in [(lhs, rhs), (lhs, lhs + tweak * lhs.abs().max(1.0))] {
            let rec = AuditRecord::new("c", "s", f64::NAN, l, r);
            prop_assert_eq!(rec.slack, r - l);
            prop_assert_eq!(rec.holds, r - l >= -1e-8 * l.abs().max(r.abs()).max(1.0));
            prop_assert_eq!(audit_tolerance(l, r), 1e-8 * l.abs().max(r.abs()).max(1.0));
        }
    }

    #[test]
    fn ramp_is_lipschitz_and_monotone(t in 0.01f64..1.0, top_extra in 0.0f64..2.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let top = t + top_extra;
        let phi = PhiFunction::ramp(t, top).unwrap();
        let (a, b) = (a * top, b * top);
        prop_assert_eq!(phi.eval(0.0), 0.0);
        prop_assert!((phi.eval(a) - phi.eval(b)).abs() <= phi.lipschitz * (a - b).abs() * (1.0 + 1e-12) + 1e-15);
        if a <= b {
            prop_assert!(phi.eval(a) <= phi.eval(b));
        }
    }

    #[test]
    fn sequential_and_parallel_agree_bitwise(v in proptest::collection::vec(-1e3f64..1e3, 0..20_000)) {
        let f = |i: usize| v[i] * v[i].sin();
        prop_assert_eq!(par::sum(Exec::Sequential, v.len(), f).to_bits(), par::sum(Exec::Parallel, v.len(), f).to_bits());
        prop_assert_eq!(par::dot(Exec::Sequential, &v, &v).to_bits(), par::dot(Exec::Parallel, &v, &v).to_bits());
        let sq = par::map(Exec::Sequential, &v, |x| x.exp_m1());
        let pl = par::map(Exec::Parallel, &v, |x| x.exp_m1());
        prop_assert!(sq.iter().zip(&pl).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn config_round_trips_through_toml(
        n in 2usize..12,
        kind in prop_oneof![Just("ball"), Just("disk"), Just("square")],
        fr in proptest::collection::vec(0.01f64..0.99, 1..5),
        k in proptest::collection::vec(1u32..200, 1..5),
        n_levels in 16usize..256,
        seed_h in 5u32..9,
    ) {
        let mut cfg = ExperimentConfig::default();
        cfg.problem.n = n;
        cfg.problem.domain.kind = kind.to_string();
        cfg.audit.t_fractions = fr;
        cfg.audit.k_list = k;
        cfg.audit.n_levels = n_levels;
        cfg.branch.h = 1.0 / f64::from(1u32 << seed_h);
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.hash(), cfg.hash());
        let valid = cfg.validate(Path::new(".")).is_ok();
        prop_assert_eq!(valid, n == 2 || kind == "ball");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn liouville_branch_matches_the_closed_form(m in 0.05f64..6.0) {
        // u = m - 2 log(1 + μ r²), μ = e^{m/2} - 1, λ = 8μ e^{-m}
        let mu = (0.5 * m).exp() - 1.0;
        let exact = 8.0 * mu * (-m).exp();
        let (lambda, sol) = solve_shooting(2, &Nonlinearity::Exponential, m, &ShootingOptions::default()).unwrap();
        prop_assert!((lambda / exact - 1.0).abs() < 1e-8, "λ = {lambda}, closed form {exact}");
        for i in 0..=20 {
            let r = i as f64 / 20.0;
            let u = m - 2.0 * (1.0 + mu * r * r).ln();
            prop_assert!((sol.eval(r).0 - u).abs() < 1e-8 * m.max(1.0));
        }
    }

    #[test]
    fn shooting_solutions_satisfy_the_ode(n in 2usize..11, m in 0.1f64..4.0, p in 1.5f64..4.0, exp in any::<bool>()) {
        let g = if exp { Nonlinearity::Exponential } else { Nonlinearity::Power { p } };
        let (lambda, sol) = solve_shooting(n, &g, m, &ShootingOptions::default()).unwrap();
        let k = n as i32 - 1;
        for i in 1..=10 {
            let r = 0.1 * i as f64;
            let flux = r.powi(k) * sol.eval(r).1;
            let source = lambda * simpson(|x| x.powi(k) * g.eval(sol.eval(x).0).unwrap(), 0.0, r);
            prop_assert!((flux + source).abs() < 1e-6 * source, "n={n} m={m} r={r}: flux {flux}, source {source}");
        }
        prop_assert!(sol.eval(1.0).0.abs() < 1e-9);
    }

    #[test]
    fn minimal_liouville_solutions_are_semistable(m in 0.05f64..1.3) {
        let g = Nonlinearity::Exponential;
        let (_, sol) = solve_shooting(2, &g, m, &ShootingOptions::default()).unwrap();
        let ev = linearized_eigenvalue(&sol, &g, &EigenOptions::default()).unwrap();
        prop_assert!(ev.value >= -1e-4, "m = {m}: λ₁ = {}", ev.value);
    }

    #[test]
    fn phik_is_monotone_and_lipschitz(m in 0.2f64..1.3, tf in 0.1f64..0.9, k in 1u32..100) {
        let g = Nonlinearity::Exponential;
        let (_, sol) = solve_shooting(2, &g, m, &ShootingOptions::default()).unwrap();
        let fam = Subject::Radial { id: "s".into(), sol }.profiles(64, Exec::Sequential).unwrap();
        let t = tf * fam.top;
        let phi = build_phik(&fam.profiles, fam.top, t, k).unwrap();
        prop_assert_eq!(phi.eval(0.0), 0.0);
        let s: Vec<f64> = (0..=200).map(|i| fam.top * i as f64 / 200.0).collect();
        for w in s.windows(2) {
            let (a, b) = (phi.eval(w[0]), phi.eval(w[1]));
            prop_assert!(b >= a);
            prop_assert!(b - a <= phi.lipschitz * (w[1] - w[0]) * (1.0 + 1e-9));
        }
        prop_assert!((phi.eval(t) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn contours_of_the_paraboloid_are_circles(s in 0.05f64..0.9) {
        let mask = Arc::new(DomainMask::new(Shape::unit_disk(), 1.0 / 64.0).unwrap());
        let u = ScalarField2D::from_fn(mask, |x, y| 1.0 - x * x - y * y);
        let c = extract_level(&u, s).unwrap();
        prop_assert_eq!(c.components.len(), 1);
        let comp = &c.components[0];
        let r = (1.0 - s).sqrt();
        prop_assert!(comp.closed);
        prop_assert!((comp.length() / (std::f64::consts::TAU * r) - 1.0).abs() < 2e-3);
        prop_assert!((comp.turning() / std::f64::consts::TAU - 1.0).abs() < 1e-2);
        for pt in &comp.points {
            prop_assert!(((pt[0] * pt[0] + pt[1] * pt[1]).sqrt() - r).abs() < 1e-3);
        }
    }
}
