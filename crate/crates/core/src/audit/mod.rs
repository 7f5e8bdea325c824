//! Measured slack and empirical constants for the inequalities behind the
//! a priori bounds.

mod checks;
mod phi;
mod record;
mod subject;

pub use checks::{
    check_boundary_bound, check_gauss_bonnet, check_isoperimetric, check_lower_bound, check_main_estimate,
    check_michael_simon, check_phik_chain, check_sampled_semistability, check_stability_inequality,
    check_total_variation, GEOMETRY_BAND, VARIATION_BAND,
};
pub use phi::{build_phik, PhiFunction, PhiKind};
pub use record::{audit_tolerance, summary_csv, AuditRecord};
pub use subject::Subject;

use crate::error::Result;
use crate::nonlinearity::Nonlinearity;
use crate::par::Exec;

/// Number of extracted curves per planar solution for the turning check.
pub const GAUSS_BONNET_LEVELS: usize = 16;
/// Turning levels stay this fraction of `max u` away from both ends; curves
/// hugging a non-smooth boundary have unresolved curvature.
pub const GAUSS_BONNET_MARGIN: f64 = 0.05;

pub fn gauss_bonnet_curves(
    field: &crate::planar::ScalarField2D,
    top: f64,
) -> Result<Vec<crate::levelgeom::LevelCurve>> {
    (0..GAUSS_BONNET_LEVELS)
        .map(|i| {
            let f =
                GAUSS_BONNET_MARGIN + (1.0 - 2.0 * GAUSS_BONNET_MARGIN) * i as f64 / (GAUSS_BONNET_LEVELS - 1) as f64;
            crate::levelgeom::extract_level(field, f * top)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct AuditOptions {
    /// Thresholds as fractions of `max u`.
    pub t_fractions: Vec<f64>,
    pub k_list: Vec<u32>,
    pub n_levels: usize,
    /// Strip width for the boundary bound, as a fraction of the inradius.
    pub rho_fraction: f64,
    /// Include the ramp-then-one test functions.
    pub ramp: bool,
    /// Random test functions for the sampled second-variation check; 0
    /// skips it.
    pub samples: usize,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions {
            t_fractions: vec![0.25, 0.5, 0.75],
            k_list: vec![1, 4, 16, 64],
            n_levels: 64,
            rho_fraction: 0.2,
            ramp: true,
            samples: 8,
            seed: 0,
            exec: Exec::default(),
        }
    }
}

/// Runs every applicable check on one solution of `-Δu = λ g(u)`.
pub fn audit_subject(subject: &Subject, g: &Nonlinearity, opts: &AuditOptions) -> Result<Vec<AuditRecord>> {
    let id = subject.id().to_string();
    let fam = subject.profiles(opts.n_levels, opts.exec)?;
    let top = fam.top;
    let excluded = fam.excluded_fraction();
    let mut out = Vec::new();
    for &frac in &opts.t_fractions {
        let t = frac * top;
        if opts.ramp {
            out.push(check_stability_inequality(&id, &fam, &PhiFunction::ramp(t, top)?)?);
        }
        let b_t = subject.sublevel_grad4(t) / (t * t);
        for &k in &opts.k_list {
            let phi = build_phik(&fam.profiles, top, t, k)?;
            let mut rec = check_stability_inequality(&id, &fam, &phi)?;
            rec.check_id = format!("stability_phik{k}");
            out.push(rec);
            let mut rec = check_phik_chain(&id, &fam, &phi, b_t)?;
            rec.check_id = format!("phik_chain{k}");
            out.push(rec);
        }
    }
    let n = subject.dimension();
    if n == 2 || n == 4 {
        out.push(check_michael_simon(&id, &fam.profiles, n)?);
    }
    if let Subject::Planar { field, .. } = subject {
        let curves = gauss_bonnet_curves(field, top)?;
        out.extend(check_gauss_bonnet(&id, &curves));
    }
    if n == 2 {
        out.extend(check_isoperimetric(&id, &fam));
        out.push(check_total_variation(&id, &fam, 0.5 * top)?);
    }
    if n <= 4 {
        let t_grid: Vec<f64> = opts.t_fractions.iter().map(|f| f * top).collect();
        let (mains, _) = check_main_estimate(subject, &t_grid)?;
        out.extend(mains);
    }
    if subject.convex() {
        out.push(check_boundary_bound(subject, opts.rho_fraction * subject.inradius())?);
    }
    out.push(check_lower_bound(subject, g, subject.lambda())?);
    if opts.samples > 0 {
        out.push(check_sampled_semistability(subject, g, opts.samples, opts.seed)?);
    }
    for r in &mut out {
        r.excluded_fraction = excluded;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planar::{DomainMask, ScalarField2D, Shape};
    use std::sync::Arc;

    fn paraboloid(scale: f64) -> Subject {
        let m = Arc::new(DomainMask::new(Shape::unit_disk(), 1.0 / 128.0).unwrap());
        let field = ScalarField2D::from_fn(m, move |x, y| scale * (1.0 - x * x - y * y));
        Subject::Planar { id: "paraboloid".into(), field, lambda: 1.0 }
    }

    #[test]
    fn boundary_bound_of_the_paraboloid() {
        let rec = check_boundary_bound(&paraboloid(1.0), 0.2).unwrap();
        assert!((rec.lhs - 0.36).abs() < 1e-3);
        assert!((rec.empirical_constant.unwrap() - 4.363).abs() < 0.01 * 4.363);
        assert!(check_boundary_bound(&paraboloid(1.0), 1.5).is_err());
    }

    #[test]
    fn lower_bound_of_the_torsion_function() {
        let s = paraboloid(0.25);
        let rec = check_lower_bound(&s, &Nonlinearity::Constant { c: 1.0 }, 1.0).unwrap();
        assert!((rec.lhs - 0.25).abs() < 0.02 * 0.25);
        assert!(rec.empirical_constant.unwrap() > 0.0);
        let zero = check_lower_bound(&s, &Nonlinearity::Constant { c: 0.0 }, 1.0).unwrap();
        assert!(zero.vacuous && zero.empirical_constant.is_none());
    }

    #[test]
    fn zero_phi_and_degenerate_threshold() {
        let s = paraboloid(1.0);
        let fam = s.profiles(32, Exec::default()).unwrap();
        let rec = check_stability_inequality("p", &fam, &PhiFunction::zero(fam.top)).unwrap();
        assert_eq!((rec.lhs, rec.rhs), (0.0, 0.0));
        assert!(rec.holds);
        let (recs, _) = check_main_estimate(&s, &[s.top()]).unwrap();
        assert_eq!(recs[0].lhs - recs[0].param, 0.0);
        assert!(recs[0].holds);
        assert!(check_main_estimate(&s, &[0.0]).is_err());
        assert!(check_michael_simon("p", &fam.profiles, 3).is_err());
    }

    #[test]
    fn sampled_forms_are_seeded() {
        let s = paraboloid(0.25);
        let g = Nonlinearity::Constant { c: 1.0 };
        let a = check_sampled_semistability(&s, &g, 4, 7).unwrap();
        let b = check_sampled_semistability(&s, &g, 4, 7).unwrap();
        assert_eq!(a, b);
        // f' = 0: Q is the Dirichlet energy itself
        assert!((a.rhs - 1.0).abs() < 1e-12);
        let g = Nonlinearity::Affine { a: 40.0, b: 1.0 };
        let r = check_sampled_semistability(&s, &g, 16, 1).unwrap();
        assert!(!r.holds);
    }

    #[test]
    fn circles_have_unit_turning() {
        let s = paraboloid(1.0);
        let Subject::Planar { field, .. } = &s else { unreachable!() };
        let fam = s.profiles(32, Exec::default()).unwrap();
        let rec = check_michael_simon("p", &fam.profiles, 2).unwrap();
        assert!(
            (rec.empirical_constant.unwrap() - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 0.02 / std::f64::consts::TAU
        );
        let curve = crate::levelgeom::extract_level(field, 0.5).unwrap();
        let gb = check_gauss_bonnet("p", &[curve]);
        assert!(gb.iter().all(|r| (r.empirical_constant.unwrap() - 1.0).abs() < 0.02));
    }
}
