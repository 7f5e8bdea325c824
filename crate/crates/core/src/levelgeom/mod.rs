//! Level sets of planar fields and the geometric quantities carried by them.

mod contour;
mod planar;
mod profile;
mod quadrature;

pub use contour::{extract_level, vertex_quantities, Component, LevelCurve};
pub use planar::{
    band_integral, coarea_check, coarea_from_profiles, grad_power_integral, level_grid, level_quantities,
    profile_family, profile_of, sublevel_energy, superlevel_volume, CoareaCheck, ProfileFamily, EPS_REG, EPS_S,
};
pub use profile::{profiles_to_csv, LevelProfile};
pub use quadrature::{s_integral, s_integral_window};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::LabError;
    use crate::planar::{DomainMask, ScalarField2D, Shape};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn disk_field(h: f64, f: impl Fn(f64) -> f64 + Sync) -> ScalarField2D {
        let m = Arc::new(DomainMask::new(Shape::unit_disk(), h).unwrap());
        ScalarField2D::from_fn(m, |x, y| f(x.hypot(y)))
    }

    #[test]
    fn cone_levels() {
        let u = disk_field(1.0 / 128.0, |r| 1.0 - r);
        let c = extract_level(&u, 0.5).unwrap();
        assert_eq!(c.components.len(), 1);
        let comp = &c.components[0];
        assert!(comp.closed && comp.points[0] == *comp.points.last().unwrap());
        assert!((comp.length() - PI).abs() < 0.01 * PI);
        assert!(comp.curvature.iter().all(|k| (k - 2.0).abs() < 0.04));
        assert!((comp.turning() - 2.0 * PI).abs() < 0.05 * 2.0 * PI);
        let p = level_quantities(&u, 0.5).unwrap();
        assert!((p.h2 - PI).abs() < 0.01 * PI);
        assert!((p.h1 - 4.0 * PI).abs() < 0.02 * 4.0 * PI);
        assert!((p.volume - PI / 4.0).abs() < 0.01 * PI / 4.0);
        assert!(p.regular);
        assert!((sublevel_energy(&u, 0.5).unwrap() - 3.0 * PI).abs() < 0.01 * 3.0 * PI);
        assert!((sublevel_energy(&u, 1.0).unwrap() - PI).abs() < 0.01 * PI);
        let co = coarea_check(&u, 64).unwrap();
        assert!(co.gap < 0.02, "{co:?}");
        assert!(matches!(extract_level(&u, 1.5), Err(LabError::Range { .. })));
        assert!(matches!(sublevel_energy(&u, 0.0), Err(LabError::Range { .. })));
    }

    #[test]
    fn paraboloid_levels() {
        let u = disk_field(1.0 / 128.0, |r| 1.0 - r * r);
        let p = level_quantities(&u, 0.75).unwrap();
        assert!((p.h2 - PI).abs() < 0.01 * PI);
        assert!((p.h1 - 4.0 * PI).abs() < 0.02 * 4.0 * PI);
        let co = coarea_check(&u, 64).unwrap();
        assert!((co.rhs - 16.0 * PI / 3.0).abs() < 0.01 * 16.0 * PI / 3.0);
        assert!(co.gap < 0.02, "{co:?}");
        // B_t against the s-integral of h₂
        let fam = profile_family(&u, 64, Default::default()).unwrap();
        let t = 0.5;
        let reg: Vec<_> = fam.profiles.iter().filter(|p| p.s <= t).collect();
        let s: Vec<f64> = reg.iter().map(|p| p.s).collect();
        let f: Vec<f64> = reg.iter().map(|p| p.h2).collect();
        let via_levels = s_integral(&s, &f, 0.0, t, true) / (t * t);
        let b = sublevel_energy(&u, t).unwrap();
        assert!((via_levels - b).abs() < 0.02 * b);
    }

    #[test]
    fn square_contour() {
        let m = Arc::new(DomainMask::new(Shape::Square { x0: -1.0, y0: -1.0, side: 2.0 }, 1.0 / 64.0).unwrap());
        let u = ScalarField2D::from_fn(m, |x, y| 1.0 - x.abs().max(y.abs()));
        let c = extract_level(&u, 0.5).unwrap();
        assert_eq!(c.components.len(), 1);
        assert!((c.length() - 4.0).abs() < 0.02 * 4.0);
    }

    #[test]
    fn saddle_rule_splits_two_bumps() {
        let m = Arc::new(DomainMask::new(Shape::Ellipse { cx: 0.0, cy: 0.0, a: 2.0, b: 1.0 }, 1.0 / 64.0).unwrap());
        let bump = |x: f64, y: f64| (-8.0 * (x * x + y * y)).exp();
        let u =
            ScalarField2D::from_fn(m, move |x, y| (bump(x - 0.8, y) + bump(x + 0.8, y)) * (1.0 - x * x / 4.0 - y * y));
        let c = extract_level(&u, 0.3).unwrap();
        assert_eq!(c.components.len(), 2);
        assert!(c.components.iter().all(|k| k.closed));
        let low = extract_level(&u, 0.002).unwrap();
        assert_eq!(low.components.len(), 1);
    }
}
