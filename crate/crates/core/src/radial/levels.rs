use super::solution::RadialSolution;
use super::special::{ball_volume, sphere_area};
use crate::error::Result;
use crate::levelgeom::LevelProfile;

/// Closed-form level quantities of a radial profile: every level set is the
/// sphere of radius `r_s`, so `∇_T|∇u| = 0` and `|A|² = (n-1)/r_s²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialLevel {
    pub s: f64,
    pub r_s: f64,
    pub grad: f64,
    pub h1: f64,
    pub h2: f64,
    pub area: f64,
    /// |A|
    pub a_norm: f64,
}

pub fn radial_level_quantities(sol: &RadialSolution, s: f64) -> Result<RadialLevel> {
    let r_s = sol.level_radius(s)?;
    let grad = sol.eval(r_s).1.abs();
    let n = sol.n as i32;
    let omega = sphere_area(sol.n);
    let area = omega * r_s.powi(n - 1);
    Ok(RadialLevel {
        s,
        r_s,
        grad,
        h1: (n - 1) as f64 * omega * r_s.powi(n - 3) * grad,
        h2: area * grad.powi(3),
        area,
        a_norm: ((n - 1) as f64).sqrt() / r_s,
    })
}

impl RadialLevel {
    pub fn to_profile(&self, n: usize) -> LevelProfile {
        LevelProfile {
            s: self.s,
            length: self.area,
            h1: self.h1,
            h2: self.h2,
            volume: ball_volume(n) * self.r_s.powi(n as i32),
            min_grad: self.grad,
            regular: self.grad > 0.0,
            inv_grad: self.area / self.grad,
            abs_curvature: self.area * self.a_norm,
        }
    }
}

/// Profiles at `levels`, each marked regular when `|u'| > eps_reg`.
pub fn radial_profiles(sol: &RadialSolution, levels: &[f64], eps_reg: f64) -> Result<Vec<LevelProfile>> {
    levels
        .iter()
        .map(|&s| {
            radial_level_quantities(sol, s).map(|q| {
                let mut p = q.to_profile(sol.n);
                p.regular = q.grad > eps_reg;
                p
            })
        })
        .collect()
}

/// Both sides of the Hessian identity for a radial field at radius `r`,
/// evaluated at the point `r (1, …, 1)/√n`:
/// `Σ u_ij² − Σ_i (Σ_j u_ij u_j / |∇u|)²` and `|A|² |∇u|²`.
pub fn radial_identity_sides(sol: &RadialSolution, r: f64) -> (f64, f64) {
    let n = sol.n;
    let (_, du) = sol.eval(r);
    let ddu = sol.second_derivative(r);
    let x: Vec<f64> = vec![r / (n as f64).sqrt(); n];
    let grad: Vec<f64> = x.iter().map(|xi| du * xi / r).collect();
    let gnorm = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
    let hess = |i: usize, j: usize| {
        let xx = x[i] * x[j] / (r * r);
        let delta = if i == j { 1.0 } else { 0.0 };
        ddu * xx + du / r * (delta - xx)
    };
    let mut frob = 0.0;
    let mut proj = 0.0;
    for i in 0..n {
        let mut hu = 0.0;
        for j in 0..n {
            frob += hess(i, j).powi(2);
            hu += hess(i, j) * grad[j] / gnorm;
        }
        proj += hu * hu;
    }
    let a2 = (n - 1) as f64 / (r * r);
    (frob - proj, a2 * du * du)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> Vec<f64> {
        (0..=1000).map(|i| i as f64 / 1000.0).collect()
    }

    #[test]
    fn cone_profile_in_the_plane() {
        let sol = RadialSolution::from_profile(2, 0.0, grid(), |r| 1.0 - r, |_| -1.0, |_| 0.0, "synthetic");
        let q = radial_level_quantities(&sol, 0.5).unwrap();
        assert!((q.r_s - 0.5).abs() < 1e-12);
        assert!((q.h2 - PI).abs() < 1e-10);
        assert!((q.h1 - 4.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn paraboloid_profile_in_the_plane() {
        let sol = RadialSolution::from_profile(2, 0.0, grid(), |r| 1.0 - r * r, |r| -2.0 * r, |_| -2.0, "synthetic");
        let q = radial_level_quantities(&sol, 0.75).unwrap();
        assert!((q.r_s - 0.5).abs() < 1e-12 && (q.grad - 1.0).abs() < 1e-12);
        assert!((q.h2 - PI).abs() < 1e-10 && (q.h1 - 4.0 * PI).abs() < 1e-10);
        assert!(radial_level_quantities(&sol, 1.2).is_err());
        assert!(radial_level_quantities(&sol, 0.0).is_err());
    }

    #[test]
    fn four_dimensional_ratio_is_level_independent() {
        let sol = RadialSolution::from_profile(4, 0.0, grid(), |r| 1.0 - r * r, |r| -2.0 * r, |_| -2.0, "synthetic");
        let expected = (2.0 * PI * PI).powf(1.0 / 3.0) / (6.0 * PI * PI);
        for &s in &[0.1, 0.4, 0.9] {
            let q = radial_level_quantities(&sol, s).unwrap();
            assert!((q.h2.powf(1.0 / 3.0) / q.h1 - expected).abs() < 1e-12);
        }
    }
}
