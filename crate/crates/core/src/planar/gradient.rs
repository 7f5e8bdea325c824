//! Pointwise checks of the equation satisfied by `|∇u|` along level sets.

use super::field::ScalarField2D;
use crate::error::{LabError, Result};
use crate::nonlinearity::Nonlinearity;

/// Both sides of the Hessian identity at an unknown:
/// `Σ u_ij² - Σ_i (Σ_j u_ij u_j / |∇u|)²` and `|∇_T|∇u||² + |A|²|∇u|²`,
/// the latter from the tangential and normal components of the Hessian.
pub fn hessian_identity_sides(u: &ScalarField2D, k: usize) -> (f64, f64) {
    let (ux, uy) = u.gradient(k);
    let (a, b, c) = u.hessian(k);
    let g = ux.hypot(uy);
    let (nx, ny) = (ux / g, uy / g);
    let (tx, ty) = (-ny, nx);
    let frob = a * a + 2.0 * b * b + c * c;
    let (hn0, hn1) = (a * nx + b * ny, b * nx + c * ny);
    let lhs = frob - (hn0 * hn0 + hn1 * hn1);
    // ∂_T|∇u| = τᵀHν, |A| |∇u| = |τᵀHτ|
    let tan = tx * hn0 + ty * hn1;
    let curv = tx * (a * tx + b * ty) + ty * (b * tx + c * ty);
    (lhs, tan * tan + curv * curv)
}

/// Nodes whose whole 5-point neighborhood is away from the boundary and
/// whose gradient exceeds `threshold · max|∇u|`.
fn filtered(u: &ScalarField2D, threshold: f64, ring: bool) -> Result<Vec<usize>> {
    if !(threshold > 0.0) {
        return Err(LabError::Argument(format!("threshold must be positive, got {threshold}")));
    }
    let m = &*u.mask;
    let cut = threshold * u.max_grad();
    let keep: Vec<usize> = (0..u.len())
        .filter(|&k| {
            !m.is_boundary_adjacent(k)
                && (!ring || m.nbr[k].iter().all(|&q| !m.is_boundary_adjacent(q as usize)))
                && u.grad_norm(k) > cut
        })
        .collect();
    if keep.is_empty() {
        return Err(LabError::DegenerateField(format!("no interior node with |∇u| > {threshold}·max|∇u|")));
    }
    Ok(keep)
}

/// Largest relative gap between the two sides of [`hessian_identity_sides`].
pub fn hessian_identity_error(u: &ScalarField2D, threshold: f64) -> Result<f64> {
    let nodes = filtered(u, threshold, false)?;
    Ok(nodes
        .iter()
        .map(|&k| {
            let (l, r) = hessian_identity_sides(u, k);
            (l - r).abs() / l.abs().max(r.abs()).max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max))
}

/// Max relative residual of `(Δ + λ f'(u))|∇u| = (|∇_T|∇u||² + |A|²|∇u|²)/|∇u|`
/// over filtered nodes; the left side uses the 5-point Laplacian of the
/// gradient norm, the right side the Hessian.
pub fn gradient_equation_residual(u: &ScalarField2D, f: &Nonlinearity, lambda: f64, threshold: f64) -> Result<f64> {
    let nodes = filtered(u, threshold, true)?;
    let m = &*u.mask;
    let ih2 = 1.0 / (m.h * m.h);
    let mut worst: f64 = 0.0;
    for &k in &nodes {
        let g = u.grad_norm(k);
        let lap: f64 = m.nbr[k].iter().map(|&q| u.grad_norm(q as usize) - g).sum::<f64>() * ih2;
        let lhs = lap + lambda * f.deriv(u.values[k])? * g;
        let rhs = hessian_identity_sides(u, k).0 / g;
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planar::{DomainMask, Shape};
    use std::sync::Arc;

    #[test]
    fn paraboloid_satisfies_the_gradient_equation() {
        let dom = Arc::new(DomainMask::new(Shape::unit_disk(), 1.0 / 256.0).unwrap());
        let u = ScalarField2D::from_fn(dom, |x, y| 1.0 - x * x - y * y);
        let f = Nonlinearity::Constant { c: 4.0 };
        let r = gradient_equation_residual(&u, &f, 1.0, 0.1).unwrap();
        assert!(r < 1e-3, "{r}");
        assert!(hessian_identity_error(&u, 0.1).unwrap() < 1e-12);
        assert!(matches!(gradient_equation_residual(&u, &f, 1.0, 1.1), Err(LabError::DegenerateField(_))));
    }
}
