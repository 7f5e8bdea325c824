use std::sync::Arc;

use super::domain::DomainMask;
use super::field::{ScalarField2D, TestFunction2D};
use super::multigrid::{Multigrid, ShiftedLaplacian};
use crate::error::{LabError, Result};
use crate::linalg::{conjugate_gradient, preconditioned_cg, CgOptions};
use crate::nonlinearity::Nonlinearity;
use crate::par::{self, Exec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preconditioning {
    /// Multigrid V-cycle, falling back to Jacobi when the hierarchy is not
    /// positive definite.
    #[default]
    Multigrid,
    Jacobi,
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    /// Target for the max-norm of `-Δ_h u - λ f(u)`.
    pub tol: f64,
    pub max_iter: usize,
    /// Consecutive residual increases that count as divergence.
    pub growth_window: usize,
    pub cg: CgOptions,
    pub precond: Preconditioning,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-10,
            max_iter: 50,
            growth_window: 5,
            cg: CgOptions::default(),
            precond: Preconditioning::default(),
        }
    }
}

/// Solves `(-Δ_h + diag(c)) x = b`; `x` holds the initial guess.
pub fn solve_shifted(
    mask: &DomainMask,
    c: Option<&[f64]>,
    b: &[f64],
    x: &mut [f64],
    cg: CgOptions,
    precond: Preconditioning,
) -> Result<usize> {
    let op = ShiftedLaplacian { mask, c, exec: cg.exec };
    if precond == Preconditioning::Multigrid {
        if let Ok(mg) = Multigrid::new(mask, c, cg.exec) {
            let x0 = x.to_vec();
            match preconditioned_cg(&op, &mg, b, x, cg) {
                Ok(it) => return Ok(it),
                Err(_) => x.copy_from_slice(&x0),
            }
        }
    }
    conjugate_gradient(&op, b, x, cg)
}

/// Max-norm of `-Δ_h u - λ f(u)` and the vector itself.
pub fn residual(mask: &DomainMask, f: &Nonlinearity, lambda: f64, u: &[f64], exec: Exec) -> Result<(f64, Vec<f64>)> {
    let mut r = vec![0.0; u.len()];
    mask.apply(exec, None, u, &mut r);
    let fu = eval_all(f, u, exec, false)?;
    let mut worst: f64 = 0.0;
    for k in 0..u.len() {
        r[k] -= lambda * fu[k];
        worst = worst.max(r[k].abs());
    }
    Ok((worst, r))
}

fn eval_all(f: &Nonlinearity, u: &[f64], exec: Exec, deriv: bool) -> Result<Vec<f64>> {
    let vals = par::map(exec, u, |&s| if deriv { f.deriv(s) } else { f.eval(s) });
    vals.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonReport {
    pub iterations: usize,
    pub residual: f64,
}

/// Newton iteration for `-Δ_h u = λ f(u)` with default options.
pub fn solve_newton(
    dom: &Arc<DomainMask>,
    f: &Nonlinearity,
    lambda: f64,
    init: &ScalarField2D,
) -> Result<ScalarField2D> {
    solve_newton_with(dom, f, lambda, init, &NewtonOptions::default()).map(|r| r.0)
}

pub fn solve_newton_with(
    dom: &Arc<DomainMask>,
    f: &Nonlinearity,
    lambda: f64,
    init: &ScalarField2D,
    opts: &NewtonOptions,
) -> Result<(ScalarField2D, NewtonReport)> {
    if !init.mask.same_grid(dom) {
        return Err(LabError::Argument("initial field lives on a different mask".into()));
    }
    if !lambda.is_finite() {
        return Err(LabError::Argument(format!("λ must be finite, got {lambda}")));
    }
    let exec = opts.cg.exec;
    let mut u = init.values.clone();
    let mut prev = f64::INFINITY;
    let mut growth = 0;
    let mut delta = vec![0.0; u.len()];
    for it in 0..=opts.max_iter {
        let (rmax, r) = residual(dom, f, lambda, &u, exec)?;
        if rmax < opts.tol {
            let field = ScalarField2D::new(dom.clone(), u)?;
            return Ok((field, NewtonReport { iterations: it, residual: rmax }));
        }
        if rmax > prev {
            growth += 1;
            if growth >= opts.growth_window {
                return Err(LabError::NewtonDivergence { step: it, residual: rmax, last_iterate: u });
            }
        } else {
            growth = 0;
        }
        prev = rmax;
        if it == opts.max_iter {
            break;
        }
        let c: Vec<f64> = eval_all(f, &u, exec, true)?.iter().map(|d| -lambda * d).collect();
        delta.iter_mut().for_each(|v| *v = 0.0);
        solve_shifted(dom, Some(&c), &r, &mut delta, opts.cg, opts.precond)?;
        for k in 0..u.len() {
            u[k] -= delta[k];
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(LabError::NewtonDivergence { step: it + 1, residual: f64::INFINITY, last_iterate: u });
        }
    }
    Err(LabError::NonConvergence { method: "Newton".into(), iterations: opts.max_iter, last: prev })
}

/// Smallest eigenvalue of `-Δ_h - λ f'(u)` with its eigenvector (unit
/// Euclidean norm, positive sum), by inverse iteration with a shift below
/// the spectrum.
pub fn linearized_eigenpair_2d(
    u: &ScalarField2D,
    f: &Nonlinearity,
    lambda: f64,
    opts: &EigenOptions2D,
) -> Result<(f64, TestFunction2D)> {
    let mask = &*u.mask;
    let exec = opts.cg.exec;
    let n = u.len();
    let c: Vec<f64> = eval_all(f, &u.values, exec, true)?.iter().map(|d| -lambda * d).collect();
    let sigma = c.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
    let shifted: Vec<f64> = c.iter().map(|v| v - sigma).collect();
    let mg = match opts.precond {
        Preconditioning::Multigrid => Multigrid::new(mask, Some(&shifted), exec).ok(),
        Preconditioning::Jacobi => None,
    };
    let op = ShiftedLaplacian { mask, c: Some(&shifted), exec };
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut y = x.clone();
    let mut ax = vec![0.0; n];
    let mut prev = f64::NAN;
    for _ in 0..opts.max_iter {
        match &mg {
            Some(mg) => preconditioned_cg(&op, mg, &x, &mut y, opts.cg)?,
            None => conjugate_gradient(&op, &x, &mut y, opts.cg)?,
        };
        let norm = par::dot(exec, &y, &y).sqrt();
        par::fill(exec, &mut x, |k| y[k] / norm);
        // warm start the next solve with the scaled previous solution
        y.iter_mut().zip(&x).for_each(|(a, b)| *a = *b * norm);
        mask.apply(exec, Some(&c), &x, &mut ax);
        let rq = par::dot(exec, &x, &ax);
        if (rq - prev).abs() < opts.tol * rq.abs().max(1.0) {
            if x.iter().sum::<f64>() < 0.0 {
                x.iter_mut().for_each(|v| *v = -*v);
            }
            return Ok((rq, ScalarField2D::new(u.mask.clone(), x)?));
        }
        prev = rq;
    }
    Err(LabError::NonConvergence { method: "inverse iteration".into(), iterations: opts.max_iter, last: prev })
}

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions2D {
    /// Convergence of the Rayleigh quotient, relative to `max(1, |μ|)`.
    pub tol: f64,
    pub max_iter: usize,
    pub cg: CgOptions,
    pub precond: Preconditioning,
}

impl Default for EigenOptions2D {
    fn default() -> Self {
        EigenOptions2D {
            tol: 1e-9,
            max_iter: 500,
            cg: CgOptions { tol: 1e-11, ..Default::default() },
            precond: Preconditioning::default(),
        }
    }
}

pub fn linearized_eigenvalue_2d(u: &ScalarField2D, f: &Nonlinearity, lambda: f64) -> Result<f64> {
    linearized_eigenpair_2d(u, f, lambda, &EigenOptions2D::default()).map(|p| p.0)
}

/// `Q_u(ξ) = ∫|∇ξ|² - λ f'(u) ξ²`, with the gradient term summed over grid
/// edges (boundary edges end at the crossing, where ξ = 0) and the zero-order
/// term by the node rule `h² Σ`.
pub fn quadratic_form(u: &ScalarField2D, f: &Nonlinearity, lambda: f64, xi: &TestFunction2D) -> Result<f64> {
    if !u.same_mask(xi) {
        return Err(LabError::Argument("test function and solution live on different masks".into()));
    }
    let mask = &*u.mask;
    let exec = Exec::default();
    let n = u.len();
    let fp = eval_all(f, &u.values, exec, true)?;
    let c: Vec<f64> = fp.iter().map(|d| -lambda * d).collect();
    let mut ax = vec![0.0; n];
    mask.apply(exec, Some(&c), &xi.values, &mut ax);
    Ok(mask.h * mask.h * par::dot(exec, &xi.values, &ax))
}

/// One point of a planar minimal branch.
#[derive(Debug, Clone)]
pub struct PlanarBranchPoint {
    pub lambda: f64,
    pub field: ScalarField2D,
    pub lambda1: f64,
    pub newton_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct PlanarBranch {
    pub points: Vec<PlanarBranchPoint>,
    /// Largest λ with a converged solution: a lower bound for λ*.
    pub last_good: Option<f64>,
    /// Why continuation stopped before the end of the grid.
    pub stop_reason: Option<String>,
}

#[derive(Debug, Clone, Copy)]
pub struct BranchOptions2D {
    pub newton: NewtonOptions,
    pub eigen: EigenOptions2D,
    /// Step halvings tried before the branch is declared ended.
    pub max_halvings: usize,
}

impl Default for BranchOptions2D {
    fn default() -> Self {
        BranchOptions2D { newton: NewtonOptions::default(), eigen: EigenOptions2D::default(), max_halvings: 2 }
    }
}

/// Warm-started continuation in λ from `u ≡ 0`.
pub fn minimal_branch_2d(
    dom: &Arc<DomainMask>,
    g: &Nonlinearity,
    lambda_grid: &[f64],
    opts: &BranchOptions2D,
) -> Result<PlanarBranch> {
    if lambda_grid.is_empty() || !(lambda_grid[0] > 0.0) {
        return Err(LabError::Argument("λ grid must start at a positive value".into()));
    }
    if lambda_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(LabError::Argument("λ grid must be strictly increasing".into()));
    }
    let mut points: Vec<PlanarBranchPoint> = Vec::new();
    let mut current = ScalarField2D::zeros(dom.clone());
    let mut last: f64 = 0.0;
    let mut stop_reason = None;
    'grid: for &target in lambda_grid {
        let mut trial = target;
        let mut failures = 0;
        while last < target {
            match solve_newton_with(dom, g, trial, &current, &opts.newton) {
                Ok((field, rep)) => {
                    let lambda1 = linearized_eigenpair_2d(&field, g, trial, &opts.eigen).map(|p| p.0)?;
                    points.push(PlanarBranchPoint {
                        lambda: trial,
                        field: field.clone(),
                        lambda1,
                        newton_iterations: rep.iterations,
                    });
                    current = field;
                    last = trial;
                    trial = target;
                }
                Err(e) => {
                    failures += 1;
                    if failures > opts.max_halvings {
                        stop_reason = Some(format!("no convergence at λ = {trial}: {e}"));
                        break 'grid;
                    }
                    trial = last + 0.5 * (trial - last);
                }
            }
        }
    }
    let last_good = points.last().map(|p| p.lambda);
    Ok(PlanarBranch { points, last_good, stop_reason })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planar::shape::Shape;
    use std::f64::consts::PI;

    fn center_value(u: &ScalarField2D, x: f64, y: f64) -> f64 {
        u.value_at(x, y)
    }

    #[test]
    fn poisson_on_the_disk() {
        let dom = Arc::new(DomainMask::new(Shape::unit_disk(), 1.0 / 64.0).unwrap());
        let u =
            solve_newton(&dom, &Nonlinearity::Constant { c: 1.0 }, 1.0, &ScalarField2D::zeros(dom.clone())).unwrap();
        assert!((center_value(&u, 0.0, 0.0) - 0.25).abs() < 1e-4);
    }

    #[test]
    fn jacobi_and_multigrid_agree() {
        let dom = Arc::new(DomainMask::new(Shape::Ellipse { cx: 0.0, cy: 0.0, a: 1.0, b: 0.6 }, 1.0 / 32.0).unwrap());
        let g = Nonlinearity::Exponential;
        let z = ScalarField2D::zeros(dom.clone());
        let (a, _) = solve_newton_with(&dom, &g, 1.0, &z, &NewtonOptions::default()).unwrap();
        let jac = NewtonOptions { precond: Preconditioning::Jacobi, ..Default::default() };
        let (b, _) = solve_newton_with(&dom, &g, 1.0, &z, &jac).unwrap();
        let diff = a.values.iter().zip(&b.values).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-11);
    }

    #[test]
    fn laplacian_eigenvalue_of_the_square() {
        let dom = Arc::new(DomainMask::new(Shape::unit_square(), 1.0 / 64.0).unwrap());
        let u = ScalarField2D::zeros(dom.clone());
        let (mu, phi) =
            linearized_eigenpair_2d(&u, &Nonlinearity::Constant { c: 1.0 }, 1.0, &Default::default()).unwrap();
        // discrete value 8/h² sin²(πh/2)
        let h = dom.h;
        let exact = 8.0 / (h * h) * (PI * h / 2.0).sin().powi(2);
        assert!((mu - exact).abs() < 1e-7 * exact);
        let q = quadratic_form(&u, &Nonlinearity::Constant { c: 1.0 }, 1.0, &phi).unwrap();
        assert!((q - mu * h * h).abs() < 1e-9 * mu);
    }

    #[test]
    fn divergence_and_mask_mismatch() {
        let dom = Arc::new(DomainMask::new(Shape::unit_disk(), 1.0 / 16.0).unwrap());
        let other = Arc::new(DomainMask::new(Shape::unit_disk(), 1.0 / 8.0).unwrap());
        let g = Nonlinearity::Exponential;
        assert!(solve_newton(&dom, &g, 1.0, &ScalarField2D::zeros(other.clone())).is_err());
        assert!(solve_newton(&dom, &g, 5.0, &ScalarField2D::zeros(dom.clone())).is_err());
        let u = ScalarField2D::zeros(dom.clone());
        let xi = ScalarField2D::zeros(other);
        assert!(matches!(quadratic_form(&u, &g, 1.0, &xi), Err(LabError::Argument(_))));
    }
}
