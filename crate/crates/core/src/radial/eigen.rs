use super::solution::RadialSolution;
use crate::error::Result;
use crate::linalg::SymTridiag;
use crate::nonlinearity::Nonlinearity;

/// Node placement for the eigen discretization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenGrid {
    Uniform,
    /// Uniform unless the core length scale `sqrt(2n / (λ g(m)))` spans fewer
    /// than [`CORE_NODES`] uniform cells; then `r = sinh(Aξ)/sinh(A)` with `A`
    /// chosen so the first cell resolves the core.
    #[default]
    Auto,
}

/// Cells required across the core of a concentrated profile.
pub const CORE_NODES: f64 = 20.0;

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    /// Grid nodes on [0, 1), the Dirichlet node r = 1 excluded.
    pub nodes: usize,
    pub grid: EigenGrid,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions { nodes: 4096, grid: EigenGrid::Auto, tol: 1e-9, max_iter: 500 }
    }
}

/// Grid radii `r_0 = 0 < … < r_{N-1} < r_N = 1`, returned with `r_N`.
pub fn eigen_grid(sol: &RadialSolution, g: &Nonlinearity, nodes: usize, grid: EigenGrid) -> Result<Vec<f64>> {
    let uniform = |i: usize| i as f64 / nodes as f64;
    let core = (2.0 * sol.n as f64 / (sol.lambda * g.eval(sol.center_value())?).max(1e-300)).sqrt();
    let target = core / CORE_NODES * nodes as f64;
    if grid == EigenGrid::Uniform || target >= 1.0 {
        return Ok((0..=nodes).map(uniform).collect());
    }
    // A / sinh(A) = target, decreasing in A
    let (mut lo, mut hi): (f64, f64) = (1e-9, 700.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid / mid.sinh() > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a = 0.5 * (lo + hi);
    Ok((0..=nodes).map(|i| (a * uniform(i)).sinh() / a.sinh()).collect())
}

#[derive(Debug, Clone)]
pub struct RadialEigen {
    pub value: f64,
    /// Grid radii of the eigenfunction samples.
    pub r: Vec<f64>,
    /// Eigenfunction φ (not the symmetrized vector), φ(0) > 0.
    pub phi: Vec<f64>,
}

/// Finite-volume discretization of `-φ'' - (n-1)/r φ' - λ g'(u) φ` on the
/// radii `r` (last entry is the Dirichlet node), symmetrized by the square
/// roots of the shell volumes. On a uniform grid the r = 0 row reduces to the
/// symmetric stencil `-2n (φ₁ - φ₀)/h²` and interior rows to central
/// differences.
pub fn linearized_operator(sol: &RadialSolution, g: &Nonlinearity, r: &[f64]) -> Result<(SymTridiag, Vec<f64>)> {
    let n = sol.n as i32;
    let nf = sol.n as f64;
    let nodes = r.len() - 1;
    let vol = |a: f64, b: f64| (b.powi(n) - a.powi(n)) / nf;
    let mut v = vec![0.0; nodes];
    let mut face = vec![0.0; nodes];
    for i in 0..nodes {
        let left = if i > 0 { 0.5 * (r[i - 1] + r[i]) } else { 0.0 };
        let right = 0.5 * (r[i] + r[i + 1]);
        v[i] = vol(left, right);
        face[i] = right.powi(n - 1) / (r[i + 1] - r[i]);
    }
    let mut d = vec![0.0; nodes];
    let mut e = vec![0.0; nodes - 1];
    for i in 0..nodes {
        let (u, _) = sol.eval(r[i]);
        let left = if i > 0 { face[i - 1] } else { 0.0 };
        d[i] = (face[i] + left) / v[i] - sol.lambda * g.deriv(u)?;
        if i + 1 < nodes {
            e[i] = -face[i] / (v[i] * v[i + 1]).sqrt();
        }
    }
    Ok((SymTridiag { d, e }, v))
}

/// First Dirichlet eigenvalue of the linearization at a radial solution.
pub fn linearized_eigenvalue(sol: &RadialSolution, g: &Nonlinearity, opts: &EigenOptions) -> Result<RadialEigen> {
    let mut r = eigen_grid(sol, g, opts.nodes, opts.grid)?;
    let (a, vol) = linearized_operator(sol, g, &r)?;
    let pair = a.smallest_eigenpair(opts.tol, opts.max_iter)?;
    r.pop();
    let phi = pair.vector.iter().zip(&vol).map(|(x, w)| x / w.sqrt()).collect();
    Ok(RadialEigen { value: pair.value, r, phi })
}
