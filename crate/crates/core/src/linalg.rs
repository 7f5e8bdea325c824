//! Small linear-algebra kernels: symmetric tridiagonal eigen tools and a
//! diagonally preconditioned conjugate gradient for the planar operators.

use crate::error::{LabError, Result};
use crate::par::{self, Exec};

/// Symmetric tridiagonal matrix with diagonal `d` and off-diagonal `e`.
#[derive(Debug, Clone)]
pub struct SymTridiag {
    pub d: Vec<f64>,
    pub e: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
}

impl SymTridiag {
    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut v = self.d[i] * x[i];
            if i > 0 {
                v += self.e[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                v += self.e[i] * x[i + 1];
            }
            y[i] = v;
        }
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence).
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.len() {
            let off = if i > 0 { self.e[i - 1] * self.e[i - 1] } else { 0.0 };
            q = self.d[i] - x - if i > 0 { off / q } else { 0.0 };
            if q == 0.0 {
                q = -f64::EPSILON * (self.d[i].abs() + x.abs() + 1.0);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.e[i - 1].abs() } else { 0.0 } + if i + 1 < n { self.e[i].abs() } else { 0.0 };
            lo = lo.min(self.d[i] - r);
            hi = hi.max(self.d[i] + r);
        }
        (lo, hi)
    }

    /// Solves `(A - σ I) x = b` by the Thomas algorithm.
    pub fn solve_shifted(&self, sigma: f64, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        let mut c = vec![0.0; n];
        let mut x = vec![0.0; n];
        let mut piv = self.d[0] - sigma;
        if piv == 0.0 {
            return Err(LabError::LinearSolve("zero pivot in tridiagonal solve".into()));
        }
        x[0] = b[0] / piv;
        for i in 1..n {
            c[i - 1] = self.e[i - 1] / piv;
            piv = self.d[i] - sigma - self.e[i - 1] * c[i - 1];
            if piv == 0.0 {
                return Err(LabError::LinearSolve("zero pivot in tridiagonal solve".into()));
            }
            x[i] = (b[i] - self.e[i - 1] * x[i - 1]) / piv;
        }
        for i in (0..n - 1).rev() {
            x[i] -= c[i] * x[i + 1];
        }
        Ok(x)
    }

    /// Smallest eigenpair: Sturm bisection brackets the lowest eigenvalue, and
    /// shifted inverse iteration from just below the bracket converges the
    /// Rayleigh quotient to `tol` (relative to `max(1, |μ|)`).
    pub fn smallest_eigenpair(&self, tol: f64, max_iter: usize) -> Result<EigenPair> {
        let (mut lo, mut hi) = self.gershgorin();
        let width = (hi - lo).max(1.0);
        lo -= 1e-8 * width;
        hi += 1e-8 * width;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.count_below(mid) >= 1 {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-7 * hi.abs().max(1.0) {
                break;
            }
        }
        let sigma = lo - 1e-7 * hi.abs().max(1.0);
        let n = self.len();
        let mut x = vec![1.0 / (n as f64).sqrt(); n];
        let mut ax = vec![0.0; n];
        let mut prev = f64::NAN;
        for it in 1..=max_iter {
            let mut y = self.solve_shifted(sigma, &x)?;
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            y.iter_mut().for_each(|v| *v /= norm);
            x = y;
            self.matvec(&x, &mut ax);
            let rq: f64 = x.iter().zip(&ax).map(|(a, b)| a * b).sum();
            if (rq - prev).abs() < tol * rq.abs().max(1.0) {
                if x.iter().sum::<f64>() < 0.0 {
                    x.iter_mut().for_each(|v| *v = -*v);
                }
                return Ok(EigenPair { value: rq, vector: x, iterations: it });
            }
            prev = rq;
        }
        Err(LabError::NonConvergence { method: "shifted inverse iteration".into(), iterations: max_iter, last: prev })
    }
}

/// Symmetric linear operator on a flat vector.
pub trait SymOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
    fn diagonal(&self) -> Vec<f64>;
}

#[derive(Debug, Clone, Copy)]
pub struct CgOptions {
    /// Relative residual target ‖r‖ / ‖b‖.
    pub tol: f64,
    pub max_iter: usize,
    pub exec: Exec,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions { tol: 1e-12, max_iter: 20_000, exec: Exec::default() }
    }
}

/// Symmetric positive definite approximation of an inverse.
pub trait Preconditioner: Sync {
    fn precondition(&self, r: &[f64], z: &mut [f64]);
}

/// Inverse of the operator diagonal.
pub struct Jacobi {
    inv: Vec<f64>,
    exec: Exec,
}

impl Jacobi {
    pub fn new<A: SymOperator + ?Sized>(a: &A, exec: Exec) -> Result<Self> {
        let diag = a.diagonal();
        if diag.iter().any(|&d| !(d > 0.0)) {
            return Err(LabError::LinearSolve("non-positive diagonal; operator is not SPD".into()));
        }
        Ok(Jacobi { inv: diag.iter().map(|d| 1.0 / d).collect(), exec })
    }
}

impl Preconditioner for Jacobi {
    fn precondition(&self, r: &[f64], z: &mut [f64]) {
        par::fill(self.exec, z, |i| r[i] * self.inv[i]);
    }
}

/// Jacobi-preconditioned conjugate gradient; `x` holds the initial guess.
/// Returns the iteration count.
pub fn conjugate_gradient<A: SymOperator>(a: &A, b: &[f64], x: &mut [f64], opts: CgOptions) -> Result<usize> {
    let jacobi = Jacobi::new(a, opts.exec)?;
    preconditioned_cg(a, &jacobi, b, x, opts)
}

/// Preconditioned conjugate gradient with an arbitrary SPD preconditioner.
pub fn preconditioned_cg<A: SymOperator + ?Sized, P: Preconditioner + ?Sized>(
    a: &A,
    pre: &P,
    b: &[f64],
    x: &mut [f64],
    opts: CgOptions,
) -> Result<usize> {
    let n = a.dim();
    let exec = opts.exec;
    let bnorm = par::dot(exec, b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(0);
    }
    let mut r = vec![0.0; n];
    a.apply(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z = vec![0.0; n];
    pre.precondition(&r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = par::dot(exec, &r, &z);
    for it in 0..opts.max_iter {
        let rnorm = par::dot(exec, &r, &r).sqrt();
        if rnorm <= opts.tol * bnorm {
            return Ok(it);
        }
        if !(rz > 0.0) {
            return Err(LabError::LinearSolve(format!("preconditioner not positive definite (rᵀz = {rz:e})")));
        }
        a.apply(&p, &mut ap);
        let pap = par::dot(exec, &p, &ap);
        if !(pap > 0.0) {
            return Err(LabError::LinearSolve(format!(
                "operator not positive definite (pᵀAp = {pap:e} at iteration {it})"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        pre.precondition(&r, &mut z);
        let rz_new = par::dot(exec, &r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(LabError::LinearSolve(format!("CG did not reach {:e} in {} iterations", opts.tol, opts.max_iter)))
}
