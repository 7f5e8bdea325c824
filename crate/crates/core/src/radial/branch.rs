use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::eigen::{linearized_eigenvalue, EigenOptions};
use super::shooting::{solve_shooting, ShootingOptions};
use crate::error::{LabError, Result};
use crate::nonlinearity::Nonlinearity;
use crate::par::{self, Exec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub m: f64,
    pub lambda: f64,
    pub sup_norm: f64,
    pub lambda1: f64,
    pub l1_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchGap {
    pub m: f64,
    pub error: String,
}

/// Solution diagram parameterized by the center value `m = u(0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub gaps: Vec<BranchGap>,
    pub g_id: String,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BranchOptions {
    pub shooting: ShootingOptions,
    pub eigen: EigenOptions,
    pub exec: Exec,
}

/// One branch point: shooting solve plus the linearized eigenvalue.
pub fn branch_point(n: usize, g: &Nonlinearity, m: f64, opts: &BranchOptions) -> Result<BranchPoint> {
    let (lambda, sol) = solve_shooting(n, g, m, &opts.shooting)?;
    let eig = linearized_eigenvalue(&sol, g, &opts.eigen)?;
    Ok(BranchPoint { m, lambda, sup_norm: m, lambda1: eig.value, l1_norm: sol.l1_norm() })
}

pub fn trace_branch(n: usize, g: &Nonlinearity, m_grid: &[f64], opts: &BranchOptions) -> Result<Branch> {
    if m_grid.is_empty() {
        return Err(LabError::Argument("empty m grid".into()));
    }
    if m_grid.iter().any(|&m| !(m > 0.0)) || m_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LabError::Argument("m grid must be positive and strictly increasing".into()));
    }
    let results = par::map(opts.exec, m_grid, |&m| branch_point(n, g, m, opts));
    let mut branch = Branch { points: Vec::new(), gaps: Vec::new(), g_id: g.id(), n };
    for (&m, res) in m_grid.iter().zip(results) {
        match res {
            Ok(p) => branch.points.push(p),
            Err(e) => branch.gaps.push(BranchGap { m, error: e.to_string() }),
        }
    }
    Ok(branch)
}

/// `λ*` estimate from an interior maximum of `λ(m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremal {
    pub lambda_star: f64,
    pub m_at_max: f64,
    pub bracket: (f64, f64),
}

/// Maximum of `λ` over the branch refined by the parabola through the three
/// points around it.
pub fn extremal_parameter(b: &Branch) -> Result<Extremal> {
    let p = &b.points;
    if p.len() < 3 {
        return Err(LabError::InsufficientData(format!("branch has {} points, need 3", p.len())));
    }
    let i = argmax(p);
    if i == 0 || i == p.len() - 1 {
        return Err(LabError::BracketNotFound { m: p[i].m });
    }
    let (x0, x1, x2) = (p[i - 1].m, p[i].m, p[i + 1].m);
    let (y0, y1, y2) = (p[i - 1].lambda, p[i].lambda, p[i + 1].lambda);
    // vertex of the interpolating parabola (divided differences)
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let c2 = (d12 - d01) / (x2 - x0);
    let (m_at_max, lambda_star) = if c2 < 0.0 {
        let c1 = d01 - c2 * (x0 + x1);
        let xv = (-c1 / (2.0 * c2)).clamp(x0, x2);
        (xv, y0 + d01 * (xv - x0) + c2 * (xv - x0) * (xv - x1))
    } else {
        (x1, y1)
    };
    Ok(Extremal { lambda_star, m_at_max, bracket: (x0, x2) })
}

/// Like [`extremal_parameter`], but a maximum at the right end of the grid is
/// accepted when `λ(m)` has flattened there (last relative increment below
/// `flat_tol`). This is the monotone branch that converges to the parameter
/// of a singular extremal solution.
pub fn extremal_supremum(b: &Branch, flat_tol: f64) -> Result<Extremal> {
    match extremal_parameter(b) {
        Err(LabError::BracketNotFound { .. }) if argmax(&b.points) == b.points.len() - 1 => {
            let k = b.points.len();
            let (a, z) = (b.points[k - 2], b.points[k - 1]);
            if (z.lambda - a.lambda).abs() <= flat_tol * z.lambda.abs() {
                Ok(Extremal { lambda_star: z.lambda, m_at_max: z.m, bracket: (a.m, z.m) })
            } else {
                Err(LabError::BracketNotFound { m: z.m })
            }
        }
        other => other,
    }
}

/// Solution on the minimal part of `b` with parameter `lambda`, found by
/// safeguarded secant iteration on `λ(m)` between neighbouring branch
/// points. Values past the last minimal point give a selector error.
pub fn solution_at_lambda(
    b: &Branch,
    g: &Nonlinearity,
    lambda: f64,
    opts: &ShootingOptions,
) -> Result<super::solution::RadialSolution> {
    let minimal = b.minimal_part();
    let available = || minimal.iter().map(|p| p.lambda).collect::<Vec<_>>();
    let i = match minimal.iter().position(|p| p.lambda >= lambda) {
        Some(i) if lambda > 0.0 => i,
        _ => return Err(LabError::Selector { requested: lambda, available: available() }),
    };
    let hit = &minimal[i];
    if hit.lambda == lambda {
        return Ok(solve_shooting(b.n, g, hit.m, opts)?.1);
    }
    // λ(m) → 0 as m → 0
    let (mut a, mut fa) = if i == 0 { (0.0, -lambda) } else { (minimal[i - 1].m, minimal[i - 1].lambda - lambda) };
    let (mut c, mut fc) = (hit.m, hit.lambda - lambda);
    for _ in 0..200 {
        let m = (a * fc - c * fa) / (fc - fa);
        let (lam, sol) = solve_shooting(b.n, g, m, opts)?;
        let f = lam - lambda;
        if f.abs() <= 1e-13 * lambda || (c - a).abs() <= 1e-14 * c {
            return Ok(sol);
        }
        // Illinois modification keeps both ends moving
        if f * fc < 0.0 {
            (a, fa) = (c, fc);
        } else {
            fa *= 0.5;
        }
        (c, fc) = (m, f);
    }
    Err(LabError::NonConvergence { method: "λ(m) = λ secant".into(), iterations: 200, last: c })
}

fn argmax(p: &[BranchPoint]) -> usize {
    let mut best = 0;
    for (i, q) in p.iter().enumerate() {
        if q.lambda > p[best].lambda {
            best = i;
        }
    }
    best
}

impl Branch {
    /// Index of the first interior local maximum of `λ(m)`, if any.
    pub fn first_turning_index(&self) -> Option<usize> {
        let p = &self.points;
        (1..p.len().saturating_sub(1)).find(|&i| p[i].lambda > p[i - 1].lambda && p[i].lambda >= p[i + 1].lambda)
    }

    /// Points strictly before the first turning point (all points when λ(m) is
    /// monotone on the grid).
    pub fn minimal_part(&self) -> &[BranchPoint] {
        match self.first_turning_index() {
            Some(i) => &self.points[..i],
            None => &self.points,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("m,lambda,sup_norm,lambda1,l1_norm\n");
        for p in &self.points {
            let _ = writeln!(s, "{},{},{},{},{}", p.m, p.lambda, p.sup_norm, p.lambda1, p.l1_norm);
        }
        s
    }

    pub fn from_csv(text: &str, g_id: &str, n: usize) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == "m,lambda,sup_norm,lambda1,l1_norm" => {}
            _ => return Err(LabError::Io("branch CSV header mismatch".into())),
        }
        let mut points = Vec::new();
        for (k, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let v: Vec<f64> = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| LabError::Io(format!("branch CSV row {}: {e}", k + 2)))?;
            if v.len() != 5 {
                return Err(LabError::Io(format!("branch CSV row {} has {} columns", k + 2, v.len())));
            }
            points.push(BranchPoint { m: v[0], lambda: v[1], sup_norm: v[2], lambda1: v[3], l1_norm: v[4] });
        }
        Ok(Branch { points, gaps: Vec::new(), g_id: g_id.to_string(), n })
    }
}
