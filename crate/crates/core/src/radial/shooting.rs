use super::ode::{self, State, Tolerances};
use super::solution::RadialSolution;
use crate::error::{LabError, Result};
use crate::nonlinearity::Nonlinearity;

#[derive(Debug, Clone, Copy)]
pub struct ShootingOptions {
    /// Give up when no zero has been found before this radius (unscaled).
    pub r_max: f64,
    pub tol: Tolerances,
    /// Upper bound for the series start radius.
    pub series_start: f64,
    /// Largest node spacing of the returned profile on [0, 1].
    pub max_node_gap: f64,
    /// Bisection tolerance for the first zero, relative to the zero itself.
    pub root_tol: f64,
    pub max_steps: usize,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        ShootingOptions {
            r_max: 1e4,
            tol: Tolerances::default(),
            series_start: 1e-4,
            max_node_gap: 1.0 / 512.0,
            root_tol: 1e-12,
            max_steps: 1_000_000,
        }
    }
}

/// Integrates `v'' + (n-1)/r v' + g(v) = 0`, `v(0) = m`, `v'(0) = 0` to its
/// first zero `R`, and returns `λ = R²` with `u(r) = v(R r)` on the unit ball.
pub fn solve_shooting(n: usize, g: &Nonlinearity, m: f64, opts: &ShootingOptions) -> Result<(f64, RadialSolution)> {
    if n < 2 {
        return Err(LabError::Argument(format!("dimension must be at least 2, got {n}")));
    }
    if !(m > 0.0) || !m.is_finite() {
        return Err(LabError::Argument(format!("center value must be positive, got {m}")));
    }
    let g_m = g.eval(m)?;
    let gp_m = g.deriv(m)?;
    if !(g_m > 0.0) || !(g.eval(0.0)? > 0.0) {
        return Err(LabError::Argument(format!("g must be positive on [0, {m}]")));
    }
    let nf = n as f64;

    // Series start v = m + a ρ² + b ρ⁴ on [0, ρ0]. The start radius shrinks
    // with the local length scale of the profile at the center.
    let a2 = -g_m / (2.0 * nf);
    let b4 = g_m * gp_m / (8.0 * nf * (nf + 2.0));
    let rho0 = opts.series_start
        * 1f64.min((2.0 * nf / g_m).sqrt()).min((8.0 * nf * (nf + 2.0) / (g_m * gp_m).abs().max(1e-300)).powf(0.25));
    let series = |r: f64| -> State { [m + a2 * r * r + b4 * r.powi(4), 2.0 * a2 * r + 4.0 * b4 * r.powi(3)] };

    let rhs = |r: f64, y: State| -> Result<State> { Ok([y[1], -(nf - 1.0) / r * y[1] - g.eval(y[0])?]) };

    let mut traj: Vec<(f64, State)> = vec![(0.0, [m, 0.0]), (rho0, series(rho0))];
    let (mut rho, mut y) = (rho0, series(rho0));
    let mut h = rho0;
    let mut steps = 0usize;
    let root = loop {
        if rho >= opts.r_max {
            return Err(LabError::NoSolutionAtCenterValue { m, r_max: opts.r_max });
        }
        steps += 1;
        if steps > opts.max_steps || h < 1e-14 * rho {
            return Err(LabError::NonConvergence {
                method: "Dormand-Prince shooting".into(),
                iterations: steps,
                last: rho,
            });
        }
        let hh = h.min(opts.r_max - rho);
        let (y1, err) = ode::step(&rhs, rho, y, hh, opts.tol)?;
        if err > 1.0 {
            h = ode::next_h(hh, err);
            continue;
        }
        if y1[0] <= 0.0 {
            // first sign change: bisect on the sub-step length
            let (mut lo, mut hi) = (0.0, hh);
            while hi - lo > opts.root_tol * (rho + hh) {
                let mid = 0.5 * (lo + hi);
                let (ym, _) = ode::step(&rhs, rho, y, mid, opts.tol)?;
                if ym[0] > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let (ya, _) = ode::step(&rhs, rho, y, lo, opts.tol)?;
            let (yb, _) = ode::step(&rhs, rho, y, hi, opts.tol)?;
            // linear refinement inside the final bracket
            let frac = ya[0] / (ya[0] - yb[0]);
            let hr = lo + frac.clamp(0.0, 1.0) * (hi - lo);
            let (yr, _) = ode::step(&rhs, rho, y, hr, opts.tol)?;
            break (rho + hr, yr, hr);
        }
        traj.push((rho + hh, y1));
        rho += hh;
        y = y1;
        h = ode::next_h(hh, err);
    };
    let (big_r, y_root, _) = root;

    // Fill coarse gaps with sub-steps taken from the left node.
    let gap = opts.max_node_gap * big_r;
    let mut nodes: Vec<(f64, State)> = Vec::with_capacity(traj.len() * 2);
    traj.push((big_r, y_root));
    for w in traj.windows(2) {
        let (r0, y0) = w[0];
        let (r1, _) = w[1];
        nodes.push((r0, y0));
        if r0 > 0.0 && r1 - r0 > gap {
            let k = ((r1 - r0) / gap).ceil() as usize;
            for j in 1..k {
                let dh = (r1 - r0) * j as f64 / k as f64;
                let (yj, _) = ode::step(&rhs, r0, y0, dh, opts.tol)?;
                nodes.push((r0 + dh, yj));
            }
        }
    }
    nodes.push((big_r, y_root));

    let lambda = big_r * big_r;
    let mut sol = RadialSolution {
        n,
        lambda,
        r: Vec::with_capacity(nodes.len()),
        u: Vec::with_capacity(nodes.len()),
        du: Vec::with_capacity(nodes.len()),
        ddu: Vec::with_capacity(nodes.len()),
        g_id: g.id(),
    };
    for (i, &(rho, st)) in nodes.iter().enumerate() {
        let vpp = if i == 0 { -g_m / nf } else { -(nf - 1.0) / rho * st[1] - g.eval(st[0])? };
        sol.r.push(if i + 1 == nodes.len() { 1.0 } else { rho / big_r });
        sol.u.push(st[0]);
        sol.du.push(big_r * st[1]);
        sol.ddu.push(lambda * vpp);
    }
    Ok((lambda, sol))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_source_is_a_paraboloid() {
        let (lambda, sol) = solve_shooting(2, &Nonlinearity::Constant { c: 1.0 }, 1.0, &Default::default()).unwrap();
        assert!((lambda - 4.0).abs() < 1e-9);
        for k in 0..=20 {
            let r = k as f64 / 20.0;
            assert!((sol.eval(r).0 - (1.0 - r * r)).abs() < 1e-9);
        }
    }

    #[test]
    fn liouville_family() {
        // λ(m) = 8μ/(1+μ)², μ = e^{m/2} - 1
        for &m in &[0.5, 2.0 * std::f64::consts::LN_2, 3.0] {
            let mu = (m / 2.0f64).exp() - 1.0;
            let exact = 8.0 * mu / (1.0 + mu).powi(2);
            let (lambda, sol) = solve_shooting(2, &Nonlinearity::Exponential, m, &Default::default()).unwrap();
            assert!((lambda - exact).abs() < 1e-9, "m={m}: {lambda} vs {exact}");
            assert!(sol.u.last().unwrap().abs() < 1e-8);
            assert!(sol.du[0].abs() < 1e-8);
            assert!(sol.residual(&Nonlinearity::Exponential).unwrap() < 1e-6);
            assert!(sol.is_strictly_decreasing());
        }
    }

    #[test]
    fn rejects_bad_center_values() {
        let g = Nonlinearity::Exponential;
        assert!(solve_shooting(2, &g, 0.0, &Default::default()).is_err());
        assert!(solve_shooting(1, &g, 1.0, &Default::default()).is_err());
        let opts = ShootingOptions { r_max: 0.5, ..Default::default() };
        assert!(matches!(
            solve_shooting(2, &Nonlinearity::Constant { c: 1.0 }, 1.0, &opts),
            Err(LabError::NoSolutionAtCenterValue { .. })
        ));
    }
}
