//! Dormand–Prince 5(4) integrator for the planar first-order system used by
//! the shooting method.

use crate::error::Result;

pub type State = [f64; 2];

// Butcher tableau
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rtol: 1e-12, atol: 1e-14 }
    }
}

/// One explicit step of size `h`; returns the 5th-order solution and the
/// scaled error norm.
pub fn step<F>(f: &F, t: f64, y: State, h: f64, tol: Tolerances) -> Result<(State, f64)>
where
    F: Fn(f64, State) -> Result<State>,
{
    let mut k = [[0.0; 2]; 7];
    k[0] = f(t, y)?;
    for s in 1..7 {
        let mut ys = y;
        for (j, kj) in k.iter().enumerate().take(s) {
            for d in 0..2 {
                ys[d] += h * A[s][j] * kj[d];
            }
        }
        k[s] = f(t + C[s] * h, ys)?;
    }
    let mut y5 = y;
    let mut err = 0.0f64;
    for d in 0..2 {
        let mut hi = 0.0;
        let mut lo = 0.0;
        for s in 0..7 {
            hi += B5[s] * k[s][d];
            lo += B4[s] * k[s][d];
        }
        y5[d] += h * hi;
        let scale = tol.atol + tol.rtol * y[d].abs().max(y5[d].abs());
        err = err.max((h * (hi - lo)).abs() / scale);
    }
    Ok((y5, err))
}

/// Next step size from the standard controller.
pub fn next_h(h: f64, err: f64) -> f64 {
    let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
    h * fac
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_period() {
        let f = |_t: f64, y: State| Ok([y[1], -y[0]]);
        let tol = Tolerances::default();
        let (mut t, mut y, mut h): (f64, State, f64) = (0.0, [1.0, 0.0], 1e-3);
        let end = 2.0 * std::f64::consts::PI;
        while t < end {
            let hh = h.min(end - t);
            let (y1, err) = step(&f, t, y, hh, tol).unwrap();
            if err <= 1.0 {
                t += hh;
                y = y1;
            }
            h = next_h(hh, err);
        }
        assert!((y[0] - 1.0).abs() < 1e-10 && y[1].abs() < 1e-10);
    }
}
