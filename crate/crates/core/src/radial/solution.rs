use serde::{Deserialize, Serialize};

use super::special::sphere_area;
use crate::error::{LabError, Result};
use crate::nonlinearity::Nonlinearity;

/// Radial profile `u(r)` on the unit ball of ℝⁿ.
///
/// Nodes carry `u`, `u'` and `u''`, so the profile can be evaluated anywhere
/// by quintic Hermite interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialSolution {
    pub n: usize,
    pub lambda: f64,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub ddu: Vec<f64>,
    pub g_id: String,
}

/// 5-point Gauss–Legendre rule on [0, 1].
pub(crate) const GAUSS5: [(f64, f64); 5] = [
    (0.046_910_077_030_668, 0.118_463_442_528_094_5),
    (0.230_765_344_947_158_5, 0.239_314_335_249_683_2),
    (0.5, 0.284_444_444_444_444_4),
    (0.769_234_655_052_841_5, 0.239_314_335_249_683_2),
    (0.953_089_922_969_332, 0.118_463_442_528_094_5),
];

/// Quintic Hermite interpolation on one interval; returns `(p, p')`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn hermite5(a: f64, b: f64, y0: [f64; 3], y1: [f64; 3], x: f64) -> (f64, f64) {
    let h = b - a;
    let t = (x - a) / h;
    let (t2, t3, t4, t5) = (t * t, t * t * t, t.powi(4), t.powi(5));
    let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let h2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
    let h3 = 0.5 * (t3 - 2.0 * t4 + t5);
    let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let h5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    let d0 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
    let d1 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
    let d2 = 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4);
    let d3 = 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4);
    let d4 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
    let d5 = 30.0 * t2 - 60.0 * t3 + 30.0 * t4;
    let p = y0[0] * h0 + h * y0[1] * h1 + h * h * y0[2] * h2 + h * h * y1[2] * h3 + h * y1[1] * h4 + y1[0] * h5;
    let dp = y0[0] * d0 + h * y0[1] * d1 + h * h * y0[2] * d2 + h * h * y1[2] * d3 + h * y1[1] * d4 + y1[0] * d5;
    (p, dp / h)
}

impl RadialSolution {
    /// Builds a profile from closed forms sampled on `r`.
    pub fn from_profile(
        n: usize,
        lambda: f64,
        r: Vec<f64>,
        u: impl Fn(f64) -> f64,
        du: impl Fn(f64) -> f64,
        ddu: impl Fn(f64) -> f64,
        g_id: &str,
    ) -> Self {
        RadialSolution {
            n,
            lambda,
            u: r.iter().map(|&x| u(x)).collect(),
            du: r.iter().map(|&x| du(x)).collect(),
            ddu: r.iter().map(|&x| ddu(x)).collect(),
            r,
            g_id: g_id.to_string(),
        }
    }

    pub fn center_value(&self) -> f64 {
        self.u[0]
    }

    fn interval(&self, x: f64) -> usize {
        let i = self.r.partition_point(|&v| v <= x);
        i.clamp(1, self.r.len() - 1) - 1
    }

    fn node(&self, i: usize) -> [f64; 3] {
        [self.u[i], self.du[i], self.ddu[i]]
    }

    /// `(u(x), u'(x))` for `x ∈ [0, 1]`.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let x = x.clamp(0.0, 1.0);
        let i = self.interval(x);
        hermite5(self.r[i], self.r[i + 1], self.node(i), self.node(i + 1), x)
    }

    /// `u''` from the ODE where the profile came from the shooting solver.
    pub fn second_derivative(&self, x: f64) -> f64 {
        let i = self.interval(x.clamp(0.0, 1.0));
        let w = (x - self.r[i]) / (self.r[i + 1] - self.r[i]);
        self.ddu[i] * (1.0 - w) + self.ddu[i + 1] * w
    }

    /// ∫_a^b ω_{n-1} r^{n-1} f(r, u, u') dr by 5-point Gauss on every node
    /// interval intersecting `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
        let omega = sphere_area(self.n);
        let mut total = 0.0;
        for i in 0..self.r.len() - 1 {
            let lo = self.r[i].max(a);
            let hi = self.r[i + 1].min(b);
            if hi <= lo {
                continue;
            }
            let (y0, y1) = (self.node(i), self.node(i + 1));
            for &(x, w) in &GAUSS5 {
                let r = lo + x * (hi - lo);
                let (u, du) = hermite5(self.r[i], self.r[i + 1], y0, y1, r);
                total += w * (hi - lo) * r.powi(self.n as i32 - 1) * f(r, u, du);
            }
        }
        omega * total
    }

    /// ‖u‖_{L¹(B₁)}
    pub fn l1_norm(&self) -> f64 {
        self.integrate(0.0, 1.0, |_, u, _| u.abs())
    }

    /// Radius of the level `{u = s}`, found by inverting the decreasing profile.
    pub fn level_radius(&self, s: f64) -> Result<f64> {
        let m = self.center_value();
        if !(s > 0.0 && s < m) {
            return Err(LabError::Range { value: s, range: format!("(0, {m})") });
        }
        // u decreasing: first node with u <= s
        let j = self.u.partition_point(|&v| v > s).clamp(1, self.u.len() - 1);
        let (mut lo, mut hi) = (self.r[j - 1], self.r[j]);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid).0 > s {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Largest relative flux defect of `(r^{n-1} u')' + λ r^{n-1} g(u) = 0`
    /// over the node intervals.
    pub fn residual(&self, g: &Nonlinearity) -> Result<f64> {
        let p = self.n as i32 - 1;
        let mut worst = 0.0f64;
        for i in 0..self.r.len() - 1 {
            let (a, b) = (self.r[i], self.r[i + 1]);
            let flux = |k: usize| self.r[k].powi(p) * self.du[k];
            let (y0, y1) = (self.node(i), self.node(i + 1));
            let mut source = 0.0;
            for &(x, w) in &GAUSS5 {
                let r = a + x * (b - a);
                let (u, _) = hermite5(a, b, y0, y1, r);
                source += w * (b - a) * r.powi(p) * g.eval(u)?;
            }
            source *= self.lambda;
            let defect = flux(i + 1) - flux(i) + source;
            let scale = source.abs().max(flux(i + 1).abs()).max(1e-300);
            worst = worst.max(defect.abs() / scale);
        }
        Ok(worst)
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        self.u.windows(2).all(|w| w[1] < w[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic() -> RadialSolution {
        let r: Vec<f64> = (0..=50).map(|i| i as f64 / 50.0).collect();
        RadialSolution::from_profile(2, 4.0, r, |x| 1.0 - x * x, |x| -2.0 * x, |_| -2.0, "const:1")
    }

    #[test]
    fn hermite_reproduces_quintics() {
        let p = |x: f64| 1.0 + x - 2.0 * x.powi(3) + 0.5 * x.powi(5);
        let dp = |x: f64| 1.0 - 6.0 * x * x + 2.5 * x.powi(4);
        let ddp = |x: f64| -12.0 * x + 10.0 * x.powi(3);
        let (a, b) = (0.3, 1.1);
        for k in 0..=10 {
            let x = a + (b - a) * k as f64 / 10.0;
            let (v, d) = hermite5(a, b, [p(a), dp(a), ddp(a)], [p(b), dp(b), ddp(b)], x);
            assert!((v - p(x)).abs() < 1e-13 && (d - dp(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn integrals_of_quadratic_profile() {
        let s = quadratic();
        // ∫(1-r²) 2πr dr = π/2
        assert!((s.l1_norm() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!((s.level_radius(0.75).unwrap() - 0.5).abs() < 1e-12);
        assert!(s.level_radius(1.0).is_err());
        assert!(s.residual(&Nonlinearity::Constant { c: 1.0 }).unwrap() < 1e-12);
        assert!(s.is_strictly_decreasing());
    }
}
