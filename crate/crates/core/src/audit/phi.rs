use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::levelgeom::LevelProfile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PhiKind {
    Zero,
    /// `s/t` on `[0, t]`, then 1.
    RampThenOne,
    /// `s/t` on `[0, t]`, then `exp((1/√2)∫ₜˢ √g_k)` with
    /// `g_k = min{k, h₁/h₂}`.
    PhiK {
        k: u32,
    },
}

/// Lipschitz profile function on `[0, T]` used as `η = φ(u)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiFunction {
    pub kind: PhiKind,
    pub t: f64,
    pub top: f64,
    /// Knots on `[t, T]` with `g_k` and the cumulative `(1/√2)∫ₜˢ √g_k`.
    pub knots: Vec<f64>,
    pub g: Vec<f64>,
    pub exponent: Vec<f64>,
    /// Bound for every difference quotient of φ.
    pub lipschitz: f64,
}

impl PhiFunction {
    pub fn zero(top: f64) -> Self {
        PhiFunction { kind: PhiKind::Zero, t: top, top, knots: vec![], g: vec![], exponent: vec![], lipschitz: 0.0 }
    }

    pub fn ramp(t: f64, top: f64) -> Result<Self> {
        if !(t > 0.0 && t <= top) {
            return Err(LabError::Range { value: t, range: format!("(0, {top}]") });
        }
        Ok(PhiFunction {
            kind: PhiKind::RampThenOne,
            t,
            top,
            knots: vec![],
            g: vec![],
            exponent: vec![],
            lipschitz: 1.0 / t,
        })
    }

    fn segment(&self, s: f64) -> usize {
        match self.knots.partition_point(|&k| k <= s) {
            0 => 0,
            i => (i - 1).min(self.knots.len() - 2),
        }
    }

    fn g_at(&self, s: f64) -> f64 {
        let i = self.segment(s);
        let (a, b) = (self.knots[i], self.knots[i + 1]);
        let w = ((s - a) / (b - a)).clamp(0.0, 1.0);
        self.g[i] + w * (self.g[i + 1] - self.g[i])
    }

    fn exponent_at(&self, s: f64) -> f64 {
        let i = self.segment(s);
        let a = self.knots[i];
        self.exponent[i] + 0.5 * (self.g[i].sqrt() + self.g_at(s).sqrt()) * (s - a) / 2f64.sqrt()
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self.kind {
            PhiKind::Zero => 0.0,
            _ if s <= self.t => s.max(0.0) / self.t,
            PhiKind::RampThenOne => 1.0,
            PhiKind::PhiK { .. } => self.exponent_at(s.min(self.top)).exp(),
        }
    }

    /// Derivative; at `s = t` the right derivative is returned when
    /// `right` is set.
    pub fn deriv(&self, s: f64, right: bool) -> f64 {
        match self.kind {
            PhiKind::Zero => 0.0,
            _ if s < self.t || (s == self.t && !right) => 1.0 / self.t,
            PhiKind::RampThenOne => 0.0,
            PhiKind::PhiK { .. } => {
                let s = s.min(self.top);
                (self.g_at(s) / 2.0).sqrt() * self.eval(s)
            }
        }
    }
}

/// Builds `φ_k` from regular levels; `g_k` is linear between them and
/// extended by its nearest linear trend to `t` and `T`.
pub fn build_phik(profiles: &[LevelProfile], top: f64, t: f64, k: u32) -> Result<PhiFunction> {
    if k == 0 {
        return Err(LabError::Argument("k must be at least 1".into()));
    }
    if !(t > 0.0 && t < top) {
        return Err(LabError::Range { value: t, range: format!("(0, {top})") });
    }
    let reg: Vec<&LevelProfile> = profiles.iter().filter(|p| p.regular).collect();
    if let Some(p) = reg.iter().find(|p| !(p.h2 > 0.0)) {
        return Err(LabError::Contradiction { s: p.s });
    }
    let kk = k as f64;
    let pts: Vec<(f64, f64)> = reg.iter().map(|p| (p.s, (p.h1 / p.h2).min(kk))).collect();
    if pts.len() < 2 {
        return Err(LabError::InsufficientData(format!("{} regular levels, need 2", pts.len())));
    }
    let interp = |s: f64| {
        let i = pts.partition_point(|p| p.0 <= s).clamp(1, pts.len() - 1);
        let (a, b) = (pts[i - 1], pts[i]);
        (a.1 + (s - a.0) / (b.0 - a.0) * (b.1 - a.1)).clamp(0.0, kk)
    };
    let mut knots = vec![t];
    let mut g = vec![interp(t)];
    for &(s, v) in &pts {
        if s > t && s < top {
            knots.push(s);
            g.push(v);
        }
    }
    knots.push(top);
    g.push(interp(top));
    let mut exponent = vec![0.0];
    for i in 1..knots.len() {
        let e = exponent[i - 1] + 0.5 * (g[i - 1].sqrt() + g[i].sqrt()) * (knots[i] - knots[i - 1]) / 2f64.sqrt();
        exponent.push(e);
    }
    let lipschitz = (1.0 / t).max((kk / 2.0).sqrt() * exponent.last().unwrap().exp());
    Ok(PhiFunction { kind: PhiKind::PhiK { k }, t, top, knots, g, exponent, lipschitz })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(ratio: f64, top: f64) -> Vec<LevelProfile> {
        (1..40)
            .map(|i| {
                let s = top * i as f64 / 40.0;
                LevelProfile {
                    s,
                    length: 1.0,
                    h1: ratio,
                    h2: 1.0,
                    volume: 1.0,
                    min_grad: 1.0,
                    regular: true,
                    inv_grad: 1.0,
                    abs_curvature: 1.0,
                }
            })
            .collect()
    }

    #[test]
    fn constant_ratio_gives_exponentials() {
        let phi = build_phik(&synthetic(2.0, 3.0), 3.0, 1.0, 4).unwrap();
        assert!((phi.eval(2.0) - 1f64.exp()).abs() < 1e-12);
        assert!((phi.eval(0.5) - 0.5).abs() < 1e-15);
        let phi = build_phik(&synthetic(5.0, 3.0), 3.0, 1.0, 1).unwrap();
        for s in [1.3, 2.0, 2.9] {
            assert!((phi.eval(s) - ((s - 1.0) / 2f64.sqrt()).exp()).abs() < 1e-12);
            assert!((phi.deriv(s, true) - phi.eval(s) / 2f64.sqrt()).abs() < 1e-12);
        }
        assert_eq!(phi.eval(0.0), 0.0);
    }

    #[test]
    fn errors() {
        let p = synthetic(1.0, 1.0);
        assert!(build_phik(&p, 1.0, 0.5, 0).is_err());
        assert!(build_phik(&p, 1.0, 1.5, 1).is_err());
        let mut bad = p.clone();
        bad[3].h2 = 0.0;
        assert!(matches!(build_phik(&bad, 1.0, 0.5, 1), Err(LabError::Contradiction { .. })));
    }
}
