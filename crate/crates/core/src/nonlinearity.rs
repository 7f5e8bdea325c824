//! Nonlinearities `g` for `-Δu = λ g(u)` together with their derivative and
//! primitive, and a sampled check of the growth conditions required of `g`.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Largest argument accepted by the exponential before reporting saturation.
pub const EXP_SATURATION: f64 = 700.0;

/// Piecewise-linear table `s ↦ g(s)` with strictly increasing abscissae.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    s: Vec<f64>,
    g: Vec<f64>,
    /// Primitive at every knot, anchored so that `F(0) = 0`.
    prim: Vec<f64>,
}

impl Table {
    pub fn new(s: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        if s.len() != g.len() || s.len() < 2 {
            return Err(LabError::Argument("tabulated nonlinearity needs at least two (s, g) rows".into()));
        }
        if s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LabError::Argument("tabulated s column must be strictly increasing".into()));
        }
        if s.iter().chain(g.iter()).any(|v| !v.is_finite()) {
            return Err(LabError::Argument("tabulated nonlinearity has non-finite entries".into()));
        }
        if s[0] > 0.0 || *s.last().unwrap() < 0.0 {
            return Err(LabError::Argument("tabulated range must contain s = 0".into()));
        }
        let mut prim = vec![0.0; s.len()];
        for i in 1..s.len() {
            prim[i] = prim[i - 1] + 0.5 * (g[i] + g[i - 1]) * (s[i] - s[i - 1]);
        }
        let mut t = Table { s, g, prim };
        let offset = t.primitive_raw(0.0);
        t.prim.iter_mut().for_each(|p| *p -= offset);
        Ok(t)
    }

    /// Reads a two-column CSV `s,g` (an optional header line is skipped).
    pub fn from_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut s = Vec::new();
        let mut g = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (a, b) = match (cols.next(), cols.next()) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(LabError::Argument(format!("line {}: expected two columns", lineno + 1))),
            };
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(y)) => {
                    s.push(x);
                    g.push(y);
                }
                _ if lineno == 0 => continue,
                _ => return Err(LabError::Argument(format!("line {}: not numeric", lineno + 1))),
            }
        }
        Table::new(s, g)
    }

    fn segment(&self, x: f64) -> Result<usize> {
        let (lo, hi) = (self.s[0], *self.s.last().unwrap());
        if !(lo..=hi).contains(&x) {
            return Err(LabError::Range { value: x, range: format!("[{lo}, {hi}]") });
        }
        let i = self.s.partition_point(|&v| v <= x);
        Ok(i.clamp(1, self.s.len() - 1) - 1)
    }

    fn eval(&self, x: f64) -> Result<f64> {
        let i = self.segment(x)?;
        let w = (x - self.s[i]) / (self.s[i + 1] - self.s[i]);
        Ok(self.g[i] + w * (self.g[i + 1] - self.g[i]))
    }

    fn deriv(&self, x: f64) -> Result<f64> {
        let i = self.segment(x)?;
        Ok((self.g[i + 1] - self.g[i]) / (self.s[i + 1] - self.s[i]))
    }

    fn primitive_raw(&self, x: f64) -> f64 {
        let i = self.segment(x).unwrap_or(0);
        let gx = self.eval(x).unwrap_or(self.g[i]);
        self.prim[i] + 0.5 * (self.g[i] + gx) * (x - self.s[i])
    }

    fn primitive(&self, x: f64) -> Result<f64> {
        self.segment(x)?;
        Ok(self.primitive_raw(x))
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }
}

/// The nonlinearity `g`.
#[derive(Debug, Clone, PartialEq)]
pub enum Nonlinearity {
    /// `g(s) = e^s`
    Exponential,
    /// `g(s) = (1 + s)^p`
    Power {
        p: f64,
    },
    /// `g(s) = a s + b`
    Affine {
        a: f64,
        b: f64,
    },
    /// `g(s) = c`
    Constant {
        c: f64,
    },
    Tabulated(Table),
}

impl fmt::Display for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Nonlinearity::Exponential => write!(f, "exp"),
            Nonlinearity::Power { p } => write!(f, "power:{p}"),
            Nonlinearity::Affine { a, b } => write!(f, "affine:{a}:{b}"),
            Nonlinearity::Constant { c } => write!(f, "const:{c}"),
            Nonlinearity::Tabulated(t) => write!(f, "tabulated:{}", t.len()),
        }
    }
}

impl Nonlinearity {
    /// Stable identifier used in file headers.
    pub fn id(&self) -> String {
        self.to_string()
    }

    pub fn eval(&self, s: f64) -> Result<f64> {
        let v = match self {
            Nonlinearity::Exponential => {
                if s > EXP_SATURATION {
                    return Err(LabError::Saturation { what: "exp".into(), at: s, limit: EXP_SATURATION });
                }
                s.exp()
            }
            Nonlinearity::Power { p } => {
                if s <= -1.0 {
                    return Err(LabError::EvaluationDomain { what: self.id(), at: s });
                }
                (1.0 + s).powf(*p)
            }
            Nonlinearity::Affine { a, b } => a * s + b,
            Nonlinearity::Constant { c } => *c,
            Nonlinearity::Tabulated(t) => t.eval(s)?,
        };
        finite(self, s, v)
    }

    pub fn deriv(&self, s: f64) -> Result<f64> {
        let v = match self {
            Nonlinearity::Exponential => return self.eval(s),
            Nonlinearity::Power { p } => {
                if s <= -1.0 {
                    return Err(LabError::EvaluationDomain { what: self.id(), at: s });
                }
                p * (1.0 + s).powf(p - 1.0)
            }
            Nonlinearity::Affine { a, .. } => *a,
            Nonlinearity::Constant { .. } => 0.0,
            Nonlinearity::Tabulated(t) => t.deriv(s)?,
        };
        finite(self, s, v)
    }

    /// Primitive `F` with `F(0) = 0`.
    pub fn primitive(&self, s: f64) -> Result<f64> {
        let v = match self {
            Nonlinearity::Exponential => self.eval(s)? - 1.0,
            Nonlinearity::Power { p } => {
                if s <= -1.0 {
                    return Err(LabError::EvaluationDomain { what: self.id(), at: s });
                }
                if (p + 1.0).abs() < 1e-14 {
                    (1.0 + s).ln()
                } else {
                    ((1.0 + s).powf(p + 1.0) - 1.0) / (p + 1.0)
                }
            }
            Nonlinearity::Affine { a, b } => 0.5 * a * s * s + b * s,
            Nonlinearity::Constant { c } => c * s,
            Nonlinearity::Tabulated(t) => t.primitive(s)?,
        };
        finite(self, s, v)
    }

    /// `(g(s), g'(s), F(s))`.
    pub fn eval_triplet(&self, s: f64) -> Result<(f64, f64, f64)> {
        Ok((self.eval(s)?, self.deriv(s)?, self.primitive(s)?))
    }
}

fn finite(g: &Nonlinearity, s: f64, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(LabError::EvaluationDomain { what: g.id(), at: s })
    }
}

/// Sampled evidence for the three growth conditions.
///
/// The limit `g(s)/s → ∞` cannot be decided from finitely many samples. The
/// `superlinear` flag is a surrogate: `g(s)/s` must be increasing from some
/// detected threshold up to `s_max`, and `g(s_max)/s_max` must exceed
/// `10 g(1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub nondecreasing: bool,
    pub positive_at_zero: bool,
    pub superlinear: bool,
    pub witnesses: Witnesses,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witnesses {
    /// Abscissae on `[0, s_max]` used for the monotonicity test.
    pub s: Vec<f64>,
    pub g: Vec<f64>,
    /// Abscissae on `[1, s_max]` used for the growth test.
    pub ratio_s: Vec<f64>,
    /// `g(s)/s` at `ratio_s`.
    pub ratio: Vec<f64>,
    /// First abscissa from which `g(s)/s` increases up to `s_max`, if any.
    pub threshold: Option<f64>,
    pub growth_factor: f64,
}

/// Factor by which `g(s_max)/s_max` must exceed `g(1)`.
pub const SUPERLINEAR_FACTOR: f64 = 10.0;

impl Witnesses {
    /// Recomputes the three flags from the stored samples alone.
    pub fn flags(&self) -> (bool, bool, bool) {
        let nondecreasing = self.s.len() >= 2 && self.g.windows(2).all(|w| w[1] >= w[0]);
        let positive_at_zero = self.g.first().is_some_and(|&g0| g0 > 0.0);
        let threshold = increasing_tail(&self.ratio_s, &self.ratio);
        let superlinear = match (threshold, self.ratio.first(), self.ratio.last()) {
            (Some(th), Some(&q1), Some(&qmax)) => th < *self.ratio_s.last().unwrap() && qmax > self.growth_factor * q1,
            _ => false,
        };
        (nondecreasing, positive_at_zero, superlinear)
    }
}

/// Smallest abscissa from which the samples increase strictly to the end.
fn increasing_tail(s: &[f64], q: &[f64]) -> Option<f64> {
    if q.len() < 2 {
        return None;
    }
    let mut start = q.len() - 1;
    while start > 0 && q[start] > q[start - 1] {
        start -= 1;
    }
    (start < q.len() - 1).then(|| s[start])
}

pub fn check_conditions(g: &Nonlinearity, s_max: f64, samples: usize) -> Result<ConditionReport> {
    if !(s_max > 0.0) || !s_max.is_finite() {
        return Err(LabError::Argument(format!("s_max must be positive, got {s_max}")));
    }
    if samples < 16 {
        return Err(LabError::Argument(format!("need at least 16 samples, got {samples}")));
    }
    let eval = |s: f64| g.eval(s).map_err(|_| LabError::EvaluationDomain { what: g.id(), at: s });
    let step = s_max / (samples - 1) as f64;
    let s: Vec<f64> = (0..samples).map(|i| i as f64 * step).collect();
    let gv = s.iter().map(|&x| eval(x)).collect::<Result<Vec<_>>>()?;

    let (ratio_s, ratio) = if s_max > 1.0 {
        let step = (s_max - 1.0) / (samples - 1) as f64;
        let rs: Vec<f64> = (0..samples).map(|i| 1.0 + i as f64 * step).collect();
        let q = rs.iter().map(|&x| eval(x).map(|v| v / x)).collect::<Result<Vec<_>>>()?;
        (rs, q)
    } else {
        (Vec::new(), Vec::new())
    };
    let witnesses = Witnesses {
        threshold: increasing_tail(&ratio_s, &ratio),
        s,
        g: gv,
        ratio_s,
        ratio,
        growth_factor: SUPERLINEAR_FACTOR,
    };
    let (nondecreasing, positive_at_zero, superlinear) = witnesses.flags();
    Ok(ConditionReport { nondecreasing, positive_at_zero, superlinear, witnesses })
}

/// Serializable description `kind` + parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<String>,
}

impl NonlinearitySpec {
    pub fn build(&self, base_dir: &Path) -> Result<Nonlinearity> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| LabError::Config {
                field: format!("problem.nonlinearity.{name}"),
                message: format!("required for kind `{}`", self.kind),
            })
        };
        Ok(match self.kind.as_str() {
            "exp" | "exponential" => Nonlinearity::Exponential,
            "power" => Nonlinearity::Power { p: need(self.p, "p")? },
            "affine" => Nonlinearity::Affine { a: need(self.a, "a")?, b: need(self.b, "b")? },
            "constant" | "const" => Nonlinearity::Constant { c: need(self.c, "c")? },
            "tabulated" => {
                let rel = self.table.as_ref().ok_or_else(|| LabError::Config {
                    field: "problem.nonlinearity.table".into(),
                    message: "required for kind `tabulated`".into(),
                })?;
                Nonlinearity::Tabulated(Table::from_csv(&base_dir.join(rel))?)
            }
            other => {
                return Err(LabError::Config {
                    field: "problem.nonlinearity.kind".into(),
                    message: format!("unknown kind `{other}`"),
                })
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn builtins() -> Vec<Nonlinearity> {
        vec![
            Nonlinearity::Exponential,
            Nonlinearity::Power { p: 2.0 },
            Nonlinearity::Power { p: 3.5 },
            Nonlinearity::Affine { a: 2.0, b: -1.0 },
            Nonlinearity::Constant { c: 1.0 },
        ]
    }

    #[test]
    fn triplets() {
        let (g, d, f) = Nonlinearity::Exponential.eval_triplet(0.0).unwrap();
        assert_eq!((g, d, f), (1.0, 1.0, 0.0));
        let (g, d, f) = Nonlinearity::Exponential.eval_triplet(1.0).unwrap();
        let e = std::f64::consts::E;
        assert_relative_eq!(g, e, epsilon = 1e-12);
        assert_relative_eq!(d, e, epsilon = 1e-12);
        assert_relative_eq!(f, e - 1.0, epsilon = 1e-12);
        // F(s) = s^2 - s for a = 2, b = -1
        let t = Nonlinearity::Affine { a: 2.0, b: -1.0 }.eval_triplet(3.0).unwrap();
        assert_eq!(t, (5.0, 2.0, 6.0));
        for g in builtins() {
            assert_eq!(g.primitive(0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn exponential_saturates() {
        let err = Nonlinearity::Exponential.eval(701.0).unwrap_err();
        assert!(matches!(err, LabError::Saturation { .. }));
        assert!(Nonlinearity::Exponential.eval(699.0).unwrap().is_finite());
    }

    #[test]
    fn derivative_matches_centered_difference() {
        for g in builtins() {
            for i in 0..=200 {
                let s = 0.1 * i as f64;
                let h = 1e-5 * (1.0 + s);
                let fd = (g.eval(s + h).unwrap() - g.eval(s - h).unwrap()) / (2.0 * h);
                let d = g.deriv(s).unwrap();
                let rel = (fd - d).abs() / d.abs().max(1e-300);
                assert!(d == 0.0 && fd.abs() < 1e-9 || rel < 1e-6, "{g} at {s}: {d} vs {fd}");
            }
        }
    }

    #[test]
    fn primitive_matches_quadrature() {
        // 5-point Gauss-Legendre on each unit subinterval
        let nodes = [
            (0.0, 128.0 / 225.0),
            (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
            (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
            (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
            (0.906_179_845_938_664, 0.236_926_885_056_189_1),
        ];
        for g in builtins() {
            for k in 0..20 {
                let (a, b) = (k as f64, k as f64 + 1.0);
                let mut q = 0.0;
                for &(x, w) in &nodes {
                    q += w * g.eval(0.5 * (a + b) + 0.5 * (b - a) * x).unwrap();
                }
                q *= 0.5 * (b - a);
                let diff = g.primitive(b).unwrap() - g.primitive(a).unwrap();
                assert!((q - diff).abs() <= 1e-8 * q.abs().max(1.0), "{g} on [{a},{b}]");
            }
        }
    }

    #[test]
    fn growth_conditions() {
        let r = check_conditions(&Nonlinearity::Exponential, 50.0, 64).unwrap();
        assert!(r.nondecreasing && r.positive_at_zero && r.superlinear);
        let r = check_conditions(&Nonlinearity::Constant { c: 1.0 }, 50.0, 64).unwrap();
        assert!(r.nondecreasing && r.positive_at_zero && !r.superlinear);
        let r = check_conditions(&Nonlinearity::Power { p: 2.0 }, 50.0, 64).unwrap();
        assert!(r.nondecreasing && r.positive_at_zero && r.superlinear);
        let r = check_conditions(&Nonlinearity::Affine { a: 2.0, b: 1.0 }, 50.0, 64).unwrap();
        assert!(!r.superlinear);
        let r = check_conditions(&Nonlinearity::Affine { a: 2.0, b: -1.0 }, 50.0, 64).unwrap();
        assert!(!r.superlinear && !r.positive_at_zero);
        // (1+s)^1.5 / s grows too slowly to clear the factor-10 bar by s = 200
        let r = check_conditions(&Nonlinearity::Power { p: 1.5 }, 200.0, 64).unwrap();
        assert!(!r.superlinear);
        let r = check_conditions(&Nonlinearity::Power { p: 1.5 }, 2000.0, 64).unwrap();
        assert!(r.superlinear);
    }

    #[test]
    fn flags_reproducible_from_witnesses() {
        for g in builtins() {
            let r = check_conditions(&g, 50.0, 32).unwrap();
            assert_eq!(r.witnesses.flags(), (r.nondecreasing, r.positive_at_zero, r.superlinear));
        }
    }

    #[test]
    fn condition_errors() {
        assert!(matches!(
            check_conditions(&Nonlinearity::Exponential, 800.0, 32),
            Err(LabError::EvaluationDomain { .. })
        ));
        assert!(check_conditions(&Nonlinearity::Exponential, 10.0, 8).is_err());
        assert!(check_conditions(&Nonlinearity::Exponential, -1.0, 32).is_err());
    }

    #[test]
    fn tabulated_is_piecewise_linear() {
        let t = Table::new(vec![-1.0, 0.0, 1.0, 3.0], vec![0.5, 1.0, 2.0, 6.0]).unwrap();
        let g = Nonlinearity::Tabulated(t);
        assert_eq!(g.primitive(0.0).unwrap(), 0.0);
        assert_relative_eq!(g.eval(2.0).unwrap(), 4.0);
        assert_relative_eq!(g.deriv(2.0).unwrap(), 2.0);
        // ∫_0^1 (1 + s) ds + ∫_1^2 2s ds = 1.5 + 3
        assert_relative_eq!(g.primitive(2.0).unwrap(), 4.5, epsilon = 1e-12);
        assert_relative_eq!(g.primitive(-1.0).unwrap(), -0.75, epsilon = 1e-12);
        assert!(g.eval(3.5).is_err());
        assert!(Table::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(Table::new(vec![1.0, 2.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn tabulated_from_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        std::fs::write(&path, "s,g\n0,1\n1,3\n2,7\n").unwrap();
        let t = Table::from_csv(&path).unwrap();
        assert_eq!(t.len(), 3);
        std::fs::write(&path, "s,g\n0,1\n2,3\n1,7\n").unwrap();
        assert!(Table::from_csv(&path).is_err());
    }
}
