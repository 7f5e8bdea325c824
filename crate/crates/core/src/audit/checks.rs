use std::f64::consts::PI;

use super::phi::{PhiFunction, PhiKind};
use super::record::AuditRecord;
use super::subject::Subject;
use crate::error::{LabError, Result};
use crate::levelgeom::{s_integral_window, LevelCurve, LevelProfile, ProfileFamily};
use crate::nonlinearity::Nonlinearity;

fn regular(fam: &ProfileFamily) -> Result<Vec<&LevelProfile>> {
    let reg: Vec<&LevelProfile> = fam.profiles.iter().filter(|p| p.regular).collect();
    if reg.len() < 4 {
        return Err(LabError::InsufficientData(format!("{} regular levels, need 4", reg.len())));
    }
    Ok(reg)
}

/// `∫_a^b F(p, φ, φ') ds` over regular levels in `[a, b]`, with φ' taken
/// from the right when `right`.
fn level_integral(
    reg: &[&LevelProfile],
    phi: &PhiFunction,
    a: f64,
    b: f64,
    right: bool,
    f: impl Fn(&LevelProfile, f64, f64) -> f64,
) -> f64 {
    let s: Vec<f64> = reg.iter().map(|p| p.s).collect();
    let v: Vec<f64> = reg.iter().map(|p| f(p, phi.eval(p.s), phi.deriv(p.s, right))).collect();
    s_integral_window(&s, &v, a, b, true)
}

/// Pieces of `[0, T]` on which φ is smooth.
fn pieces(phi: &PhiFunction) -> Vec<(f64, f64, bool)> {
    if phi.t < phi.top {
        vec![(0.0, phi.t, false), (phi.t, phi.top, true)]
    } else {
        vec![(0.0, phi.top, false)]
    }
}

/// `∫ h₁ φ² ds ≤ ∫ h₂ φ'² ds` over the regular levels.
pub fn check_stability_inequality(subject: &str, fam: &ProfileFamily, phi: &PhiFunction) -> Result<AuditRecord> {
    let reg = regular(fam)?;
    let (mut lhs, mut rhs) = (0.0, 0.0);
    if phi.kind != PhiKind::Zero {
        for (a, b, right) in pieces(phi) {
            lhs += level_integral(&reg, phi, a, b, right, |p, v, _| p.h1 * v * v);
            rhs += level_integral(&reg, phi, a, b, right, |p, _, d| p.h2 * d * d);
        }
    }
    let rec = AuditRecord::new("stability", subject, phi.t, lhs, rhs)
        .with_inputs(format!("phi={:?};levels={}", phi.kind, fam.profiles.len()))
        .with_excluded(fam.excluded_fraction());
    Ok(rec)
}

/// `∫ₜ^T h₁ φ_k² ds ≤ 2 B_t`.
pub fn check_phik_chain(subject: &str, fam: &ProfileFamily, phi: &PhiFunction, b_t: f64) -> Result<AuditRecord> {
    let reg = regular(fam)?;
    let lhs = level_integral(&reg, phi, phi.t, phi.top, true, |p, v, _| p.h1 * v * v);
    Ok(AuditRecord::new("phik_chain", subject, phi.t, lhs, 2.0 * b_t)
        .with_inputs(format!("phi={:?}", phi.kind))
        .with_excluded(fam.excluded_fraction()))
}

/// Level-set Sobolev constants: `h₂^{1/3} ≤ C h₁` on radial spheres in
/// ℝ⁴, `1 ≤ C ∫|κ| dℓ` on planar curves. The constant is the largest ratio
/// over regular levels; the spread (standard deviation over mean of the
/// ratios) is kept in the inputs.
pub fn check_michael_simon(subject: &str, profiles: &[LevelProfile], n: usize) -> Result<AuditRecord> {
    let reg: Vec<&LevelProfile> = profiles.iter().filter(|p| p.regular).collect();
    if reg.is_empty() {
        return Err(LabError::InsufficientData("no regular level".into()));
    }
    let pairs: Vec<(f64, f64)> = match n {
        4 => reg.iter().map(|p| (p.h2.cbrt(), p.h1)).collect(),
        2 => reg.iter().map(|p| (1.0, p.abs_curvature)).collect(),
        _ => return Err(LabError::Argument(format!("level Sobolev check needs n = 2 or 4, got {n}"))),
    };
    let ratios: Vec<f64> = pairs.iter().map(|(a, b)| a / b).collect();
    let (i, c) = ratios.iter().enumerate().fold((0, f64::NEG_INFINITY), |b, (i, &r)| if r > b.1 { (i, r) } else { b });
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / ratios.len() as f64;
    Ok(AuditRecord::new("michael_simon", subject, n as f64, pairs[i].0, pairs[i].1)
        .with_constant(Some(c))
        .with_inputs(format!("spread={:e}", var.sqrt() / mean)))
}

/// Relative band of the planar Gauss–Bonnet and isoperimetric checks.
pub const GEOMETRY_BAND: f64 = 0.02;
/// Relative band of the total-variation check.
pub const VARIATION_BAND: f64 = 0.05;

/// Turning `∫|κ| dℓ ≥ 2π(1 - band)` for every closed component of the
/// given levels; the constant is the signed turning over 2π.
pub fn check_gauss_bonnet(subject: &str, curves: &[LevelCurve]) -> Vec<AuditRecord> {
    curves
        .iter()
        .flat_map(|c| {
            c.components.iter().filter(|comp| comp.closed).map(move |comp| {
                AuditRecord::new("gauss_bonnet", subject, c.s, 2.0 * PI * (1.0 - GEOMETRY_BAND), comp.abs_turning())
                    .with_constant(Some(comp.turning() / (2.0 * PI)))
            })
        })
        .collect()
}

/// `4π V(s) ≤ |Γ_s|² (1 + band)` on every regular level.
pub fn check_isoperimetric(subject: &str, fam: &ProfileFamily) -> Vec<AuditRecord> {
    fam.profiles
        .iter()
        .filter(|p| p.regular)
        .map(|p| {
            AuditRecord::new(
                "isoperimetric",
                subject,
                p.s,
                4.0 * PI * p.volume,
                (1.0 + GEOMETRY_BAND) * p.length * p.length,
            )
            .with_constant(Some(4.0 * PI * p.volume / (p.length * p.length)))
        })
        .collect()
}

/// For n = 2: `∫ₜ^T (-V') ds ≤ V(t) (1 + band)`, with `-V' = ∫_Γ 1/|∇u|`.
pub fn check_total_variation(subject: &str, fam: &ProfileFamily, t: f64) -> Result<AuditRecord> {
    let reg = regular(fam)?;
    let s: Vec<f64> = reg.iter().map(|p| p.s).collect();
    let v: Vec<f64> = reg.iter().map(|p| p.inv_grad).collect();
    let rhs_int = s_integral_window(&s, &v, t, fam.top, true);
    let vt = {
        let i = s.partition_point(|&x| x < t).clamp(1, s.len() - 1);
        let (a, b) = (reg[i - 1], reg[i]);
        a.volume + (t - a.s) / (b.s - a.s) * (b.volume - a.volume)
    };
    Ok(AuditRecord::new("total_variation", subject, t, rhs_int, (1.0 + VARIATION_BAND) * vt)
        .with_constant(Some(rhs_int / vt)))
}

/// `max u ≤ t + (C/t) |Ω|^{(4-n)/(2n)} (∫_{u<t}|∇u|⁴)^{1/2}` per `t`, with
/// `C = 1` in the record and the smallest admissible `C` as constant.
pub fn check_main_estimate(subject: &Subject, t_grid: &[f64]) -> Result<(Vec<AuditRecord>, f64)> {
    let top = subject.top();
    let n = subject.dimension() as f64;
    let scale = subject.volume().powf((4.0 - n) / (2.0 * n));
    let mut recs = Vec::with_capacity(t_grid.len());
    let mut best = f64::INFINITY;
    for &t in t_grid {
        if !(t > 0.0 && t <= top) {
            return Err(LabError::Range { value: t, range: format!("(0, {top}]") });
        }
        let energy = subject.sublevel_grad4(t);
        if !(energy > 0.0) {
            return Err(LabError::Range { value: t, range: "sublevel set {u < t} is empty".into() });
        }
        let core = scale * energy.sqrt();
        let c = (top - t) * t / core;
        best = best.min(c);
        recs.push(AuditRecord::new("main_estimate", subject.id(), t, top, t + core / t).with_constant(Some(c)));
    }
    Ok((recs, best))
}

/// `sup_{Ω_ρ} u ≤ γ⁻¹ ‖u‖_{L¹}`: constant `γ = ‖u‖₁ / sup`.
pub fn check_boundary_bound(subject: &Subject, rho: f64) -> Result<AuditRecord> {
    if !subject.convex() {
        return Err(LabError::Argument("boundary bound needs a convex domain".into()));
    }
    let sup = subject.boundary_sup(rho)?;
    let l1 = subject.l1_norm();
    Ok(AuditRecord::new("boundary_bound", subject.id(), rho, sup, l1).with_constant(Some(l1 / sup)))
}

/// `min u/δ` against `∫ λ f(u) δ`: constant `c = lhs/rhs`. A vanishing
/// right side is flagged vacuous.
pub fn check_lower_bound(subject: &Subject, f: &Nonlinearity, lambda: f64) -> Result<AuditRecord> {
    let (lhs, rhs) = subject.lower_bound_terms(f, lambda)?;
    let mut rec = AuditRecord::new("lower_bound", subject.id(), lambda, lhs, rhs);
    if rhs == 0.0 {
        rec.vacuous = true;
    } else {
        rec.empirical_constant = Some(lhs / rhs);
    }
    Ok(rec)
}

/// `Q_u(ξ) ≥ 0` on seeded random test functions: lhs = 0, rhs = the
/// smallest `Q_u(ξ)/∫|∇ξ|²` over the samples.
pub fn check_sampled_semistability(
    subject: &Subject,
    g: &Nonlinearity,
    samples: usize,
    seed: u64,
) -> Result<AuditRecord> {
    if samples == 0 {
        return Err(LabError::Argument("need at least one sample".into()));
    }
    let forms = subject.sampled_quadratic_forms(g, samples, seed)?;
    let worst = forms.iter().map(|(q, e)| q / e).fold(f64::INFINITY, f64::min);
    Ok(AuditRecord::new("semistability_sampled", subject.id(), samples as f64, 0.0, worst)
        .with_constant(Some(worst))
        .with_inputs(format!("seed={seed}")))
}
