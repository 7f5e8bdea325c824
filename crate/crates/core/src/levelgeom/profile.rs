use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// Per-level record of the level-set quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelProfile {
    pub s: f64,
    /// |Γ_s|, the length (area for n ≥ 3) of the level set.
    pub length: f64,
    /// ∫_Γ 4|∇_T|∇u|^{1/2}|² + |A|²|∇u|
    pub h1: f64,
    /// ∫_Γ |∇u|³
    pub h2: f64,
    /// V(s) = |{u > s}|
    pub volume: f64,
    pub min_grad: f64,
    pub regular: bool,
    /// ∫_Γ 1/|∇u| = -V'(s)
    pub inv_grad: f64,
    /// ∫_Γ |A|
    pub abs_curvature: f64,
}

/// CSV `s,length,h1,h2,V,min_grad,regular`.
pub fn profiles_to_csv(profiles: &[LevelProfile]) -> String {
    let mut out = String::from("s,length,h1,h2,V,min_grad,regular\n");
    for p in profiles {
        let _ = writeln!(out, "{},{},{},{},{},{},{}", p.s, p.length, p.h1, p.h2, p.volume, p.min_grad, p.regular);
    }
    out
}
