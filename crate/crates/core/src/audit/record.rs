use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// Outcome of one inequality check: `lhs ≤ rhs` up to a relative tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub check_id: String,
    pub solution: String,
    /// Main parameter of the check (t, ρ, k, …); NaN when there is none.
    pub param: f64,
    /// Further inputs, e.g. the φ family or the level count.
    pub inputs: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
    pub empirical_constant: Option<f64>,
    /// Fraction of sampled levels flagged non-regular and left out.
    pub excluded_fraction: f64,
    /// The right side vanishes, so the check carries no information.
    pub vacuous: bool,
}

pub fn audit_tolerance(lhs: f64, rhs: f64) -> f64 {
    1e-8 * lhs.abs().max(rhs.abs()).max(1.0)
}

impl AuditRecord {
    pub fn new(check_id: &str, solution: &str, param: f64, lhs: f64, rhs: f64) -> Self {
        let slack = rhs - lhs;
        AuditRecord {
            check_id: check_id.to_string(),
            solution: solution.to_string(),
            param,
            inputs: String::new(),
            lhs,
            rhs,
            slack,
            holds: slack >= -audit_tolerance(lhs, rhs),
            empirical_constant: None,
            excluded_fraction: 0.0,
            vacuous: false,
        }
    }

    pub fn with_constant(mut self, c: Option<f64>) -> Self {
        self.empirical_constant = c;
        self
    }

    pub fn with_inputs(mut self, inputs: impl Into<String>) -> Self {
        self.inputs = inputs.into();
        self
    }

    pub fn with_excluded(mut self, fraction: f64) -> Self {
        self.excluded_fraction = fraction;
        self
    }
}

/// CSV `check_id,solution,param,lhs,rhs,slack,holds,constant`.
pub fn summary_csv(records: &[AuditRecord]) -> String {
    let mut out = String::from("check_id,solution,param,lhs,rhs,slack,holds,constant\n");
    for r in records {
        let c = r.empirical_constant.map(|c| c.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.check_id, r.solution, r.param, r.lhs, r.rhs, r.slack, r.holds, c
        );
    }
    out
}
