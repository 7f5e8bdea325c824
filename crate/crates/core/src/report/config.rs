use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::audit::AuditOptions;
use crate::error::{LabError, Result};
use crate::nonlinearity::{check_conditions, Nonlinearity, NonlinearitySpec};
use crate::par::Exec;
use crate::planar::Shape;
use crate::radial::{BranchOptions, EigenOptions, ShootingOptions};

/// One experiment, read from a TOML file with `[problem]`, `[branch]`,
/// `[audit]` and `[output]` sections. Every field has a default.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub branch: BranchConfig,
    pub audit: AuditConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemConfig {
    pub n: usize,
    pub domain: DomainConfig,
    pub nonlinearity: NonlinearitySpec,
}

/// `kind` is `ball` (radial, any n) or one of the planar shapes `disk`,
/// `square`, `ellipse`, `polygon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainConfig {
    pub kind: String,
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
    pub x0: f64,
    pub y0: f64,
    pub side: f64,
    pub a: f64,
    pub b: f64,
    pub vertices: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BranchConfig {
    /// Center values for the radial branch; when empty the grid is
    /// `m_count` equispaced values from `m_start` to `m_stop`.
    pub m_grid: Vec<f64>,
    pub m_start: f64,
    pub m_stop: f64,
    pub m_count: usize,
    /// λ values for planar continuation; when empty, `lambda_step` up to
    /// `lambda_stop`.
    pub lambda_grid: Vec<f64>,
    pub lambda_step: f64,
    pub lambda_stop: f64,
    /// Planar grid step.
    pub h: f64,
    pub shooting_rtol: f64,
    pub newton_tol: f64,
    pub eigen_tol: f64,
    pub max_halvings: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditConfig {
    /// Selected solutions by λ on the minimal branch.
    pub lambdas: Vec<f64>,
    pub t_fractions: Vec<f64>,
    /// Subset of `ramp`, `phik`.
    pub phi: Vec<String>,
    pub k_list: Vec<u32>,
    pub n_levels: usize,
    pub rho_fraction: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: String,
    /// Subset of `csv`, `json`, `svg`, `bin`.
    pub formats: Vec<String>,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig {
            n: 2,
            domain: DomainConfig::default(),
            nonlinearity: NonlinearitySpec { kind: "exp".into(), p: None, a: None, b: None, c: None, table: None },
        }
    }
}

impl Default for DomainConfig {
    fn default() -> Self {
        DomainConfig {
            kind: "ball".into(),
            cx: 0.0,
            cy: 0.0,
            r: 1.0,
            x0: 0.0,
            y0: 0.0,
            side: 1.0,
            a: 1.0,
            b: 0.5,
            vertices: Vec::new(),
        }
    }
}

impl Default for BranchConfig {
    fn default() -> Self {
        BranchConfig {
            m_grid: Vec::new(),
            m_start: 0.05,
            m_stop: 8.0,
            m_count: 160,
            lambda_grid: Vec::new(),
            lambda_step: 0.05,
            lambda_stop: 2.5,
            h: 1.0 / 128.0,
            shooting_rtol: 1e-12,
            newton_tol: 1e-10,
            eigen_tol: 1e-9,
            max_halvings: 2,
        }
    }
}

impl Default for AuditConfig {
    fn default() -> Self {
        let a = AuditOptions::default();
        AuditConfig {
            lambdas: vec![1.0],
            t_fractions: a.t_fractions,
            phi: vec!["ramp".into(), "phik".into()],
            k_list: a.k_list,
            n_levels: a.n_levels,
            rho_fraction: a.rho_fraction,
            samples: a.samples,
        }
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { directory: "out".into(), formats: vec!["csv".into(), "json".into(), "svg".into()] }
    }
}

/// The geometric setting a configuration resolves to.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    Ball,
    Planar(Shape),
}

fn config_err(field: &str, message: impl Into<String>) -> LabError {
    LabError::Config { field: field.into(), message: message.into() }
}

const FORMATS: [&str; 4] = ["csv", "json", "svg", "bin"];

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let field = e.span().map(|s| format!("bytes {}..{}", s.start, s.end)).unwrap_or_default();
            LabError::Config { field, message: e.message().to_string() }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        hex(&Sha256::digest(serde_json::to_vec(self).expect("config serializes")))
    }

    /// Hash of the parts that determine the branch, used as cache key.
    pub fn branch_key(&self) -> String {
        let v = (&self.problem, &self.branch);
        hex(&Sha256::digest(serde_json::to_vec(&v).expect("config serializes")))
    }

    pub fn domain(&self) -> Result<Domain> {
        let d = &self.problem.domain;
        let shape = match d.kind.as_str() {
            "ball" => return Ok(Domain::Ball),
            "disk" => Shape::Disk { cx: d.cx, cy: d.cy, r: d.r },
            "square" => Shape::Square { x0: d.x0, y0: d.y0, side: d.side },
            "ellipse" => Shape::Ellipse { cx: d.cx, cy: d.cy, a: d.a, b: d.b },
            "polygon" => Shape::Polygon { vertices: d.vertices.clone() },
            other => return Err(config_err("problem.domain.kind", format!("unknown domain `{other}`"))),
        };
        shape.validate().map_err(|e| config_err("problem.domain", e.to_string()))?;
        Ok(Domain::Planar(shape))
    }

    pub fn nonlinearity(&self, base_dir: &Path) -> Result<Nonlinearity> {
        self.problem.nonlinearity.build(base_dir)
    }

    pub fn m_grid(&self) -> Vec<f64> {
        let b = &self.branch;
        if !b.m_grid.is_empty() {
            return b.m_grid.clone();
        }
        let k = b.m_count.max(2);
        (0..k).map(|i| b.m_start + (b.m_stop - b.m_start) * i as f64 / (k - 1) as f64).collect()
    }

    pub fn lambda_grid(&self) -> Vec<f64> {
        let b = &self.branch;
        if !b.lambda_grid.is_empty() {
            return b.lambda_grid.clone();
        }
        let steps = (b.lambda_stop / b.lambda_step).round() as usize;
        (1..=steps).map(|i| i as f64 * b.lambda_step).collect()
    }

    pub fn branch_options(&self, exec: Exec) -> BranchOptions {
        let mut shooting = ShootingOptions::default();
        shooting.tol.rtol = self.branch.shooting_rtol;
        let eigen = EigenOptions { tol: self.branch.eigen_tol, ..Default::default() };
        BranchOptions { shooting, eigen, exec }
    }

    pub fn planar_options(&self) -> crate::planar::BranchOptions2D {
        let mut o = crate::planar::BranchOptions2D::default();
        o.newton.tol = self.branch.newton_tol;
        o.eigen.tol = self.branch.eigen_tol;
        o.max_halvings = self.branch.max_halvings;
        o
    }

    pub fn audit_options(&self, seed: u64, exec: Exec) -> AuditOptions {
        let a = &self.audit;
        let phik = a.phi.iter().any(|p| p == "phik");
        AuditOptions {
            t_fractions: a.t_fractions.clone(),
            k_list: if phik { a.k_list.clone() } else { Vec::new() },
            n_levels: a.n_levels,
            rho_fraction: a.rho_fraction,
            ramp: a.phi.iter().any(|p| p == "ramp"),
            samples: a.samples,
            seed,
            exec,
        }
    }

    pub fn wants(&self, format: &str) -> bool {
        self.output.formats.iter().any(|f| f == format)
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(&self.output.directory)
    }

    /// Checks every invariant; returns non-fatal warnings.
    pub fn validate(&self, base_dir: &Path) -> Result<Vec<String>> {
        let p = &self.problem;
        if p.n < 2 {
            return Err(config_err("problem.n", format!("dimension must be at least 2, got {}", p.n)));
        }
        let domain = self.domain()?;
        if p.n >= 3 && domain != Domain::Ball {
            return Err(config_err(
                "problem.domain.kind",
                format!("n = {} needs the radial `ball` domain, got `{}`", p.n, p.domain.kind),
            ));
        }
        let g = self.nonlinearity(base_dir)?;
        let b = &self.branch;
        for (name, v) in [
            ("branch.h", b.h),
            ("branch.shooting_rtol", b.shooting_rtol),
            ("branch.newton_tol", b.newton_tol),
            ("branch.eigen_tol", b.eigen_tol),
            ("branch.lambda_step", b.lambda_step),
            ("branch.lambda_stop", b.lambda_stop),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(config_err(name, format!("must be positive, got {v}")));
            }
        }
        if let Domain::Planar(shape) = &domain {
            let (x0, y0, x1, y1) = shape.bbox();
            if b.h > 0.25 * (x1 - x0).min(y1 - y0) {
                return Err(config_err("branch.h", format!("grid step {} too coarse for the domain", b.h)));
            }
        }
        let m = self.m_grid();
        if m.iter().any(|&v| !(v > 0.0)) || m.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(config_err("branch.m_grid", "center values must be positive and strictly increasing"));
        }
        let l = self.lambda_grid();
        if l.is_empty() || l.iter().any(|&v| !(v > 0.0)) || l.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(config_err("branch.lambda_grid", "λ values must be positive and strictly increasing"));
        }
        let a = &self.audit;
        if a.t_fractions.is_empty() {
            return Err(config_err("audit.t_fractions", "empty t grid"));
        }
        if a.t_fractions.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
            return Err(config_err("audit.t_fractions", "fractions must lie in (0, 1)"));
        }
        if let Some(bad) = a.phi.iter().find(|p| *p != "ramp" && *p != "phik") {
            return Err(config_err("audit.phi", format!("unknown family `{bad}`")));
        }
        if a.k_list.contains(&0) {
            return Err(config_err("audit.k_list", "k must be at least 1"));
        }
        if a.n_levels < 16 {
            return Err(config_err("audit.n_levels", format!("need at least 16 levels, got {}", a.n_levels)));
        }
        if !(a.rho_fraction > 0.0 && a.rho_fraction < 1.0) {
            return Err(config_err("audit.rho_fraction", "must lie in (0, 1)"));
        }
        if a.lambdas.iter().any(|&v| !(v > 0.0)) {
            return Err(config_err("audit.lambdas", "λ must be positive"));
        }
        if let Some(bad) = self.output.formats.iter().find(|f| !FORMATS.contains(&f.as_str())) {
            return Err(config_err("output.formats", format!("unknown format `{bad}`")));
        }
        if self.output.directory.is_empty() {
            return Err(config_err("output.directory", "empty path"));
        }
        let mut warnings = Vec::new();
        let top = m.last().copied().unwrap_or(1.0).max(2.0);
        let report = check_conditions(&g, top, 64)?;
        if !report.nondecreasing {
            warnings.push(format!("{}: nondecreasing=false", g.id()));
        }
        if !report.positive_at_zero {
            warnings.push(format!("{}: positive at zero=false", g.id()));
        }
        if !report.superlinear {
            warnings.push(format!("{}: superlinear=false", g.id()));
        }
        Ok(warnings)
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
