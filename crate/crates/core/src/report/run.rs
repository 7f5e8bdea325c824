use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::{Domain, ExperimentConfig};
use super::manifest::{sha256_hex, OutputStage, RunManifest};
use super::svg::{Marker, Plot, Series};
use crate::audit::{audit_subject, check_main_estimate, summary_csv, AuditRecord, Subject};
use crate::error::{LabError, Result};
use crate::levelgeom::{extract_level, level_grid, profiles_to_csv, LevelCurve};
use crate::nonlinearity::Nonlinearity;
use crate::par::{self, Exec};
use crate::planar::{minimal_branch_2d, solve_newton_with, DomainMask, PlanarBranch, PlanarBranchPoint, ScalarField2D};
use crate::radial::{extremal_parameter, extremal_supremum, solution_at_lambda, trace_branch, Branch, Extremal};

const CACHE_DIR: &str = "cache";
const CACHE_INDEX: &str = "cache/index.json";
/// Curves per planar solution in the `levels` output.
const CURVE_LEVELS: usize = 16;
/// Thresholds for the C_emp(t) plot.
const CEMP_POINTS: usize = 32;

/// Everything a command needs besides the config itself.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub config: ExperimentConfig,
    /// Directory that relative paths in the config (tables) resolve against.
    pub base_dir: PathBuf,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub exec: Exec,
}

impl RunContext {
    pub fn new(config: ExperimentConfig, base_dir: &Path) -> Self {
        let out_dir = config.out_dir();
        RunContext { config, base_dir: base_dir.to_path_buf(), out_dir, seed: 0, exec: Exec::default() }
    }

    pub fn nonlinearity(&self) -> Result<Nonlinearity> {
        self.config.nonlinearity(&self.base_dir)
    }

    fn open(&self) -> Result<OutputStage> {
        OutputStage::open(&self.out_dir, &self.config.hash())
    }
}

/// A computed solution diagram.
#[derive(Debug, Clone)]
pub enum BranchData {
    Radial(Branch),
    Planar { mask: Arc<DomainMask>, branch: PlanarBranch },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CacheIndex {
    key: String,
    kind: String,
    g_id: String,
    n: usize,
    stop_reason: Option<String>,
    files: BTreeMap<String, String>,
}

fn planar_csv(b: &PlanarBranch) -> String {
    let mut s = String::from("lambda,sup_norm,lambda1,newton_iterations\n");
    for p in &b.points {
        let _ = writeln!(s, "{},{},{},{}", p.lambda, p.field.max(), p.lambda1, p.newton_iterations);
    }
    s
}

fn field_stem(i: usize) -> String {
    format!("{CACHE_DIR}/fields/point_{i:04}")
}

fn corrupt(path: &Path, message: impl Into<String>) -> LabError {
    LabError::CorruptCache { path: path.display().to_string(), message: message.into() }
}

fn compute_branch(ctx: &RunContext, g: &Nonlinearity) -> Result<BranchData> {
    let cfg = &ctx.config;
    match cfg.domain()? {
        Domain::Ball => {
            Ok(BranchData::Radial(trace_branch(cfg.problem.n, g, &cfg.m_grid(), &cfg.branch_options(ctx.exec))?))
        }
        Domain::Planar(shape) => {
            let mask = Arc::new(DomainMask::new(shape, cfg.branch.h)?);
            let branch = minimal_branch_2d(&mask, g, &cfg.lambda_grid(), &cfg.planar_options())?;
            Ok(BranchData::Planar { mask, branch })
        }
    }
}

fn store_branch(out: &mut OutputStage, key: &str, g: &Nonlinearity, n: usize, data: &BranchData) -> Result<()> {
    let mut files = BTreeMap::new();
    let mut put = |out: &mut OutputStage, rel: String, bytes: Vec<u8>| -> Result<()> {
        files.insert(rel.clone(), sha256_hex(&bytes));
        out.write(&rel, &bytes)?;
        Ok(())
    };
    let (kind, stop_reason) = match data {
        BranchData::Radial(b) => {
            put(out, format!("{CACHE_DIR}/branch.csv"), b.to_csv().into_bytes())?;
            ("radial", None)
        }
        BranchData::Planar { branch, .. } => {
            put(out, format!("{CACHE_DIR}/branch.csv"), planar_csv(branch).into_bytes())?;
            std::fs::create_dir_all(out.dir.join(CACHE_DIR).join("fields"))?;
            for (i, p) in branch.points.iter().enumerate() {
                let stem = field_stem(i);
                p.field.save(&out.dir.join(&stem), p.lambda, &g.id())?;
                for ext in ["bin", "json"] {
                    let rel = format!("{stem}.{ext}");
                    let bytes = std::fs::read(out.dir.join(&rel))?;
                    put(out, rel, bytes)?;
                }
            }
            ("planar", branch.stop_reason.clone())
        }
    };
    let index = CacheIndex { key: key.to_string(), kind: kind.into(), g_id: g.id(), n, stop_reason, files };
    out.write(CACHE_INDEX, serde_json::to_string_pretty(&index)?.as_bytes())?;
    Ok(())
}

/// Cached branch of `dir`: `Ok(None)` when there is no cache or it belongs
/// to another problem; an error when a listed file is missing or fails its
/// checksum.
pub fn load_cached_branch(dir: &Path, key: &str, cfg: &ExperimentConfig) -> Result<Option<BranchData>> {
    let index_path = dir.join(CACHE_INDEX);
    let Ok(text) = std::fs::read_to_string(&index_path) else {
        return Ok(None);
    };
    let index: CacheIndex = serde_json::from_str(&text).map_err(|e| corrupt(&index_path, e.to_string()))?;
    if index.key != key {
        return Ok(None);
    }
    for (rel, sum) in &index.files {
        let path = dir.join(rel);
        let bytes = std::fs::read(&path).map_err(|e| corrupt(&path, e.to_string()))?;
        if &sha256_hex(&bytes) != sum {
            return Err(corrupt(&path, "checksum mismatch"));
        }
    }
    let csv_path = dir.join(CACHE_DIR).join("branch.csv");
    let csv = std::fs::read_to_string(&csv_path)?;
    match index.kind.as_str() {
        "radial" => Ok(Some(BranchData::Radial(
            Branch::from_csv(&csv, &index.g_id, index.n).map_err(|e| corrupt(&csv_path, e.to_string()))?,
        ))),
        "planar" => {
            let Domain::Planar(shape) = cfg.domain()? else {
                return Err(corrupt(&index_path, "planar cache for a radial problem"));
            };
            let mask = Arc::new(DomainMask::new(shape, cfg.branch.h)?);
            let mut points = Vec::new();
            for (i, line) in csv.lines().skip(1).filter(|l| !l.trim().is_empty()).enumerate() {
                let cols: Vec<&str> = line.split(',').collect();
                let parse = |k: usize| {
                    cols.get(k)
                        .and_then(|c| c.trim().parse::<f64>().ok())
                        .ok_or_else(|| corrupt(&csv_path, format!("row {}", i + 2)))
                };
                let (field, header) = ScalarField2D::load(&dir.join(field_stem(i)))?;
                if !mask.same_grid(&field.mask) || header.lambda != parse(0)? {
                    return Err(corrupt(&dir.join(field_stem(i)), "field does not match the branch"));
                }
                let field = ScalarField2D::new(mask.clone(), field.values)?;
                points.push(PlanarBranchPoint {
                    lambda: parse(0)?,
                    lambda1: parse(2)?,
                    newton_iterations: parse(3)? as usize,
                    field,
                });
            }
            let last_good = points.last().map(|p| p.lambda);
            Ok(Some(BranchData::Planar {
                mask,
                branch: PlanarBranch { points, last_good, stop_reason: index.stop_reason },
            }))
        }
        other => Err(corrupt(&index_path, format!("unknown kind `{other}`"))),
    }
}

fn branch_stage(ctx: &RunContext, out: &mut OutputStage, g: &Nonlinearity) -> Result<(BranchData, bool)> {
    let key = ctx.config.branch_key();
    out.time("branch", |out| {
        if let Some(b) = load_cached_branch(&out.dir, &key, &ctx.config)? {
            return Ok((b, true));
        }
        let b = compute_branch(ctx, g)?;
        store_branch(out, &key, g, ctx.config.problem.n, &b)?;
        Ok((b, false))
    })
}

/// λ* estimate and the first zero of λ₁ along a radial branch.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BranchSummary {
    pub points: usize,
    pub extremal: Option<Extremal>,
    /// `(λ, sup u)` where λ₁ changes sign.
    pub lambda1_zero: Option<(f64, f64)>,
    /// Planar: last λ with a converged minimal solution.
    pub last_good: Option<f64>,
    pub stop_reason: Option<String>,
    pub gaps: Vec<String>,
}

pub fn summarize(data: &BranchData) -> BranchSummary {
    match data {
        BranchData::Radial(b) => {
            let extremal = extremal_parameter(b).or_else(|_| extremal_supremum(b, 1e-3)).ok();
            let lambda1_zero = b.points.windows(2).find(|w| w[0].lambda1 > 0.0 && w[1].lambda1 <= 0.0).map(|w| {
                let f = w[0].lambda1 / (w[0].lambda1 - w[1].lambda1);
                (w[0].lambda + f * (w[1].lambda - w[0].lambda), w[0].sup_norm + f * (w[1].sup_norm - w[0].sup_norm))
            });
            BranchSummary {
                points: b.points.len(),
                extremal,
                lambda1_zero,
                last_good: b.minimal_part().last().map(|p| p.lambda),
                stop_reason: None,
                gaps: b.gaps.iter().map(|g| format!("m = {}: {}", g.m, g.error)).collect(),
            }
        }
        BranchData::Planar { branch, .. } => BranchSummary {
            points: branch.points.len(),
            extremal: None,
            lambda1_zero: None,
            last_good: branch.last_good,
            stop_reason: branch.stop_reason.clone(),
            gaps: Vec::new(),
        },
    }
}

fn branch_plot(data: &BranchData, summary: &BranchSummary, title: &str) -> Plot {
    let mut plot = Plot::new(title, "λ", "sup u");
    match data {
        BranchData::Radial(b) => {
            let k = b.minimal_part().len();
            let pts: Vec<(f64, f64)> = b.points.iter().map(|p| (p.lambda, p.sup_norm)).collect();
            plot.series.push(Series::new("minimal (λ₁ > 0)", pts[..k].to_vec(), 0));
            if k < pts.len() {
                let mut upper = Series::new("beyond the turning point", pts[k.saturating_sub(1)..].to_vec(), 1);
                upper.dashed = true;
                plot.series.push(upper);
            }
            if let Some(e) = &summary.extremal {
                plot.markers.push(Marker {
                    x: e.lambda_star,
                    y: e.m_at_max,
                    label: format!("λ* ≈ {:.4}", e.lambda_star),
                });
            }
            if let Some((l, s)) = summary.lambda1_zero {
                plot.markers.push(Marker { x: l, y: s, label: "λ₁ = 0".into() });
            }
        }
        BranchData::Planar { branch, .. } => {
            let pts = branch.points.iter().map(|p| (p.lambda, p.field.max())).collect();
            plot.series.push(Series::new("minimal branch", pts, 0));
            if let Some(p) = branch.points.last() {
                plot.markers.push(Marker { x: p.lambda, y: p.field.max(), label: format!("λ* ≥ {:.4}", p.lambda) });
            }
        }
    }
    plot
}

fn problem_label(cfg: &ExperimentConfig, g: &Nonlinearity) -> String {
    format!("{}-n{}-{}", cfg.problem.domain.kind, cfg.problem.n, g.id().replace(':', "_"))
}

pub struct BranchOutcome {
    pub data: BranchData,
    pub summary: BranchSummary,
    pub from_cache: bool,
    pub manifest: RunManifest,
}

pub fn run_branch(ctx: &RunContext) -> Result<BranchOutcome> {
    ctx.config.validate(&ctx.base_dir)?;
    let g = ctx.nonlinearity()?;
    let mut out = ctx.open()?;
    let (data, from_cache) = branch_stage(ctx, &mut out, &g)?;
    let summary = summarize(&data);
    out.time("branch_output", |out| {
        if ctx.config.wants("csv") {
            let csv = match &data {
                BranchData::Radial(b) => b.to_csv(),
                BranchData::Planar { branch, .. } => planar_csv(branch),
            };
            out.write("branch.csv", csv.as_bytes())?;
        }
        if ctx.config.wants("json") {
            out.write("branch.json", serde_json::to_string_pretty(&summary)?.as_bytes())?;
        }
        if ctx.config.wants("svg") {
            let svg = branch_plot(&data, &summary, &problem_label(&ctx.config, &g)).to_svg();
            out.write("branch.svg", svg.as_bytes())?;
        }
        Ok(())
    })?;
    let manifest = out.finish()?;
    Ok(BranchOutcome { data, summary, from_cache, manifest })
}

/// Solutions of the minimal branch at the requested parameters.
pub fn select(
    data: &BranchData,
    g: &Nonlinearity,
    lambdas: &[f64],
    ctx: &RunContext,
    label: &str,
) -> Result<Vec<Subject>> {
    lambdas
        .iter()
        .map(|&lambda| {
            let id = format!("{label}-lambda{lambda}");
            match data {
                BranchData::Radial(b) => {
                    let sol = solution_at_lambda(b, g, lambda, &ctx.config.branch_options(ctx.exec).shooting)?;
                    Ok(Subject::Radial { id, sol })
                }
                BranchData::Planar { mask, branch } => {
                    let available = || branch.points.iter().map(|p| p.lambda).collect::<Vec<_>>();
                    match branch.last_good {
                        Some(last) if lambda > 0.0 && lambda <= last => {}
                        _ => return Err(LabError::Selector { requested: lambda, available: available() }),
                    }
                    if let Some(p) = branch.points.iter().find(|p| p.lambda == lambda) {
                        return Ok(Subject::Planar { id, field: p.field.clone(), lambda });
                    }
                    let init = branch
                        .points
                        .iter()
                        .rev()
                        .find(|p| p.lambda < lambda)
                        .map(|p| p.field.clone())
                        .unwrap_or_else(|| ScalarField2D::zeros(mask.clone()));
                    let (field, _) = solve_newton_with(mask, g, lambda, &init, &ctx.config.planar_options().newton)?;
                    Ok(Subject::Planar { id, field, lambda })
                }
            }
        })
        .collect()
}

/// `(t, C_emp(t))` on an even grid inside `(0, T)`.
pub fn cemp_curve(subject: &Subject) -> Result<Vec<(f64, f64)>> {
    let top = subject.top();
    let ts: Vec<f64> = (1..CEMP_POINTS).map(|i| top * i as f64 / CEMP_POINTS as f64).collect();
    let (recs, _) = check_main_estimate(subject, &ts)?;
    Ok(recs.iter().map(|r| (r.param, r.empirical_constant.unwrap_or(f64::NAN))).collect())
}

fn sort_records(records: &mut [AuditRecord]) {
    records.sort_by(|a, b| {
        a.solution.cmp(&b.solution).then_with(|| a.check_id.cmp(&b.check_id)).then_with(|| a.param.total_cmp(&b.param))
    });
}

pub struct AuditOutcome {
    pub records: Vec<AuditRecord>,
    pub subjects: Vec<String>,
    pub manifest: RunManifest,
}

/// Audits the minimal-branch solutions at `lambdas` (the config's list
/// when empty).
pub fn run_audit(ctx: &RunContext, lambdas: &[f64]) -> Result<AuditOutcome> {
    ctx.config.validate(&ctx.base_dir)?;
    let g = ctx.nonlinearity()?;
    let lambdas = if lambdas.is_empty() { ctx.config.audit.lambdas.clone() } else { lambdas.to_vec() };
    if lambdas.is_empty() {
        return Err(LabError::Config { field: "audit.lambdas".into(), message: "no solution selected".into() });
    }
    let mut out = ctx.open()?;
    let (data, _) = branch_stage(ctx, &mut out, &g)?;
    let label = problem_label(&ctx.config, &g);
    let subjects = out.time("select", |_| select(&data, &g, &lambdas, ctx, &label))?;
    let opts = ctx.config.audit_options(ctx.seed, Exec::Sequential);
    let results = out.time("audit", |_| {
        par::map(ctx.exec, &subjects, |s| {
            let fam = s.profiles(opts.n_levels, Exec::Sequential)?;
            let recs = audit_subject(s, &g, &opts)?;
            let cemp = if s.dimension() <= 4 { cemp_curve(s)? } else { Vec::new() };
            Ok((recs, fam, cemp))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()
    })?;
    let mut records: Vec<AuditRecord> = results.iter().flat_map(|r| r.0.iter().cloned()).collect();
    sort_records(&mut records);
    out.time("audit_output", |out| {
        if ctx.config.wants("json") {
            out.write("audit.json", serde_json::to_string_pretty(&records)?.as_bytes())?;
        }
        if ctx.config.wants("csv") {
            out.write("audit_summary.csv", summary_csv(&records).as_bytes())?;
            for (s, (_, fam, _)) in subjects.iter().zip(&results) {
                out.write(&format!("profiles_{}.csv", s.id()), profiles_to_csv(&fam.profiles).as_bytes())?;
            }
        }
        if ctx.config.wants("svg") {
            let mut prof = Plot::new("level integrals", "s", "h₁, h₂");
            prof.log_y = true;
            let mut cemp = Plot::new("C_emp(t)", "t", "C_emp");
            for (i, (s, (_, fam, curve))) in subjects.iter().zip(&results).enumerate() {
                let reg: Vec<_> = fam.profiles.iter().filter(|p| p.regular).collect();
                prof.series.push(Series::new(&format!("h₁ {}", s.id()), reg.iter().map(|p| (p.s, p.h1)).collect(), i));
                let mut h2 = Series::new(&format!("h₂ {}", s.id()), reg.iter().map(|p| (p.s, p.h2)).collect(), i);
                h2.dashed = true;
                prof.series.push(h2);
                if !curve.is_empty() {
                    cemp.series.push(Series::new(s.id(), curve.clone(), i));
                }
            }
            out.write("audit_profiles.svg", prof.to_svg().as_bytes())?;
            if !cemp.series.is_empty() {
                out.write("audit_cemp.svg", cemp.to_svg().as_bytes())?;
            }
        }
        Ok(())
    })?;
    let manifest = out.finish()?;
    Ok(AuditOutcome { records, subjects: subjects.iter().map(|s| s.id().to_string()).collect(), manifest })
}

fn curves_json(curves: &[LevelCurve]) -> Result<String> {
    let all: Vec<serde_json::Value> = curves.iter().map(|c| c.to_json()).collect();
    Ok(serde_json::to_string_pretty(&all)?)
}

/// Level profiles (and, for planar solutions, extracted curves) of the
/// selected solutions.
pub fn run_levels(ctx: &RunContext, lambdas: &[f64]) -> Result<RunManifest> {
    ctx.config.validate(&ctx.base_dir)?;
    let g = ctx.nonlinearity()?;
    let lambdas = if lambdas.is_empty() { ctx.config.audit.lambdas.clone() } else { lambdas.to_vec() };
    let mut out = ctx.open()?;
    let (data, _) = branch_stage(ctx, &mut out, &g)?;
    let label = problem_label(&ctx.config, &g);
    let subjects = out.time("select", |_| select(&data, &g, &lambdas, ctx, &label))?;
    let n_levels = ctx.config.audit.n_levels;
    out.time("levels", |out| {
        for s in &subjects {
            let fam = s.profiles(n_levels, ctx.exec)?;
            if ctx.config.wants("csv") {
                out.write(&format!("levels_{}.csv", s.id()), profiles_to_csv(&fam.profiles).as_bytes())?;
            }
            if let Subject::Planar { field, lambda, .. } = s {
                let curves: Vec<LevelCurve> = level_grid(fam.top, CURVE_LEVELS)
                    .into_iter()
                    .map(|t| extract_level(field, t))
                    .collect::<Result<_>>()?;
                if ctx.config.wants("json") {
                    out.write(&format!("curves_{}.json", s.id()), curves_json(&curves)?.as_bytes())?;
                }
                if ctx.config.wants("svg") {
                    let mut plot = Plot::new(&format!("level sets of {}", s.id()), "x", "y");
                    plot.equal_aspect = true;
                    for c in &curves {
                        for comp in &c.components {
                            let mut pts: Vec<(f64, f64)> = comp.points.iter().map(|p| (p[0], p[1])).collect();
                            if comp.closed && !pts.is_empty() {
                                pts.push(pts[0]);
                            }
                            plot.series.push(Series::new("", pts, 0));
                        }
                    }
                    out.write(&format!("levels_{}.svg", s.id()), plot.to_svg().as_bytes())?;
                }
                if ctx.config.wants("bin") {
                    let stem = format!("field_{}", s.id());
                    field.save(&out.dir.join(&stem), *lambda, &g.id())?;
                    out.register(&format!("{stem}.bin"))?;
                    out.register(&format!("{stem}.json"))?;
                }
            } else if ctx.config.wants("svg") {
                let mut plot = Plot::new(&format!("level integrals of {}", s.id()), "s", "h₁, h₂");
                plot.log_y = true;
                plot.series.push(Series::new("h₁", fam.profiles.iter().map(|p| (p.s, p.h1)).collect(), 0));
                plot.series.push(Series::new("h₂", fam.profiles.iter().map(|p| (p.s, p.h2)).collect(), 1));
                out.write(&format!("levels_{}.svg", s.id()), plot.to_svg().as_bytes())?;
            }
        }
        Ok(())
    })?;
    out.finish()
}

/// λ* and the shape of the solution approaching it. For radial `e^u`
/// profiles the last branch point is compared with `-2 log r`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExtremalReport {
    pub extremal: Option<Extremal>,
    pub last_good: Option<f64>,
    pub sup_at_end: f64,
    pub bounded_on_grid: bool,
    /// `max |u(r) + 2 log r|` over `r ∈ [0.1, 1]` at the last branch point.
    pub log_profile_gap: Option<f64>,
}

pub fn run_extremal(ctx: &RunContext) -> Result<ExtremalReport> {
    ctx.config.validate(&ctx.base_dir)?;
    let g = ctx.nonlinearity()?;
    let mut out = ctx.open()?;
    let (data, _) = branch_stage(ctx, &mut out, &g)?;
    let summary = summarize(&data);
    let report = out.time("extremal", |out| {
        let report = match &data {
            BranchData::Radial(b) => {
                let last = b.points.last().ok_or_else(|| LabError::InsufficientData("empty branch".into()))?;
                let mut gap = None;
                let mut profiles = Plot::new("profiles along the branch", "r", "u");
                if g == Nonlinearity::Exponential {
                    let sol =
                        crate::radial::solve_shooting(b.n, &g, last.m, &ctx.config.branch_options(ctx.exec).shooting)?
                            .1;
                    let rs: Vec<f64> = (0..=90).map(|i| 0.1 + 0.01 * i as f64).collect();
                    gap = Some(rs.iter().map(|&r| (sol.eval(r).0 + 2.0 * r.ln()).abs()).fold(0.0, f64::max));
                    let fine: Vec<f64> = (1..=200).map(|i| i as f64 / 200.0).collect();
                    profiles.series.push(Series::new(
                        &format!("u, m = {}", last.m),
                        fine.iter().map(|&r| (r, sol.eval(r).0)).collect(),
                        0,
                    ));
                    let mut log = Series::new("-2 log r", fine.iter().map(|&r| (r, -2.0 * r.ln())).collect(), 1);
                    log.dashed = true;
                    profiles.series.push(log);
                }
                if ctx.config.wants("svg") && !profiles.series.is_empty() {
                    out.write("extremal_profile.svg", profiles.to_svg().as_bytes())?;
                }
                let bounded = summary.extremal.map(|e| e.m_at_max < last.m).unwrap_or(false);
                ExtremalReport {
                    extremal: summary.extremal,
                    last_good: summary.last_good,
                    sup_at_end: last.sup_norm,
                    bounded_on_grid: bounded,
                    log_profile_gap: gap,
                }
            }
            BranchData::Planar { branch, .. } => ExtremalReport {
                extremal: None,
                last_good: branch.last_good,
                sup_at_end: branch.points.last().map(|p| p.field.max()).unwrap_or(0.0),
                bounded_on_grid: true,
                log_profile_gap: None,
            },
        };
        if ctx.config.wants("json") {
            out.write("extremal.json", serde_json::to_string_pretty(&report)?.as_bytes())?;
        }
        if ctx.config.wants("svg") {
            out.write(
                "extremal.svg",
                branch_plot(&data, &summary, &problem_label(&ctx.config, &g)).to_svg().as_bytes(),
            )?;
        }
        Ok(report)
    })?;
    out.finish()?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(dir: &Path, toml: &str) -> RunContext {
        let cfg = ExperimentConfig::from_toml(toml).unwrap();
        let mut c = RunContext::new(cfg, Path::new("."));
        c.out_dir = dir.to_path_buf();
        c
    }

    const RADIAL: &str = "[branch]\nm_start = 0.1\nm_stop = 3.0\nm_count = 30\n[audit]\nlambdas = [1.0]\nn_levels = 32\nk_list = [1, 4]\n";

    #[test]
    fn radial_branch_is_cached_and_deterministic() {
        let tmp = tempfile::tempdir().unwrap();
        let c = ctx(tmp.path(), RADIAL);
        let first = run_branch(&c).unwrap();
        assert!(!first.from_cache);
        let e = first.summary.extremal.unwrap();
        assert!((e.lambda_star - 2.0).abs() < 1e-2);
        let csv = std::fs::read(tmp.path().join("branch.csv")).unwrap();
        let second = run_branch(&c).unwrap();
        assert!(second.from_cache);
        assert_eq!(std::fs::read(tmp.path().join("branch.csv")).unwrap(), csv);
        second.manifest.verify(tmp.path()).unwrap();
        // a point recomputed from scratch equals the cached one
        let BranchData::Radial(b) = &second.data else { panic!() };
        let g = Nonlinearity::Exponential;
        let p = crate::radial::branch_point(2, &g, b.points[7].m, &c.config.branch_options(Exec::Sequential)).unwrap();
        assert!((p.lambda - b.points[7].lambda).abs() <= 1e-10 * p.lambda);
        assert!((p.lambda1 - b.points[7].lambda1).abs() <= 1e-10 * p.lambda1.abs().max(1.0));
    }

    #[test]
    fn corrupt_cache_is_fatal() {
        let tmp = tempfile::tempdir().unwrap();
        let c = ctx(tmp.path(), RADIAL);
        run_branch(&c).unwrap();
        let path = tmp.path().join("cache/branch.csv");
        let mut text = std::fs::read_to_string(&path).unwrap();
        text.push_str("9,9,9,9,9\n");
        std::fs::write(&path, text).unwrap();
        assert!(matches!(run_branch(&c), Err(LabError::CorruptCache { .. })));
        std::fs::remove_dir_all(tmp.path().join("cache")).unwrap();
        assert!(!run_branch(&c).unwrap().from_cache);
    }

    #[test]
    fn audit_of_the_radial_disk() {
        let tmp = tempfile::tempdir().unwrap();
        let c = ctx(tmp.path(), RADIAL);
        let out = run_audit(&c, &[]).unwrap();
        assert!(out.records.iter().filter(|r| r.check_id != "main_estimate").all(|r| r.holds));
        assert!(tmp.path().join("audit_summary.csv").exists());
        let again = run_audit(&c, &[]).unwrap();
        assert_eq!(out.records, again.records);
        match run_audit(&c, &[2.5]) {
            Err(LabError::Selector { requested, available }) => {
                assert_eq!(requested, 2.5);
                assert!(available.iter().all(|&l| l < 2.0));
            }
            other => panic!("{:?}", other.map(|o| o.subjects)),
        }
    }

    #[test]
    fn planar_branch_round_trip() {
        let tmp = tempfile::tempdir().unwrap();
        let toml = "[problem.domain]\nkind = \"disk\"\n[branch]\nh = 0.0625\nlambda_step = 0.05\nlambda_stop = 1.0\n[output]\nformats = [\"csv\", \"json\", \"svg\", \"bin\"]\n";
        let c = ctx(tmp.path(), toml);
        let first = run_branch(&c).unwrap();
        let second = run_branch(&c).unwrap();
        assert!(second.from_cache);
        let (BranchData::Planar { branch: a, .. }, BranchData::Planar { branch: b, .. }) = (&first.data, &second.data)
        else {
            panic!()
        };
        assert_eq!(a.points.len(), 20);
        for (p, q) in a.points.iter().zip(&b.points) {
            assert_eq!(p.field.values, q.field.values);
            assert_eq!(p.lambda1, q.lambda1);
        }
        run_levels(&c, &[1.0]).unwrap();
        let m = RunManifest::load(tmp.path()).unwrap();
        m.verify(tmp.path()).unwrap();
        assert!(m.artifacts.keys().any(|k| k.starts_with("curves_")));
        assert!(m.artifacts.keys().any(|k| k.ends_with(".bin")));
    }
}
