//! Batch runner: configuration, branch cache, audit orchestration and the
//! CSV/JSON/SVG artifacts with their manifest.

pub mod config;
pub mod manifest;
pub mod run;
pub mod svg;

pub use config::{Domain, ExperimentConfig};
pub use manifest::{RunManifest, MANIFEST_FILE};
pub use run::{
    load_cached_branch, run_audit, run_branch, run_extremal, run_levels, select, summarize, AuditOutcome, BranchData,
    BranchOutcome, BranchSummary, ExtremalReport, RunContext,
};
