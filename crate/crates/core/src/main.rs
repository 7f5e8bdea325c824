use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use semistable::par::{self, Exec};
use semistable::report::manifest::OutputStage;
use semistable::report::{run_audit, run_branch, run_extremal, run_levels, ExperimentConfig, RunContext};
use semistable::verify::{run_verify, VerifySettings};
use semistable::Result;

#[derive(Parser)]
#[command(
    name = "semilab",
    version,
    about = "Minimal and extremal solutions of -Δu = λ g(u) and their level-set estimates"
)]
struct Cli {
    /// Experiment file (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.directory`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 1 runs everything sequentially.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for the random test functions of the audit.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trace the solution branch and plot λ against sup u.
    Branch,
    /// Run the estimate audit on minimal solutions.
    Audit {
        /// Parameter of a solution to audit; repeatable.
        #[arg(long = "lambda")]
        lambdas: Vec<f64>,
    },
    /// Level profiles and curves of minimal solutions.
    Levels {
        #[arg(long = "lambda")]
        lambdas: Vec<f64>,
    },
    /// Estimate λ* and compare the limit profile with -2 log r.
    Extremal,
    /// Run the acceptance suite at the config's grid step.
    Verify,
}

fn load(cli: &Cli) -> Result<(ExperimentConfig, PathBuf)> {
    match &cli.config {
        Some(path) => {
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            Ok((ExperimentConfig::load(path)?, base))
        }
        None => Ok((ExperimentConfig::default(), PathBuf::from("."))),
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let (config, base) = load(cli)?;
    for w in config.validate(&base)? {
        eprintln!("warning: {w}");
    }
    let mut ctx = RunContext::new(config, &base);
    if let Some(out) = &cli.out {
        ctx.out_dir = out.clone();
    }
    ctx.seed = cli.seed;
    if let Some(t) = cli.threads {
        par::init_threads(t.max(1));
        if t <= 1 {
            ctx.exec = Exec::Sequential;
        }
    }
    match &cli.command {
        Command::Branch => {
            let b = run_branch(&ctx)?;
            let s = &b.summary;
            println!("{} branch points{}", s.points, if b.from_cache { " (cached)" } else { "" });
            if let Some(e) = &s.extremal {
                println!("λ* ≈ {:.6} at sup u = {:.6}", e.lambda_star, e.m_at_max);
            }
            if let Some((l, m)) = s.lambda1_zero {
                println!("λ₁ = 0 at λ = {l:.6}, sup u = {m:.6}");
            }
            if let Some(l) = s.last_good {
                println!("last minimal λ = {l:.6}");
            }
            if let Some(r) = &s.stop_reason {
                println!("stopped: {r}");
            }
            for g in &s.gaps {
                println!("gap: {g}");
            }
        }
        Command::Audit { lambdas } => {
            let a = run_audit(&ctx, lambdas)?;
            let failed: Vec<_> = a.records.iter().filter(|r| !r.holds).collect();
            println!("{} records over {} solutions, {} failing", a.records.len(), a.subjects.len(), failed.len());
            for r in failed {
                println!("  {} {} param {}: lhs {:.6e} rhs {:.6e}", r.solution, r.check_id, r.param, r.lhs, r.rhs);
            }
        }
        Command::Levels { lambdas } => {
            let m = run_levels(&ctx, lambdas)?;
            println!("{} artifacts in {}", m.artifacts.len(), ctx.out_dir.display());
        }
        Command::Extremal => {
            let r = run_extremal(&ctx)?;
            println!("{}", serde_json::to_string_pretty(&r)?);
        }
        Command::Verify => {
            let settings = VerifySettings {
                h: ctx.config.branch.h,
                n_levels: ctx.config.audit.n_levels,
                seed: ctx.seed,
                exec: ctx.exec,
            };
            let report = run_verify(settings);
            let text = report.to_text();
            print!("{text}");
            let mut out = OutputStage::open(&ctx.out_dir, &ctx.config.hash())?;
            out.write("verify_report.txt", text.as_bytes())?;
            out.write("verify_report.json", serde_json::to_string_pretty(&report)?.as_bytes())?;
            out.finish()?;
            return Ok(report.passed());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
