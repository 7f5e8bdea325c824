//! End-to-end runs of the `semilab` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const RADIAL: &str = "[branch]\nm_start = 0.1\nm_stop = 2.5\nm_count = 40\n\n[audit]\nlambdas = [0.5, 1.0]\nn_levels = 32\nk_list = [1, 4]\n";

const DISK: &str = "[problem.domain]\nkind = \"disk\"\n\n[branch]\nh = 0.03125\nlambda_step = 0.25\nlambda_stop = 1.0\n\n[audit]\nlambdas = [1.0]\nn_levels = 32\n";

fn semilab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semilab")).current_dir(dir).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("exp.toml");
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), RADIAL);
    for (out, threads) in [("a", "1"), ("b", "4")] {
        for cmd in ["branch", "audit"] {
            let o = semilab(tmp.path(), &[cmd, "--config", &cfg, "--out", out, "--threads", threads]);
            assert!(o.status.success(), "{}", stderr(&o));
        }
    }
    let files =
        ["branch.json", "audit.json", "audit_summary.csv", "profiles_ball-n2-exp-lambda1.csv", "cache/branch.csv"];
    for f in files {
        let a = fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = fs::read(tmp.path().join("b").join(f)).unwrap();
        assert!(a == b, "{f} differs between thread counts");
    }
    let summary = fs::read_to_string(tmp.path().join("a/audit_summary.csv")).unwrap();
    assert!(summary.lines().skip(1).all(|l| l.contains(",true,")), "{summary}");
}

#[test]
fn cache_is_reused_rebuilt_and_guarded() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), RADIAL);
    let run = || semilab(tmp.path(), &["branch", "--config", &cfg, "--out", "o"]);
    assert!(run().status.success());
    let second = run();
    assert!(String::from_utf8_lossy(&second.stdout).contains("(cached)"));

    fs::remove_file(tmp.path().join("o/cache/index.json")).unwrap();
    let rebuilt = run();
    assert!(rebuilt.status.success());
    assert!(!String::from_utf8_lossy(&rebuilt.stdout).contains("(cached)"));

    let csv = tmp.path().join("o/cache/branch.csv");
    let mut bytes = fs::read(&csv).unwrap();
    let last = bytes.len() - 2;
    bytes[last] = if bytes[last] == b'1' { b'2' } else { b'1' };
    fs::write(&csv, bytes).unwrap();
    let corrupt = run();
    assert_eq!(corrupt.status.code(), Some(2));
    assert!(stderr(&corrupt).contains("corrupt cache"), "{}", stderr(&corrupt));
}

#[test]
fn selector_beyond_the_branch_lists_the_available_points() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), RADIAL);
    let o = semilab(tmp.path(), &["audit", "--config", &cfg, "--out", "o", "--lambda", "2.5"]);
    assert!(!o.status.success());
    let e = stderr(&o);
    assert!(e.contains("no solution at λ = 2.5") && e.contains("available branch points"), "{e}");
}

#[test]
fn invalid_configs_fail_before_computing() {
    let tmp = tempfile::tempdir().unwrap();
    for (text, field) in [
        ("[problem]\nn = 3\n[problem.domain]\nkind = \"square\"\n", "problem.domain.kind"),
        ("[audit]\nt_fractions = []\n", "audit.t_fractions"),
        ("[branch]\nnewton_tol = 0.0\n", "branch.newton_tol"),
        ("[problem]\nn = 1\n", "problem.n"),
        ("[branch]\nunknown = 1\n", "unknown"),
    ] {
        let cfg = write_config(tmp.path(), text);
        let o = semilab(tmp.path(), &["verify", "--config", &cfg, "--out", "o"]);
        assert_eq!(o.status.code(), Some(2), "{text}");
        assert!(stderr(&o).contains(field), "{text}: {}", stderr(&o));
        assert!(!tmp.path().join("o").exists());
    }
}

#[test]
fn constant_source_warns_and_still_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg =
        write_config(tmp.path(), "[problem.nonlinearity]\nkind = \"constant\"\nc = 1.0\n[branch]\nm_count = 20\n");
    let o = semilab(tmp.path(), &["branch", "--config", &cfg, "--out", "o"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("superlinear=false"));
    assert!(tmp.path().join("o/branch.svg").exists());
}

#[test]
fn planar_commands_write_a_consistent_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("{DISK}\n[output]\nformats = [\"csv\", \"json\", \"svg\", \"bin\"]\n"));
    for cmd in ["branch", "audit", "levels", "extremal"] {
        let o = semilab(tmp.path(), &[cmd, "--config", &cfg, "--out", "o"]);
        assert!(o.status.success(), "{cmd}: {}", stderr(&o));
    }
    let out = tmp.path().join("o");
    let m = semistable::report::RunManifest::load(&out).unwrap();
    m.verify(&out).unwrap();
    for f in [
        "branch.csv",
        "audit.json",
        "curves_disk-n2-exp-lambda1.json",
        "field_disk-n2-exp-lambda1.bin",
        "extremal.json",
    ] {
        assert!(m.artifacts.contains_key(f), "{f} missing from the manifest");
    }
    let summary = fs::read_to_string(out.join("audit_summary.csv")).unwrap();
    assert!(summary.lines().skip(1).all(|l| l.contains(",true,")), "{summary}");
    let svg = fs::read_to_string(out.join("branch.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("λ* ≥"));
}
