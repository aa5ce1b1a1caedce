//! The `dehnfill` binary: exit codes, diagnostics and written artifacts.

use std::path::Path;
use std::process::{Command, Output};

fn dehnfill(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_dehnfill"));
    c.args(args).env_remove("DEHNFILL_THREADS");
    for (k, v) in env {
        c.env(k, v);
    }
    c.output().unwrap()
}

fn config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn passing_run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/residual-decay.toml");
    let o = dehnfill(
        &["residual-decay", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", "2"],
        &[],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["report.json", "decay.csv", "decay.svg"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["passed"], true);
    assert!(report["verdicts"][0]["invariant"].as_str().unwrap().contains("R^-(n-1)"));
}

#[test]
fn config_errors_exit_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("typo.toml", "n = 4\nmas = 1.0\n", "mas"),
        ("range.toml", "n = 2\n", "`n`"),
        ("radii.toml", "radii = [8.0, 16.0, 12.0]\n", "radii[2]"),
        ("tol.toml", "[tolerances]\nslope = -1.0\n", "tolerances.slope"),
        ("syntax.toml", "n = [\n", "line"),
        ("kind.toml", "command = \"modes\"\n", "command"),
    ];
    for (name, text, needle) in cases {
        let p = config(dir.path(), name, text);
        let o = dehnfill(&["residual-decay", "-c", &p], &[]);
        assert_eq!(o.status.code(), Some(2), "{name}: {}", stderr(&o));
        assert!(stderr(&o).contains(needle), "{name}: {}", stderr(&o));
        assert!(!stderr(&o).contains("panicked"), "{name}");
    }
    let p = config(dir.path(), "g.toml", "[group]\nfile = \"missing.txt\"\n");
    let o = dehnfill(&["admissible", "-c", &p], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("group.file"), "{}", stderr(&o));
    let o = dehnfill(&["modes", "-c", "/nonexistent/x.toml"], &[]);
    assert_eq!(o.status.code(), Some(2));
    let o = dehnfill(&["modes"], &[("DEHNFILL_THREADS", "zero")]);
    assert_eq!(o.status.code(), Some(2));
    let o = dehnfill(&["no-such-experiment"], &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_group_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.txt"), "group X\ngram 1 0 ; 0 1\ngen a: 1 0 ; 0 -1 | 0 1/3\nend\n").unwrap();
    let p = config(dir.path(), "g.toml", "[group]\nfile = \"bad.txt\"\n");
    let o = dehnfill(&["admissible", "-c", &p], &[]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(!stderr(&o).contains("panicked"));
}

#[test]
fn failed_verdict_exits_3_and_names_the_row() {
    let dir = tempfile::tempdir().unwrap();
    let p = config(dir.path(), "strict.toml", "dims = [4]\n[tolerances]\nfd = 1e-14\n");
    let o = dehnfill(&["curvature-check", "-c", &p], &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let err = stderr(&o);
    assert!(err.contains("FAIL fd-agreement"), "{err}");
    assert!(err.contains("at curvature["), "{err}");
    assert!(err.contains("kind="), "{err}");
}

#[test]
fn stdout_carries_the_report_without_out_dir() {
    let o = dehnfill(&["modes"], &[("DEHNFILL_THREADS", "1")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["command"], "modes");
    assert_eq!(v["tables"][0]["rows"].as_array().unwrap().len(), 3);
}
