//! Runs every config in `configs/` and compares the report payload, CSV
//! tables and SVG plots with the files under `tests/golden/<config>/`.
//!
//! Numbers match to a relative 1e-9; everything else must be identical.
//! Set `DEHNFILL_BLESS=1` to rewrite the golden files.

use std::fs;
use std::path::{Path, PathBuf};

use dehnfill::experiment::{self, Command, ExperimentConfig};
use serde_json::Value;

const REL_TOL: f64 = 1e-9;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn configs() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(root().join("configs"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    v.sort();
    v
}

/// The report without fields that depend on the machine.
fn masked(mut v: Value) -> Value {
    if let Some(f) = v.pointer_mut("/config/group/file") {
        let name = Path::new(f.as_str().unwrap()).file_name().unwrap().to_string_lossy().to_string();
        *f = Value::String(format!(".../{name}"));
    }
    v
}

fn close(a: &Value, b: &Value, path: &str, diffs: &mut Vec<String>) {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            if (x - y).abs() > REL_TOL * x.abs().max(y.abs()) + 1e-300 {
                diffs.push(format!("{path}: {x} vs {y}"));
            }
        }
        (Value::Array(x), Value::Array(y)) if x.len() == y.len() => {
            for (i, (p, q)) in x.iter().zip(y).enumerate() {
                close(p, q, &format!("{path}[{i}]"), diffs);
            }
        }
        (Value::Object(x), Value::Object(y)) if x.len() == y.len() => {
            for (k, p) in x {
                match y.get(k) {
                    Some(q) => close(p, q, &format!("{path}.{k}"), diffs),
                    None => diffs.push(format!("{path}.{k}: missing")),
                }
            }
        }
        _ if a == b => {}
        _ => diffs.push(format!("{path}: {a} vs {b}")),
    }
}

fn csv_values(text: &str) -> Value {
    Value::Array(
        text.lines()
            .map(|l| {
                Value::Array(
                    l.split(',')
                        .map(|c| match c.parse::<f64>() {
                            Ok(x) => serde_json::json!(x),
                            Err(_) => Value::String(c.to_string()),
                        })
                        .collect(),
                )
            })
            .collect(),
    )
}

#[test]
fn reports_match_golden_files() {
    let bless = std::env::var_os("DEHNFILL_BLESS").is_some();
    let mut failures = Vec::new();
    for path in configs() {
        let stem = path.file_stem().unwrap().to_string_lossy().to_string();
        let cfg = ExperimentConfig::load(&path).unwrap();
        let command = cfg.command.expect("example configs name their command");
        let report = experiment::run_with_source(&cfg, command, &stem).unwrap();
        assert!(report.passed, "{stem}: {:?}", report.failures());
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(&stem);
        let payload = masked(report.payload());
        let tables: Vec<(String, String)> = report.tables.iter().map(|t| (format!("{}.csv", t.name), t.to_csv())).collect();
        let plots: Vec<(String, String)> = report
            .plot_data
            .iter()
            .map(|(name, p)| (name.clone(), p.to_svg().unwrap()))
            .collect();
        if bless {
            fs::create_dir_all(&dir).unwrap();
            fs::write(dir.join("report.json"), serde_json::to_string_pretty(&payload).unwrap() + "\n").unwrap();
            for (name, text) in tables.iter().chain(&plots) {
                fs::write(dir.join(name), text).unwrap();
            }
            continue;
        }
        let want: Value = serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
        let mut diffs = Vec::new();
        close(&payload, &want, &stem, &mut diffs);
        for (name, csv) in &tables {
            let golden = fs::read_to_string(dir.join(name)).unwrap();
            close(&csv_values(csv), &csv_values(&golden), &format!("{stem}/{name}"), &mut diffs);
        }
        // plots round coordinates to 0.01 px, so they compare as text
        for (name, svg) in &plots {
            if fs::read_to_string(dir.join(name)).unwrap() != *svg {
                diffs.push(format!("{stem}/{name}: differs"));
            }
        }
        failures.extend(diffs.into_iter().take(5));
    }
    assert!(failures.is_empty(), "golden mismatches:\n{}", failures.join("\n"));
}

#[test]
fn identical_runs_give_identical_artifacts() {
    let cfg = ExperimentConfig::load(&root().join("configs/residual-decay.toml")).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    experiment::run(&cfg, Command::ResidualDecay).unwrap().write(a.path()).unwrap();
    experiment::run(&cfg, Command::ResidualDecay).unwrap().write(b.path()).unwrap();
    for name in ["decay.csv", "decay.svg"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let ra: Value = serde_json::from_slice(&fs::read(a.path().join("report.json")).unwrap()).unwrap();
    let rb: Value = serde_json::from_slice(&fs::read(b.path().join("report.json")).unwrap()).unwrap();
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("wall_clock_s");
        v
    };
    assert_eq!(strip(ra), strip(rb));
}

#[test]
fn thread_count_does_not_change_the_payload() {
    let cfg = ExperimentConfig::load(&root().join("configs/sweep.toml")).unwrap();
    let run_with = |t: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .unwrap()
            .install(|| experiment::run(&cfg, Command::Sweep).unwrap().payload())
    };
    assert_eq!(run_with(1), run_with(4));
}
