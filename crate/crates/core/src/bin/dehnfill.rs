use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dehnfill::experiment::{self, Command, ExperimentConfig, Report, RunError};

const THREADS_ENV: &str = "DEHNFILL_THREADS";

/// Run a dehnfill sub-experiment from a TOML config.
#[derive(Parser, Debug)]
#[command(name = "dehnfill", version, about)]
struct Cli {
    /// Sub-experiment to run.
    #[arg(value_enum)]
    command: Command,
    /// Config file; defaults are used for every key it omits.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Output directory for report.json, CSV tables and SVG plots.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Worker threads. Overrides DEHNFILL_THREADS and the config.
    #[arg(long)]
    threads: Option<usize>,
    /// Print the report JSON to stdout.
    #[arg(long)]
    json: bool,
}

fn threads(cli: &Cli, cfg: &ExperimentConfig) -> Result<Option<usize>, String> {
    if let Some(t) = cli.threads {
        return if t == 0 { Err("--threads must be at least 1".into()) } else { Ok(Some(t)) };
    }
    if let Ok(v) = std::env::var(THREADS_ENV) {
        return match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(Some(t)),
            _ => Err(format!("{THREADS_ENV}={v:?} is not a positive integer")),
        };
    }
    Ok(cfg.threads)
}

fn failing_row(report: &Report, at: &str) -> Option<String> {
    let (name, rest) = at.split_once('[')?;
    let i: usize = rest.strip_suffix(']')?.parse().ok()?;
    let t = report.tables.iter().find(|t| t.name == name)?;
    let row = t.rows.get(i)?;
    let cells: Vec<String> = t
        .columns
        .iter()
        .zip(row)
        .map(|(c, v)| format!("{c}={v}"))
        .collect();
    Some(cells.join(" "))
}

fn summary(report: &Report) {
    for v in &report.verdicts {
        let mark = if v.passed { "PASS" } else { "FAIL" };
        eprintln!("{mark} {:<28} {:.3e} (tol {:.1e})  {}", v.name, v.value, v.tolerance, v.invariant);
        if let Some(at) = &v.row {
            match failing_row(report, at) {
                Some(row) => eprintln!("     at {at}: {row}"),
                None => eprintln!("     at {at}"),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (cfg, source) = match &cli.config {
        Some(p) => match ExperimentConfig::load(p) {
            Ok(c) => (c, p.display().to_string()),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => (ExperimentConfig::for_command(cli.command), "defaults".to_string()),
    };
    match threads(&cli, &cfg) {
        Ok(Some(t)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
                eprintln!("error: cannot start {t} worker threads: {e}");
                return ExitCode::from(2);
            }
        }
        Ok(None) => {}
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let report = match experiment::run_with_source(&cfg, cli.command, &source) {
        Ok(r) => r,
        Err(RunError::Config(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Err(e @ RunError::Numeric(_)) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    let out = cli.out.clone().or_else(|| cfg.output.dir.clone());
    if let Some(dir) = &out {
        match report.write(dir) {
            Ok(files) => {
                for f in files {
                    eprintln!("wrote {}", f.display());
                }
            }
            Err(e) => {
                eprintln!("error: cannot write to {}: {e}", dir.display());
                return ExitCode::from(3);
            }
        }
    }
    if cli.json || out.is_none() {
        println!("{}", report.to_json());
    }
    summary(&report);
    if report.passed {
        eprintln!("{}: all {} verdicts passed", report.command, report.verdicts.len());
        ExitCode::SUCCESS
    } else {
        eprintln!("{}: {} of {} verdicts failed", report.command, report.failures().len(), report.verdicts.len());
        ExitCode::from(3)
    }
}
