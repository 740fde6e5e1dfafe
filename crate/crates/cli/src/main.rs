mod compare;
mod config;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use effdyn::report::Report;

use crate::config::{Config, ESTIMATORS, SYSTEMS};

/// Cache directory for finished reports, keyed by config hash.
const CACHE_ENV: &str = "EFFDYN_CACHE_DIR";

#[derive(Parser)]
#[command(name = "effdyn", version, about = "Run entropy and orbit-statistics experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Output path without extension; overrides `experiment.output`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare a CSV report against a `key,value[,tol]` table.
    Compare {
        report: PathBuf,
        oracle: PathBuf,
        tol: f64,
    },
    ListSystems,
    ListEstimators,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out } => cmd_run(&config, out.as_deref()),
        Command::Compare { report, oracle, tol } => cmd_compare(&report, &oracle, tol),
        Command::ListSystems => {
            for (k, d) in SYSTEMS {
                println!("{k:<12} {d}");
            }
            ExitCode::SUCCESS
        }
        Command::ListEstimators => {
            for (k, d) in ESTIMATORS {
                println!("{k:<12} {d}");
            }
            ExitCode::SUCCESS
        }
    }
}

fn cmd_run(path: &Path, out: Option<&Path>) -> ExitCode {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return ExitCode::from(2);
        }
    };
    let cfg = match Config::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error in {}: {e}", path.display());
            return ExitCode::from(2);
        }
    };
    let base = match (out, &cfg.experiment.output) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(o)) => PathBuf::from(o),
        (None, None) => PathBuf::from(&cfg.experiment.name),
    };
    match execute(&cfg, &text).and_then(|r| write_outputs(&r, &base)) {
        Ok(csv) => {
            println!("wrote {}", csv.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn execute(cfg: &Config, text: &str) -> anyhow::Result<Report> {
    let cache = std::env::var_os(CACHE_ENV).map(|d| PathBuf::from(d).join(format!("{}.csv", run::config_hash(text))));
    if let Some(c) = &cache {
        if let Ok(t) = std::fs::read_to_string(c) {
            return Ok(Report::from_csv(&t)?);
        }
    }
    let report = run::run(cfg, text)?;
    if let Some(c) = &cache {
        if let Some(dir) = c.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(c, report.to_csv()?)?;
    }
    Ok(report)
}

fn with_ext(base: &Path, ext: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn write_outputs(report: &Report, base: &Path) -> anyhow::Result<PathBuf> {
    if let Some(dir) = base.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let csv = with_ext(base, "csv");
    std::fs::write(&csv, report.to_csv()?)?;
    std::fs::write(with_ext(base, "json"), report.to_json()?)?;
    Ok(csv)
}

fn cmd_compare(report: &Path, oracle: &Path, tol: f64) -> ExitCode {
    let load = || -> anyhow::Result<_> {
        let r = Report::from_csv(&std::fs::read_to_string(report)?)?;
        let o = compare::parse_oracle(&std::fs::read_to_string(oracle)?)?;
        Ok((r, o))
    };
    let (r, o) = match load() {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let rows = compare::compare(&r, &o, tol);
    print!("{}", compare::render(&rows));
    if rows.iter().all(|c| c.pass) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
