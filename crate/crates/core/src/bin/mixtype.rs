use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use mixtype::cli::{self, RunConfig};

/// Runs a mixed-type solver scenario and writes report.json plus CSV grids.
#[derive(Parser, Debug)]
#[command(name = "mixtype", version, after_help = cli::EXIT_CODES)]
struct Args {
    /// Configuration file (line-based `key = value` under `[section]` headers).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario: elliptic-only, hyperbolic-only, composite-linear, counterexample,
    /// nash-moser or verification-suite.
    #[arg(long)]
    scenario: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid spacing.
    #[arg(long)]
    h: Option<f64>,
    /// Seed for the randomized property checks.
    #[arg(long)]
    seed: Option<u64>,
}

fn configure(args: &Args) -> mixtype::Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = &args.scenario {
        cfg.set("run", "scenario", s)?;
    }
    if let Some(o) = &args.out {
        cfg.out = o.clone();
    }
    if let Some(h) = args.h {
        cfg.set("grid", "h", &h.to_string())?;
    }
    if let Some(s) = args.seed {
        cfg.set("run", "seed", &s.to_string())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let code = match configure(&args).and_then(|cfg| cli::run(&cfg)) {
        Err(e) => {
            eprintln!("mixtype: {e}");
            e.exit_code()
        }
        Ok((report, Some(e))) => {
            eprintln!("mixtype: {}: {e}", report.scenario);
            e.exit_code()
        }
        Ok((report, None)) => {
            for a in report.assertions.iter().filter(|a| !a.pass) {
                eprintln!("mixtype: assertion {} failed: {:e} > {:e}", a.name, a.value, a.bound);
            }
            if report.all_pass() {
                0
            } else {
                cli::EXIT_ASSERTION
            }
        }
    };
    ExitCode::from(code as u8)
}
