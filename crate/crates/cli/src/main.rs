//! `occmom` — lower bounds for optimal control problems with unbounded
//! controls via moment relaxations.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser};
use occmom::pipeline::{format_report, run, OrderSpec, ProblemSource, ReportFormat, RunConfig};
use occmom::relaxation::AssemblyOptions;
use occmom::sdp::SolverSettings;

#[derive(Debug, Parser)]
#[command(name = "occmom", version, about)]
#[command(group(ArgGroup::new("problem").required(true).args(["builtin", "config"])))]
struct Args {
    /// Built-in problem: lavrentiev or brachistochrone.
    #[arg(long, value_name = "NAME")]
    builtin: Option<String>,

    /// TOML problem file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Relaxation orders: "1,2,3", "2..4", "min..4" or "min".
    #[arg(long, value_name = "LIST", default_value = "min")]
    orders: OrderSpec,

    #[arg(long, value_name = "FORMAT", default_value = "table")]
    report: ReportFormat,

    /// Write one SDPA sparse file per order into this directory.
    #[arg(long, value_name = "DIR")]
    export_sdpa: Option<PathBuf>,

    /// Run the grid oracle with N time steps and LEVELS state subdivisions.
    #[arg(long, value_name = "N,LEVELS", value_parser = parse_oracle)]
    oracle: Option<(usize, usize)>,

    /// Solver duality-gap tolerance (absolute and relative).
    #[arg(long, value_name = "GAP")]
    tol: Option<f64>,

    /// Keep variables fixed by affine support equalities instead of
    /// substituting them away (same bounds, larger SDPs).
    #[arg(long)]
    keep_affine: bool,
}

fn parse_oracle(s: &str) -> Result<(usize, usize), String> {
    let (n, levels) = s.split_once(',').ok_or_else(|| format!("expected N,LEVELS, got '{s}'"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("'{v}': {e}"));
    Ok((parse(n)?, parse(levels)?))
}

fn main() -> ExitCode {
    let args = Args::parse();
    let source = match (args.builtin, args.config) {
        (Some(name), _) => ProblemSource::Builtin(name),
        (None, Some(path)) => ProblemSource::Config(path),
        (None, None) => unreachable!("clap enforces the problem group"),
    };
    let mut settings = SolverSettings::default();
    if let Some(tol) = args.tol {
        settings.tol_gap_abs = tol;
        settings.tol_gap_rel = tol;
    }
    let cfg = RunConfig {
        source,
        orders: args.orders,
        settings,
        format: args.report,
        export_dir: args.export_sdpa,
        oracle: args.oracle,
        assembly: AssemblyOptions { eliminate_affine_equalities: !args.keep_affine },
    };
    match run(&cfg) {
        Ok(report) => {
            print!("{}", format_report(&report, cfg.format));
            if cfg.format == ReportFormat::Json {
                println!();
            }
            if report.all_succeeded() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
