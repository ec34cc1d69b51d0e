//! End-to-end driver: load a problem, sweep relaxation orders, solve,
//! optionally export SDPA files and cross-check against the oracle.

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::homogenize::{build_lp_auto, default_test_degree};
use crate::measure_lp::MeasureLp;
use crate::oracle::{grid_search_upper_bound, CostModel};
use crate::problem::{brachistochrone_measure_lp_with, load_problem, ProblemSpec};
use crate::relaxation::{assemble_sdp_with, min_order, AssemblyOptions};
use crate::sdp::{export_sdpa, to_standard_form, BackendRegistry, SolveStatus, SolverSettings};

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    Builtin(String),
    Config(PathBuf),
}

/// Orders to sweep: an explicit list, an inclusive range whose lower end
/// may be the problem's minimum order, or just that minimum order.
#[derive(Debug, Clone, PartialEq)]
pub enum OrderSpec {
    List(Vec<u32>),
    Range { from: Option<u32>, to: u32 },
    Minimum,
}

impl OrderSpec {
    pub fn resolve(&self, min_order: u32) -> Vec<u32> {
        match self {
            OrderSpec::List(v) => v.clone(),
            OrderSpec::Range { from, to } => (from.unwrap_or(min_order)..=*to).collect(),
            OrderSpec::Minimum => vec![min_order],
        }
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("invalid order list '{0}': expected e.g. \"1,2,3\", \"2..4\", \"min..4\" or \"min\"")]
pub struct OrderSpecError(String);

impl FromStr for OrderSpec {
    type Err = OrderSpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || OrderSpecError(s.to_string());
        let s = s.trim();
        if s == "min" {
            return Ok(OrderSpec::Minimum);
        }
        if let Some((lo, hi)) = s.split_once("..") {
            let to = hi.trim().parse().map_err(|_| err())?;
            let from = match lo.trim() {
                "min" => None,
                lo => Some(lo.parse().map_err(|_| err())?),
            };
            return Ok(OrderSpec::Range { from, to });
        }
        let list: Vec<u32> = s.split(',').map(|p| p.trim().parse()).collect::<Result<_, _>>().map_err(|_| err())?;
        if list.is_empty() {
            return Err(err());
        }
        Ok(OrderSpec::List(list))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Table,
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(ReportFormat::Table),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown report format '{other}' (expected table or json)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source: ProblemSource,
    pub orders: OrderSpec,
    pub settings: SolverSettings,
    pub format: ReportFormat,
    pub export_dir: Option<PathBuf>,
    /// `(N, levels)` of the grid oracle.
    pub oracle: Option<(usize, usize)>,
    pub assembly: AssemblyOptions,
}

impl RunConfig {
    pub fn builtin(name: &str, orders: OrderSpec) -> Self {
        RunConfig {
            source: ProblemSource::Builtin(name.to_string()),
            orders,
            settings: SolverSettings::default(),
            format: ReportFormat::Table,
            export_dir: None,
            oracle: None,
            // Exact reformulation; the Lavrentiev slice `z + w = 1` loses `w`.
            assembly: AssemblyOptions { eliminate_affine_equalities: true },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Build,
    Assemble,
    Export,
    Solve,
    Oracle,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Build => "build",
            Stage::Assemble => "assemble",
            Stage::Export => "export",
            Stage::Solve => "solve",
            Stage::Oracle => "oracle",
        })
    }
}

#[derive(Debug, Error)]
#[error("{stage} stage failed: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: Box<dyn std::error::Error + Send + Sync>,
}

impl PipelineError {
    fn at<E: Into<Box<dyn std::error::Error + Send + Sync>>>(stage: Stage) -> impl FnOnce(E) -> PipelineError {
        move |e| PipelineError { stage, source: e.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderResult {
    pub order: u32,
    /// Moment degree `2 * order`.
    pub degree: u32,
    pub lower_bound: f64,
    pub status: SolveStatus,
    pub row_residual_inf: f64,
    pub psd_min_eig: f64,
    pub flat: bool,
    pub iterations: u32,
    /// Mass `y_0` of each measure.
    pub masses: Vec<f64>,
    pub assemble_seconds: f64,
    pub solve_seconds: f64,
    pub upper_bound: Option<f64>,
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub steps: usize,
    pub levels: usize,
    pub upper_bound: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub problem: String,
    pub min_order: u32,
    pub orders: Vec<OrderResult>,
    pub oracle: Option<OracleSummary>,
}

impl RunReport {
    pub fn all_succeeded(&self) -> bool {
        self.orders.iter().all(|o| o.status.is_success())
    }
}

/// The measure LP solved at order `d`; its test functions grow with `d`.
pub fn lp_for_order(spec: &ProblemSpec, d: u32) -> Result<MeasureLp, crate::homogenize::HomogenizeError> {
    let test_degree = |r: u32| default_test_degree(d, r).max(1);
    match spec {
        ProblemSpec::Ocp(p) => build_lp_auto(p, test_degree(p.r)),
        ProblemSpec::Brachistochrone => Ok(brachistochrone_measure_lp_with(test_degree(1)).lp),
    }
}

/// Smallest order the problem admits, from its lowest-degree LP.
pub fn problem_min_order(spec: &ProblemSpec) -> Result<u32, crate::homogenize::HomogenizeError> {
    let lp = match spec {
        ProblemSpec::Ocp(p) => build_lp_auto(p, 1)?,
        ProblemSpec::Brachistochrone => brachistochrone_measure_lp_with(1).lp,
    };
    Ok(min_order(&lp))
}

pub fn load_spec(source: &ProblemSource) -> Result<ProblemSpec, PipelineError> {
    match source {
        ProblemSource::Builtin(name) => ProblemSpec::builtin(name).map_err(PipelineError::at(Stage::Config)),
        ProblemSource::Config(path) => load_problem(path).map_err(PipelineError::at(Stage::Config)),
    }
}

pub fn run(cfg: &RunConfig) -> Result<RunReport, PipelineError> {
    run_with(cfg, &BackendRegistry::default())
}

pub fn run_with(cfg: &RunConfig, backends: &BackendRegistry) -> Result<RunReport, PipelineError> {
    let spec = load_spec(&cfg.source)?;
    let label = spec.label();
    let min = problem_min_order(&spec).map_err(PipelineError::at(Stage::Build))?;
    let orders = cfg.orders.resolve(min);
    if orders.is_empty() {
        return Err(PipelineError::at(Stage::Config)("empty order list"));
    }

    // Assemble everything first so that a bad order fails before any solve.
    let mut relaxations = Vec::with_capacity(orders.len());
    for &d in &orders {
        let start = Instant::now();
        let lp = lp_for_order(&spec, d).map_err(PipelineError::at(Stage::Build))?;
        let rel = assemble_sdp_with(&lp, d, cfg.assembly).map_err(PipelineError::at(Stage::Assemble))?;
        relaxations.push((rel, start.elapsed().as_secs_f64()));
    }

    if let Some(dir) = &cfg.export_dir {
        std::fs::create_dir_all(dir).map_err(PipelineError::at(Stage::Export))?;
        for (rel, _) in &relaxations {
            let path = dir.join(format!("{label}_order{}.dat-s", rel.order));
            let file = std::fs::File::create(&path).map_err(PipelineError::at(Stage::Export))?;
            let mut sink = std::io::BufWriter::new(file);
            export_sdpa(&to_standard_form(rel), &mut sink).map_err(PipelineError::at(Stage::Export))?;
        }
    }

    let oracle = match cfg.oracle {
        Some((steps, levels)) => {
            let start = Instant::now();
            let (upper_bound, _) = grid_search_upper_bound(&CostModel::from_spec(&spec), steps, levels)
                .map_err(PipelineError::at(Stage::Oracle))?;
            Some(OracleSummary { steps, levels, upper_bound, seconds: start.elapsed().as_secs_f64() })
        }
        None => None,
    };

    let backend = backends.get(None).map_err(PipelineError::at(Stage::Solve))?;
    let mut results = Vec::with_capacity(relaxations.len());
    for (rel, assemble_seconds) in &relaxations {
        let start = Instant::now();
        let rep = rel.solve(backend, &cfg.settings).map_err(PipelineError::at(Stage::Solve))?;
        let upper_bound = oracle.as_ref().map(|o| o.upper_bound);
        results.push(OrderResult {
            order: rep.order,
            degree: 2 * rep.order,
            lower_bound: rep.lower_bound,
            status: rep.status,
            row_residual_inf: rep.row_residual_inf,
            psd_min_eig: rep.psd_min_eig,
            flat: rep.flat,
            iterations: rep.iterations,
            masses: rep.moments.iter().map(|m| m.mass()).collect(),
            assemble_seconds: *assemble_seconds,
            solve_seconds: start.elapsed().as_secs_f64(),
            upper_bound,
            gap: upper_bound.map(|u| u - rep.lower_bound),
        });
    }
    Ok(RunReport { problem: label, min_order: min, orders: results, oracle })
}

pub fn format_report(rep: &RunReport, fmt: ReportFormat) -> String {
    match fmt {
        ReportFormat::Json => serde_json::to_string_pretty(rep).expect("report serializes"),
        ReportFormat::Table => {
            let mut out = String::new();
            let with_oracle = rep.oracle.is_some();
            let _ = write!(out, "{:>5} {:>6} {:>14} {:>14} {:>5} {:>9}", "order", "degree", "lower_bound", "status", "flat", "time_s");
            if with_oracle {
                let _ = write!(out, " {:>12} {:>12}", "upper_bound", "gap");
            }
            out.push('\n');
            for o in &rep.orders {
                let _ = write!(
                    out,
                    "{:>5} {:>6} {:>14.6} {:>14} {:>5} {:>9.3}",
                    o.order,
                    o.degree,
                    o.lower_bound,
                    o.status.as_str(),
                    o.flat,
                    o.assemble_seconds + o.solve_seconds
                );
                if let (Some(u), Some(g)) = (o.upper_bound, o.gap) {
                    let _ = write!(out, " {u:>12.6} {g:>12.3e}");
                }
                out.push('\n');
            }
            out
        }
    }
}

/// Parses a report previously written with [`ReportFormat::Json`].
pub fn parse_json_report(text: &str) -> Result<RunReport, serde_json::Error> {
    serde_json::from_str(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relaxation::RelaxationError;

    fn sample_report() -> RunReport {
        RunReport {
            problem: "brachistochrone".into(),
            min_order: 1,
            orders: vec![OrderResult {
                order: 1,
                degree: 2,
                lower_bound: 2.0,
                status: SolveStatus::Optimal,
                row_residual_inf: 1e-12,
                psd_min_eig: -1e-10,
                flat: false,
                iterations: 9,
                masses: vec![2.0],
                assemble_seconds: 0.001,
                solve_seconds: 0.02,
                upper_bound: Some(2.6),
                gap: Some(0.6),
            }],
            oracle: Some(OracleSummary { steps: 8, levels: 16, upper_bound: 2.6, seconds: 0.1 }),
        }
    }

    #[test]
    fn order_spec_parsing() {
        assert_eq!("1,2,3".parse(), Ok(OrderSpec::List(vec![1, 2, 3])));
        assert_eq!("4".parse(), Ok(OrderSpec::List(vec![4])));
        assert_eq!("2..4".parse(), Ok(OrderSpec::Range { from: Some(2), to: 4 }));
        assert_eq!("min..3".parse(), Ok(OrderSpec::Range { from: None, to: 3 }));
        assert_eq!("min".parse(), Ok(OrderSpec::Minimum));
        assert_eq!(OrderSpec::Minimum.resolve(4), vec![4]);
        assert!("".parse::<OrderSpec>().is_err());
        assert!("a,b".parse::<OrderSpec>().is_err());
        assert_eq!(OrderSpec::Range { from: None, to: 3 }.resolve(1), vec![1, 2, 3]);
        assert!(OrderSpec::Range { from: Some(5), to: 3 }.resolve(1).is_empty());
    }

    #[test]
    fn empty_table_is_header_only() {
        let rep = RunReport { problem: "x".into(), min_order: 1, orders: vec![], oracle: None };
        let table = format_report(&rep, ReportFormat::Table);
        assert_eq!(table.lines().count(), 1);
        for col in ["order", "degree", "lower_bound", "status", "flat", "time_s"] {
            assert!(table.contains(col));
        }
    }

    #[test]
    fn json_round_trip() {
        let rep = sample_report();
        let text = format_report(&rep, ReportFormat::Json);
        assert_eq!(parse_json_report(&text).unwrap(), rep);
        assert!(text.contains("\"lower_bound\""));
        assert!(text.contains("\"near_optimal\"") || text.contains("\"optimal\""));
    }

    #[test]
    fn table_has_oracle_columns() {
        let table = format_report(&sample_report(), ReportFormat::Table);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].contains("gap"));
        assert!(lines[1].contains("2.000000") && lines[1].contains("optimal"));
    }

    #[test]
    fn order_zero_is_rejected() {
        let err = run(&RunConfig::builtin("brachistochrone", OrderSpec::List(vec![0]))).unwrap_err();
        assert_eq!(err.stage, Stage::Assemble);
        let inner = err.source.downcast_ref::<RelaxationError>().unwrap();
        assert!(matches!(inner, RelaxationError::OrderTooSmall { order: 0, min_order: 1 }));
    }

    #[test]
    fn unknown_builtin_is_a_config_error() {
        let err = run(&RunConfig::builtin("nope", OrderSpec::List(vec![1]))).unwrap_err();
        assert_eq!(err.stage, Stage::Config);
        assert!(err.to_string().starts_with("config stage failed"));
    }

    #[test]
    fn min_orders() {
        assert_eq!(problem_min_order(&ProblemSpec::builtin("lavrentiev").unwrap()).unwrap(), 4);
        assert_eq!(problem_min_order(&ProblemSpec::Brachistochrone).unwrap(), 1);
    }

    #[test]
    fn brachistochrone_order_one_with_export() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            export_dir: Some(dir.path().to_path_buf()),
            oracle: Some((4, 8)),
            ..RunConfig::builtin("brachistochrone", OrderSpec::List(vec![1]))
        };
        let rep = run(&cfg).unwrap();
        assert!(rep.all_succeeded());
        assert!((rep.orders[0].lower_bound - 2.0).abs() < 1e-3);
        assert!(rep.orders[0].gap.unwrap() > 0.0);
        assert!(dir.path().join("brachistochrone_order1.dat-s").exists());
    }
}
