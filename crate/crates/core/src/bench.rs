//! Benchmark suite runner and report writers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use thiserror::Error;

use crate::lm::{lm_solve, LMConfig};
use crate::outcome::{trace_to_table, Method, TableRow};
use crate::registry;
use crate::solver::{solve, SolverConfig};

/// Column names of the CSV report, in order.
pub const CSV_HEADER: [&str; 9] = [
    "problem",
    "m",
    "n",
    "solver",
    "nj",
    "iterations",
    "time_s",
    "final_res_inf",
    "status",
];

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("no {missing} row for {problem} at m = {m}, n = {n}")]
    MissingPair {
        problem: String,
        m: usize,
        n: usize,
        missing: &'static str,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    Gcnmtr,
    Lm,
    Both,
}

impl SolverChoice {
    pub fn methods(self) -> &'static [Method] {
        match self {
            SolverChoice::Gcnmtr => &[Method::Gcnmtr],
            SolverChoice::Lm => &[Method::LevenbergMarquardt],
            SolverChoice::Both => &[Method::Gcnmtr, Method::LevenbergMarquardt],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Markdown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Problem names; `all` and `core` expand to registry groups.
    pub problems: Vec<String>,
    /// `(m, n)` pairs.
    pub dims: Vec<(usize, usize)>,
    pub solver: SolverChoice,
    pub tol: Option<f64>,
    pub maxit: Option<usize>,
    pub dt0: Option<f64>,
    pub fd_eps: Option<f64>,
    pub output_format: OutputFormat,
    pub output_path: Option<PathBuf>,
    /// Unused: every run is deterministic.
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn new(problems: &[&str], dims: &[(usize, usize)], solver: SolverChoice) -> Self {
        Self {
            problems: problems.iter().map(|p| p.to_string()).collect(),
            dims: dims.to_vec(),
            solver,
            tol: None,
            maxit: None,
            dt0: None,
            fd_eps: None,
            output_format: OutputFormat::Csv,
            output_path: None,
            seed: None,
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        let mut c = SolverConfig::default();
        if let Some(v) = self.tol {
            c.tol = v;
        }
        if let Some(v) = self.maxit {
            c.maxit = v;
        }
        if let Some(v) = self.dt0 {
            c.dt0 = v;
        }
        if let Some(v) = self.fd_eps {
            c.fd_eps = v;
        }
        c
    }

    pub fn lm_config(&self) -> LMConfig {
        let mut c = LMConfig::default();
        if let Some(v) = self.tol {
            c.tol = v;
        }
        if let Some(v) = self.maxit {
            c.maxit = v;
        }
        if let Some(v) = self.fd_eps {
            c.fd_eps = v;
        }
        c
    }

    /// Problem names after expanding `all` and `core`, without duplicates.
    pub fn resolved_problems(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for p in &self.problems {
            let group = match p.as_str() {
                "all" => registry::names(),
                "core" => registry::core_names(),
                name => vec![name],
            };
            for name in group {
                if !out.iter().any(|o| o == name) {
                    out.push(name.to_string());
                }
            }
        }
        out
    }

    /// Checks everything that can be checked before any run starts.
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.dims.is_empty() {
            return Err(BenchError::Config("no dimensions given".into()));
        }
        let problems = self.resolved_problems();
        if problems.is_empty() {
            return Err(BenchError::Config("no problems given".into()));
        }
        for &(m, n) in &self.dims {
            if m == 0 || m > n {
                return Err(BenchError::Config(format!(
                    "need 1 <= m <= n, got m = {m}, n = {n}"
                )));
            }
        }
        for name in &problems {
            for &(m, n) in &self.dims {
                registry::validate_dims(name, m, n)
                    .map_err(|e| BenchError::Config(e.to_string()))?;
            }
        }
        self.solver_config()
            .validate()
            .map_err(|e| BenchError::Config(e.to_string()))?;
        self.lm_config()
            .validate()
            .map_err(|e| BenchError::Config(e.to_string()))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportMetadata {
    pub config: String,
    /// Seconds since the Unix epoch when the suite started.
    pub timestamp: u64,
    pub host: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<TableRow>,
    pub metadata: ReportMetadata,
}

fn host_note() -> String {
    let threads = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    format!(
        "{}-{}, {} hardware threads",
        std::env::consts::OS,
        std::env::consts::ARCH,
        threads
    )
}

/// Runs one solver on one registry problem. Failures to build the problem or
/// start the solver become `error` rows.
pub fn run_one(name: &str, m: usize, n: usize, method: Method, config: &RunConfig) -> TableRow {
    let problem = match registry::registry_lookup(name, m, n) {
        Ok(p) => p,
        Err(_) => return TableRow::error(name, m, n, method),
    };
    let outcome = match method {
        Method::Gcnmtr => solve(&problem, None, &config.solver_config()),
        Method::LevenbergMarquardt => lm_solve(&problem, None, &config.lm_config()),
    };
    match outcome {
        Ok(o) => trace_to_table(&o),
        Err(_) => TableRow::error(name, m, n, method),
    }
}

/// Runs every (problem, dims, solver) triple in order.
pub fn run_suite(config: &RunConfig) -> Result<BenchReport, BenchError> {
    run_suite_with(config, |_| {})
}

/// As [`run_suite`], calling `progress` after each row.
pub fn run_suite_with(
    config: &RunConfig,
    mut progress: impl FnMut(&TableRow),
) -> Result<BenchReport, BenchError> {
    config.validate()?;
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut rows = Vec::new();
    for name in config.resolved_problems() {
        for &(m, n) in &config.dims {
            for &method in config.solver.methods() {
                let row = run_one(&name, m, n, method, config);
                progress(&row);
                rows.push(row);
            }
        }
    }
    Ok(BenchReport {
        rows,
        metadata: ReportMetadata {
            config: format!("{config:?}"),
            timestamp,
            host: host_note(),
        },
    })
}

fn row_cells(row: &TableRow) -> [String; 9] {
    [
        row.problem.clone(),
        row.m.to_string(),
        row.n.to_string(),
        row.solver.clone(),
        row.nj.to_string(),
        row.iterations.to_string(),
        format!("{:.4}", row.time_s),
        format!("{:.4e}", row.final_res_inf),
        row.status.clone(),
    ]
}

pub fn to_csv(report: &BenchReport) -> Result<String, BenchError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let map = |e: csv::Error| BenchError::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(map)?;
    for row in &report.rows {
        w.write_record(row_cells(row)).map_err(map)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| BenchError::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn to_markdown(report: &BenchReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "| {} |", CSV_HEADER.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(CSV_HEADER.len()));
    for row in &report.rows {
        let _ = writeln!(out, "| {} |", row_cells(row).join(" | "));
    }
    out
}

pub fn render(report: &BenchReport, format: OutputFormat) -> Result<String, BenchError> {
    match format {
        OutputFormat::Csv => to_csv(report),
        OutputFormat::Markdown => Ok(to_markdown(report)),
    }
}

/// Writes the report to `path`, or to standard output when `None`.
pub fn emit_report(
    report: &BenchReport,
    format: OutputFormat,
    path: Option<&Path>,
) -> Result<(), BenchError> {
    if report.rows.is_empty() {
        return Err(BenchError::Config("report has no rows".into()));
    }
    let text = render(report, format)?;
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRatio {
    pub problem: String,
    pub m: usize,
    pub n: usize,
    /// LM time over GCNMTr time.
    pub ratio: f64,
    pub both_converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingSummary {
    pub ratios: Vec<TimingRatio>,
    pub min: f64,
    pub max: f64,
}

/// LM/GCNMTr wall-time ratio for every problem and dimension in the report.
pub fn timing_summary(report: &BenchReport) -> Result<TimingSummary, BenchError> {
    let mut pairs: BTreeMap<(String, usize, usize), (Option<&TableRow>, Option<&TableRow>)> =
        BTreeMap::new();
    let mut order = Vec::new();
    for row in &report.rows {
        let key = (row.problem.clone(), row.m, row.n);
        let entry = pairs.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            (None, None)
        });
        if row.solver == Method::Gcnmtr.label() {
            entry.0 = Some(row);
        } else if row.solver == Method::LevenbergMarquardt.label() {
            entry.1 = Some(row);
        }
    }
    let mut ratios = Vec::new();
    for key in order {
        let (g, l) = pairs[&key];
        let (problem, m, n) = key;
        let missing = |missing| BenchError::MissingPair {
            problem: problem.clone(),
            m,
            n,
            missing,
        };
        let g = g.ok_or_else(|| missing(Method::Gcnmtr.label()))?;
        let l = l.ok_or_else(|| missing(Method::LevenbergMarquardt.label()))?;
        let ratio = if l.time_s == g.time_s {
            1.0
        } else {
            l.time_s / g.time_s
        };
        ratios.push(TimingRatio {
            problem,
            m,
            n,
            ratio,
            both_converged: g.status == "ok" && l.status == "ok",
        });
    }
    let min = ratios.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let max = ratios
        .iter()
        .map(|r| r.ratio)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(TimingSummary { ratios, min, max })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(problem: &str, solver: Method, time_s: f64, status: &str) -> TableRow {
        TableRow {
            problem: problem.into(),
            m: 10,
            n: 2000,
            solver: solver.label().into(),
            nj: 5,
            iterations: 24,
            time_s,
            final_res_inf: 4.1377e-7,
            status: status.into(),
        }
    }

    fn report(rows: Vec<TableRow>) -> BenchReport {
        BenchReport {
            rows,
            metadata: ReportMetadata {
                config: String::new(),
                timestamp: 0,
                host: String::new(),
            },
        }
    }

    #[test]
    fn one_row_csv_has_two_lines() {
        let csv = to_csv(&report(vec![row("rosenbrock", Method::Gcnmtr, 0.33, "ok")])).unwrap();
        assert_eq!(
            csv,
            "problem,m,n,solver,nj,iterations,time_s,final_res_inf,status\n\
             rosenbrock,10,2000,gcnmtr,5,24,0.3300,4.1377e-7,ok\n"
        );
    }

    #[test]
    fn markdown_has_same_cells() {
        let md = to_markdown(&report(vec![row("trid", Method::Gcnmtr, 0.5, "failed")]));
        let lines: Vec<&str> = md.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(
            lines[2],
            "| trid | 10 | 2000 | gcnmtr | 5 | 24 | 0.5000 | 4.1377e-7 | failed |"
        );
    }

    #[test]
    fn timing_ratios() {
        let s = timing_summary(&report(vec![
            row("rosenbrock", Method::Gcnmtr, 0.33, "ok"),
            row("rosenbrock", Method::LevenbergMarquardt, 16.79, "ok"),
            row("trid", Method::Gcnmtr, 2.0, "ok"),
            row("trid", Method::LevenbergMarquardt, 2.0, "failed"),
        ]))
        .unwrap();
        assert!((s.ratios[0].ratio - 16.79 / 0.33).abs() < 1e-12);
        assert_eq!(s.ratios[1].ratio, 1.0);
        assert!(!s.ratios[1].both_converged);
        assert_eq!((s.min, s.max), (1.0, 16.79 / 0.33));
    }

    #[test]
    fn missing_lm_row_is_reported() {
        let err =
            timing_summary(&report(vec![row("trid", Method::Gcnmtr, 1.0, "ok")])).unwrap_err();
        assert!(matches!(err, BenchError::MissingPair { missing: "lm", .. }));
    }

    #[test]
    fn config_errors_before_running() {
        let empty = RunConfig::new(&["trid"], &[], SolverChoice::Gcnmtr);
        assert!(matches!(run_suite(&empty), Err(BenchError::Config(_))));
        let unknown = RunConfig::new(&["nope"], &[(2, 4)], SolverChoice::Gcnmtr);
        assert!(matches!(run_suite(&unknown), Err(BenchError::Config(_))));
        let tall = RunConfig::new(&["trid"], &[(5, 4)], SolverChoice::Gcnmtr);
        assert!(matches!(run_suite(&tall), Err(BenchError::Config(_))));
    }

    #[test]
    fn groups_expand_without_duplicates() {
        let c = RunConfig::new(&["trid", "core"], &[(2, 4)], SolverChoice::Both);
        let names = c.resolved_problems();
        assert_eq!(names[0], "trid");
        assert_eq!(names.len(), registry::core_names().len());
    }

    #[test]
    fn small_suite_runs_both_solvers() {
        let c = RunConfig::new(&["trid"], &[(3, 6)], SolverChoice::Both);
        let r = run_suite(&c).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert_eq!(r.rows[0].solver, "gcnmtr");
        assert_eq!(r.rows[1].solver, "lm");
        assert!(r.rows.iter().all(|row| row.status == "ok"));
    }
}
