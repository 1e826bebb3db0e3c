use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, ValueEnum};
use gcnmtr::bench::{emit_report, run_suite_with, OutputFormat, RunConfig, SolverChoice};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SolverArg {
    Gcnmtr,
    Lm,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Markdown,
}

/// Runs the continuation solver and the Levenberg-Marquardt baseline over
/// registered test problems and writes a results table.
#[derive(Debug, Parser)]
#[command(name = "gcnmtr-bench", version)]
struct Args {
    /// Comma-separated problem names, or the groups `all` / `core`.
    #[arg(long, default_value = "all", value_delimiter = ',')]
    problems: Vec<String>,
    /// Comma-separated row counts; `n` and `n-1` refer to each `--n` value.
    #[arg(long, default_value = "10,n-1,n", value_delimiter = ',')]
    m: Vec<String>,
    /// Comma-separated variable counts.
    #[arg(long, default_value = "2000", value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, value_enum, default_value_t = SolverArg::Both)]
    solver: SolverArg,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    maxit: Option<usize>,
    #[arg(long)]
    dt0: Option<f64>,
    #[arg(long = "fd-eps")]
    fd_eps: Option<f64>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress per-run progress on standard error.
    #[arg(long, short)]
    quiet: bool,
}

fn parse_m(token: &str, n: usize) -> Result<usize> {
    let token = token.trim();
    match token {
        "n" => Ok(n),
        "n-1" => n.checked_sub(1).context("n-1 is negative"),
        _ => token
            .parse()
            .with_context(|| format!("invalid --m entry `{token}`")),
    }
}

fn dims(ms: &[String], ns: &[usize]) -> Result<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    for &n in ns {
        for token in ms {
            let pair = (parse_m(token, n)?, n);
            if !out.contains(&pair) {
                out.push(pair);
            }
        }
    }
    if out.is_empty() {
        bail!("no dimensions given");
    }
    Ok(out)
}

fn main() -> Result<()> {
    let args = Args::parse();
    let config = RunConfig {
        problems: args.problems.iter().map(|p| p.trim().to_string()).collect(),
        dims: dims(&args.m, &args.n)?,
        solver: match args.solver {
            SolverArg::Gcnmtr => SolverChoice::Gcnmtr,
            SolverArg::Lm => SolverChoice::Lm,
            SolverArg::Both => SolverChoice::Both,
        },
        tol: args.tol,
        maxit: args.maxit,
        dt0: args.dt0,
        fd_eps: args.fd_eps,
        output_format: match args.format {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Markdown => OutputFormat::Markdown,
        },
        output_path: args.out.clone(),
        seed: None,
    };
    let quiet = args.quiet;
    let report = run_suite_with(&config, |row| {
        if !quiet {
            eprintln!(
                "{:<24} m={:<5} n={:<5} {:<6} {:<6} nj={} it={} {:.3}s",
                row.problem,
                row.m,
                row.n,
                row.solver,
                row.status,
                row.nj,
                row.iterations,
                row.time_s
            );
        }
    })?;
    emit_report(&report, config.output_format, config.output_path.as_deref())?;
    Ok(())
}
