//! Command-line front end for the bound library.
//!
//! Subcommands: `solve` one instance with a chosen bound (JSON summary on
//! standard output, optional iteration trace CSV), `bench` a directory of
//! instances into a CSV report, `gen` random instances, and `check` an
//! instance file's invariants. Exit codes: `0` success, `2` bad input data
//! (I/O, parsing, validation, violated assumptions, bad arguments), `3`
//! numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nalgebra::DMatrix;
use serde::Serialize;

use cdt_bounds::bounds::{BoundKind, BoundOptions, Pipeline, TraceRecord};
use cdt_bounds::io::{self, InstanceMeta};
use cdt_bounds::{CdtError, Result};

#[derive(Parser)]
#[command(
    name = "cdt",
    version,
    about = "Lower and upper bounds for the two-constraint trust-region problem (unit ball + ellipsoid)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance with a chosen bound; prints a JSON summary.
    Solve {
        /// Instance file (JSON).
        #[arg(long)]
        instance: PathBuf,
        /// Bound stage: dual, onecut, oneopt, twocut, or twoopt.
        #[arg(long)]
        bound: BoundKind,
        /// Bisection tolerance on the penalty weight.
        #[arg(long)]
        eps: Option<f64>,
        /// Improvement tolerance for the anchor-optimizing stages.
        #[arg(long)]
        tol: Option<f64>,
        /// Write the driver's iteration trace to this CSV file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run the bound pipeline over every instance in a directory.
    Bench {
        /// Directory containing instance .json files.
        #[arg(long)]
        dir: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Bounds to run (comma-separated).
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "dual,onecut,oneopt,twocut,twoopt"
        )]
        bound: Vec<BoundKind>,
        /// Worker threads (0 = automatic).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Bisection tolerance on the penalty weight.
        #[arg(long)]
        eps: Option<f64>,
        /// Improvement tolerance for the anchor-optimizing stages.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Generate random instances.
    Gen {
        /// Dimension (at least 2).
        #[arg(long)]
        n: usize,
        /// Number of instances.
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// Base seed; instance i uses seed + i.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate an instance file and print its key quantities.
    Check {
        /// Instance file (JSON).
        #[arg(long)]
        instance: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Solve {
            instance,
            bound,
            eps,
            tol,
            trace,
        } => cmd_solve(&instance, bound, eps, tol, trace.as_deref()),
        Command::Bench {
            dir,
            out,
            bound,
            jobs,
            eps,
            tol,
        } => cmd_bench(&dir, &out, &bound, jobs, eps, tol),
        Command::Gen { n, count, seed, out } => cmd_gen(n, count, seed, &out),
        Command::Check { instance } => cmd_check(&instance),
    }
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    bound: &'a str,
    lb: f64,
    ub: f64,
    rel_gap: f64,
    lambda: f64,
    iterations: usize,
    time_ms: f64,
    solved: bool,
}

fn cmd_solve(
    instance: &Path,
    bound: BoundKind,
    eps: Option<f64>,
    tol: Option<f64>,
    trace: Option<&Path>,
) -> Result<()> {
    let inst = io::read_instance(instance)?;
    let opts = BoundOptions {
        eps,
        tol,
        trace: trace.is_some(),
    };
    let mut pipe = Pipeline::new(&inst, opts);
    let summary = pipe.summary(bound)?;
    if let Some(path) = trace {
        write_trace(path, summary.report.trace.as_deref().unwrap_or(&[]))?;
    }
    let out = SolveOutput {
        bound: summary.report.bound.as_str(),
        lb: summary.report.lb,
        ub: summary.ub,
        rel_gap: summary.gap.rel_gap,
        lambda: summary.report.final_lambda,
        iterations: summary.report.iterations,
        time_ms: summary.total_seconds * 1e3,
        solved: summary.gap.solved,
    };
    let json = serde_json::to_string(&out)
        .map_err(|e| CdtError::Numeric(format!("result serialization failed: {e}")))?;
    println!("{json}");
    Ok(())
}

fn write_trace(path: &Path, rows: &[TraceRecord]) -> Result<()> {
    let mut text = String::from("iteration,lambda,lb,anchor\n");
    for row in rows {
        let lb = row.lb.map(|v| format!("{v:.11e}")).unwrap_or_default();
        let anchor = row
            .anchor
            .as_ref()
            .map(|a| {
                a.iter()
                    .map(|v| format!("{v:.11e}"))
                    .collect::<Vec<_>>()
                    .join(";")
            })
            .unwrap_or_default();
        text.push_str(&format!(
            "{},{:.11e},{},{}\n",
            row.iteration, row.lambda, lb, anchor
        ));
    }
    std::fs::write(path, text).map_err(|e| CdtError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn cmd_bench(
    dir: &Path,
    out: &Path,
    bounds: &[BoundKind],
    jobs: usize,
    eps: Option<f64>,
    tol: Option<f64>,
) -> Result<()> {
    let entries = std::fs::read_dir(dir).map_err(|e| CdtError::Io {
        path: dir.display().to_string(),
        source: e,
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CdtError::InvalidParameter(format!(
            "no .json instance files in {}",
            dir.display()
        )));
    }

    let mut instances = Vec::new();
    let mut first_read_error = None;
    for path in &paths {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        match io::read_instance(path) {
            Ok(inst) => instances.push((name, inst)),
            Err(e) => {
                eprintln!("skipping {}: {e}", path.display());
                if first_read_error.is_none() {
                    first_read_error = Some(e);
                }
            }
        }
    }
    if instances.is_empty() {
        return Err(first_read_error.expect("at least one path failed"));
    }

    let opts = BoundOptions {
        eps,
        tol,
        trace: false,
    };
    let report = io::benchmark_run(&instances, bounds, &opts, jobs)?;
    for (name, message) in &report.failures {
        eprintln!("instance {name} failed: {message}");
    }
    if report.records.is_empty() {
        return Err(CdtError::Numeric(
            "every instance failed; no records to report".into(),
        ));
    }
    io::write_benchmark_csv(&report, out)?;
    println!(
        "wrote {} records for {} instances to {}",
        report.records.len(),
        instances.len() - report.failures.len(),
        out.display()
    );
    Ok(())
}

fn cmd_gen(n: usize, count: usize, seed: u64, out: &Path) -> Result<()> {
    if count == 0 {
        return Err(CdtError::InvalidParameter(
            "count must be at least 1".into(),
        ));
    }
    std::fs::create_dir_all(out).map_err(|e| CdtError::Io {
        path: out.display().to_string(),
        source: e,
    })?;
    let mut first_error = None;
    for i in 0..count {
        let s = seed.wrapping_add(i as u64);
        let name = format!("cdt_n{n}_s{s}");
        match io::generate_instance(n, s) {
            Ok(inst) => {
                let meta = InstanceMeta {
                    name: Some(name.clone()),
                    seed: Some(s),
                    optimal_value: None,
                };
                let path = out.join(format!("{name}.json"));
                io::write_instance_with_meta(&inst, Some(meta), &path)?;
                println!("{}", path.display());
            }
            Err(e) => {
                eprintln!("generation failed for {name}: {e}");
                if first_error.is_none() {
                    first_error = Some(e);
                }
            }
        }
    }
    match first_error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn eig_range(rows: &[Vec<f64>], n: usize) -> Option<(f64, f64)> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) || n == 0 {
        return None;
    }
    let m = DMatrix::from_row_iterator(n, n, rows.iter().flatten().copied());
    let sym = (&m + m.transpose()) * 0.5;
    let eigs = sym.symmetric_eigen().eigenvalues;
    let min = eigs.iter().fold(f64::INFINITY, |a, v| a.min(*v));
    let max = eigs.iter().fold(f64::NEG_INFINITY, |a, v| a.max(*v));
    Some((min, max))
}

fn cmd_check(instance: &Path) -> Result<()> {
    let raw = io::read_raw(instance)?;
    println!("n: {}", raw.n);
    if let Some((lo, hi)) = eig_range(&raw.q_mat, raw.n) {
        println!("Q eigenvalues: min {lo}, max {hi}");
    }
    if let Some((lo, hi)) = eig_range(&raw.a_mat, raw.n) {
        println!("A eigenvalues: min {lo}, max {hi}");
    }
    println!("a0: {}", raw.a0);
    match raw.to_instance() {
        Ok(inst) => {
            let check = inst.check_interior_assumption()?;
            println!("ell_a: {}", check.ell_a);
            println!("lambda_hat: {}", inst.lambda_hat()?);
            println!("interior assumption: satisfied (ell_a < a0)");
            println!("verdict: pass");
            Ok(())
        }
        Err(e) => {
            if let CdtError::InteriorAssumption { ell_a, .. } = &e {
                println!("ell_a: {ell_a}");
                println!("interior assumption: violated (ell_a >= a0)");
            }
            println!("verdict: fail ({e})");
            Err(e)
        }
    }
}
