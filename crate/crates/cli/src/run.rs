//! Experiment execution, console tables and CSV output.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use symtau::krylov::MinresConfig;
use symtau::pde::{march, run_first_step, Example, FractionalProblem, PrecondKind, TableRow};
use symtau::spectrum::{
    preconditioned_spectrum, symmetrized_spectrum, write_spectrum_csv, SpectrumReport,
};
use symtau::{epsilon_bound, Scheme};

use crate::config::{Command, RunConfig};
use crate::CliError;

pub const EXIT_OK: u8 = 0;
pub const EXIT_NOT_CONVERGED: u8 = 2;
pub const EXIT_SPECTRUM_VIOLATION: u8 = 3;

pub const RESULTS_HEADER: &str =
    "alpha1,alpha2,n,preconditioner,iters,converged,relres,err_inf,wall_seconds";

/// Runs the configured command, prints a console summary to `console` and
/// returns the exit code.
pub fn run<W: Write>(cfg: &RunConfig, console: &mut W) -> Result<u8, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} worker threads: {e}", cfg.jobs)))?;
    match cfg.command {
        Command::Example1 | Command::Example2 => run_tables(cfg, &pool, console),
        Command::Solve => run_solve(cfg, &pool, console),
        Command::Spectrum => run_spectrum(cfg, &pool, console),
        Command::Selftest => run_selftest(cfg, console),
    }
}

// Evaluates cells on the pool; results keep the input order.
fn par_cells<T, R, F>(pool: &rayon::ThreadPool, cells: &[T], f: F) -> Result<Vec<R>, CliError>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R, CliError> + Sync + Send,
{
    pool.install(|| cells.par_iter().map(f).collect())
}

fn example_for(command: Command, scheme: Scheme) -> Example {
    match command {
        Command::Example1 => Example::One,
        Command::Example2 => Example::Two,
        _ => match scheme {
            Scheme::FirstOrder => Example::One,
            Scheme::SecondOrder => Example::Two,
        },
    }
}

fn problem(cfg: &RunConfig, alphas: (f64, f64)) -> Result<FractionalProblem, CliError> {
    Ok(example_for(cfg.command, cfg.scheme).problem_with_scheme(cfg.n1, alphas, cfg.scheme)?)
}

fn run_tables<W: Write>(
    cfg: &RunConfig,
    pool: &rayon::ThreadPool,
    console: &mut W,
) -> Result<u8, CliError> {
    let kinds: Vec<PrecondKind> = match cfg.preconditioner {
        Some(k) => vec![k],
        None => vec![PrecondKind::Tau, PrecondKind::Identity],
    };
    let cells: Vec<((f64, f64), PrecondKind)> = cfg
        .alphas
        .iter()
        .flat_map(|&al| kinds.iter().map(move |&k| (al, k)))
        .collect();
    let rows = par_cells(pool, &cells, |&(al, kind)| {
        Ok(run_first_step(
            &problem(cfg, al)?,
            kind,
            cfg.tol,
            cfg.maxit,
        )?)
    })?;
    finish_rows(cfg, &rows, console)
}

fn run_solve<W: Write>(
    cfg: &RunConfig,
    pool: &rayon::ThreadPool,
    console: &mut W,
) -> Result<u8, CliError> {
    let kind = cfg.preconditioner.unwrap_or(PrecondKind::Tau);
    let rows = par_cells(pool, &cfg.alphas, |&al| solve_one(cfg, al, kind))?;
    finish_rows(cfg, &rows, console)
}

// Marches all steps. The row reports the largest per-step iteration count and
// relative residual, and the error at the final time.
fn solve_one(cfg: &RunConfig, alphas: (f64, f64), kind: PrecondKind) -> Result<TableRow, CliError> {
    let start = Instant::now();
    let p = problem(cfg, alphas)?;
    let pc = match kind {
        PrecondKind::Tau => Some(p.preconditioner()?),
        PrecondKind::Identity => None,
    };
    let mc = MinresConfig {
        tol: cfg.tol,
        maxit: cfg.maxit,
        x0: None,
    };
    let (_, reports) = march(&p, pc.as_ref(), &mc)?;
    Ok(TableRow {
        alphas,
        n1: cfg.n1,
        n: p.grid.total(),
        preconditioner: kind,
        iters: reports.iter().map(|r| r.iters).max().unwrap_or(0),
        converged: reports.iter().all(|r| r.converged),
        relres: reports.iter().map(|r| r.relres).fold(0.0, f64::max),
        true_relres: reports.iter().map(|r| r.true_relres).fold(0.0, f64::max),
        err_inf: reports.last().and_then(|r| r.err_inf),
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

fn finish_rows<W: Write>(
    cfg: &RunConfig,
    rows: &[TableRow],
    console: &mut W,
) -> Result<u8, CliError> {
    write_results_csv(&cfg.output_path, rows)?;
    console_write(console, &format_table(rows))?;
    console_write(console, &format!("wrote {}\n", cfg.output_path.display()))?;
    Ok(if rows.iter().all(|r| r.converged) {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    })
}

fn fmt_err(e: Option<f64>) -> String {
    e.map(|v| format!("{v:.6e}")).unwrap_or_default()
}

/// One CSV line per row in the fixed results column order.
pub fn results_csv(rows: &[TableRow]) -> String {
    let mut s = String::from(RESULTS_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{:.6e},{},{:.6}",
            r.alphas.0,
            r.alphas.1,
            r.n,
            r.preconditioner.name(),
            r.iters,
            r.converged,
            r.relres,
            fmt_err(r.err_inf),
            r.wall_seconds
        );
    }
    s
}

fn write_results_csv(path: &Path, rows: &[TableRow]) -> Result<(), CliError> {
    std::fs::write(path, results_csv(rows))
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn format_table(rows: &[TableRow]) -> String {
    let mut s = format!(
        "{:<12} {:>9} {:>9} {:>6} {:>5} {:>11} {:>11} {:>9}\n",
        "(a1,a2)", "n", "precond", "iters", "conv", "relres", "err_inf", "seconds"
    );
    for r in rows {
        let err = r
            .err_inf
            .map(|v| format!("{v:.3e}"))
            .unwrap_or_else(|| "-".into());
        let _ = writeln!(
            s,
            "{:<12} {:>9} {:>9} {:>6} {:>5} {:>11.3e} {:>11} {:>9.3}",
            format!("({},{})", r.alphas.0, r.alphas.1),
            r.n,
            r.preconditioner.name(),
            r.iters,
            if r.converged { "yes" } else { "no" },
            r.relres,
            err,
            r.wall_seconds
        );
    }
    s
}

/// Output path for one order pair: the configured path itself when there is a
/// single pair, otherwise the stem with an `_a1_a2` suffix.
pub fn spectrum_path(base: &Path, alphas: (f64, f64), many: bool) -> PathBuf {
    if !many {
        return base.to_path_buf();
    }
    let stem = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "spectrum".into());
    let name = match base.extension() {
        Some(ext) => format!("{stem}_{}_{}.{}", alphas.0, alphas.1, ext.to_string_lossy()),
        None => format!("{stem}_{}_{}", alphas.0, alphas.1),
    };
    base.with_file_name(name)
}

fn spectrum_one(cfg: &RunConfig, alphas: (f64, f64)) -> Result<SpectrumReport, CliError> {
    let p = problem(cfg, alphas)?;
    let a = p.operator()?;
    match cfg.preconditioner.unwrap_or(PrecondKind::Tau) {
        PrecondKind::Tau => Ok(preconditioned_spectrum(
            &a,
            &p.preconditioner()?,
            epsilon_bound(&p.params)?,
        )?),
        PrecondKind::Identity => Ok(symmetrized_spectrum(&a)?),
    }
}

fn run_spectrum<W: Write>(
    cfg: &RunConfig,
    pool: &rayon::ThreadPool,
    console: &mut W,
) -> Result<u8, CliError> {
    let reports = par_cells(pool, &cfg.alphas, |&al| spectrum_one(cfg, al))?;
    let many = cfg.alphas.len() > 1;
    let mut s = format!(
        "{:<12} {:>6} {:>10} {:>10} {:>10} {:>10}  {}\n",
        "(a1,a2)", "n", "eps*", "min|ev|", "max|ev|", "violations", "file"
    );
    for (&al, r) in cfg.alphas.iter().zip(&reports) {
        let path = spectrum_path(&cfg.output_path, al, many);
        let file =
            File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        write_spectrum_csv(r, BufWriter::new(file))?;
        let _ = writeln!(
            s,
            "{:<12} {:>6} {:>10.4} {:>10.4} {:>10.4} {:>10}  {}",
            format!("({},{})", al.0, al.1),
            r.n,
            r.epsilon_star,
            r.min_abs(),
            r.max_abs(),
            r.violations,
            path.display()
        );
    }
    console_write(console, &s)?;
    Ok(if reports.iter().all(|r| r.violations == 0) {
        EXIT_OK
    } else {
        EXIT_SPECTRUM_VIOLATION
    })
}

fn run_selftest<W: Write>(cfg: &RunConfig, console: &mut W) -> Result<u8, CliError> {
    let outcomes = symtau::selftest::run_all(cfg.seed);
    let mut s = String::new();
    for o in &outcomes {
        let _ = writeln!(
            s,
            "{} {}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.detail
        );
    }
    console_write(console, &s)?;
    Ok(if outcomes.iter().all(|o| o.passed) {
        EXIT_OK
    } else {
        1
    })
}

fn console_write<W: Write>(w: &mut W, s: &str) -> Result<(), CliError> {
    w.write_all(s.as_bytes())
        .map_err(|e| CliError::Io(format!("stdout: {e}")))
}
