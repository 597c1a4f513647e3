//! Command-line and config-file parsing into a validated [`RunConfig`].

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};
use symtau::pde::{PrecondKind, TABLE_ALPHAS};
use symtau::Scheme;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// First-step table for the unit-square benchmark (first-order scheme).
    Example1,
    /// First-step table for the benchmark with a known solution (second-order scheme).
    Example2,
    /// Full time march for each order pair.
    Solve,
    /// Dense preconditioned spectrum for each order pair.
    Spectrum,
    /// Built-in oracle checks.
    Selftest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Example1 => "example1",
            Command::Example2 => "example2",
            Command::Solve => "solve",
            Command::Spectrum => "spectrum",
            Command::Selftest => "selftest",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    First,
    Second,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::First => Scheme::FirstOrder,
            SchemeArg::Second => Scheme::SecondOrder,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PrecondArg {
    Tau,
    Identity,
}

impl From<PrecondArg> for PrecondKind {
    fn from(p: PrecondArg) -> Self {
        match p {
            PrecondArg::Tau => PrecondKind::Tau,
            PrecondArg::Identity => PrecondKind::Identity,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "symtau",
    version,
    about = "Tau-preconditioned MINRES for space-fractional diffusion"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// First-step table for the unit-square benchmark (first-order scheme).
    Example1(Flags),
    /// First-step table for the benchmark with a known solution (second-order scheme).
    Example2(Flags),
    /// Full time march for each order pair.
    Solve(Flags),
    /// Dense preconditioned spectrum for each order pair.
    Spectrum(Flags),
    /// Built-in oracle checks.
    Selftest(Flags),
}

/// Every flag is optional so that unset flags fall back to the config file.
#[derive(Debug, Default, Args)]
struct Flags {
    /// Interior points per axis.
    #[arg(long)]
    n1: Option<usize>,
    /// Order pairs such as "1.5,1.5;1.9,1.1", or "all" for the nine table pairs.
    #[arg(long)]
    alphas: Option<String>,
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    /// Preconditioner; the example tables run both when unset.
    #[arg(long, value_enum)]
    precond: Option<PrecondArg>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    maxit: Option<usize>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for independent cells.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Flat JSON object whose keys match the flag names.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub n1: usize,
    pub alphas: Vec<(f64, f64)>,
    pub scheme: Scheme,
    /// `None` runs both preconditioners.
    pub preconditioner: Option<PrecondKind>,
    pub tol: f64,
    pub maxit: usize,
    pub output_path: PathBuf,
    pub jobs: usize,
    pub seed: u64,
}

/// Parses `argv` (including the program name). Help and version requests
/// surface as [`CliError::Display`].
pub fn parse_config<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            CliError::Display(e.to_string())
        }
        _ => CliError::Usage(e.to_string()),
    })?;
    let (command, flags) = match cli.command {
        Sub::Example1(f) => (Command::Example1, f),
        Sub::Example2(f) => (Command::Example2, f),
        Sub::Solve(f) => (Command::Solve, f),
        Sub::Spectrum(f) => (Command::Spectrum, f),
        Sub::Selftest(f) => (Command::Selftest, f),
    };
    let file = match &flags.config {
        Some(path) => read_config_file(path)?,
        None => Flags::default(),
    };
    merge(command, flags, file)
}

fn merge(command: Command, flags: Flags, file: Flags) -> Result<RunConfig, CliError> {
    let n1 = flags
        .n1
        .or(file.n1)
        .unwrap_or(if command == Command::Spectrum { 15 } else { 31 });
    let alphas = match flags.alphas.or(file.alphas) {
        Some(s) => parse_alphas(&s)?,
        None => TABLE_ALPHAS.to_vec(),
    };
    let default_scheme = match command {
        Command::Example1 => SchemeArg::First,
        _ => SchemeArg::Second,
    };
    let scheme = flags
        .scheme
        .or(file.scheme)
        .unwrap_or(default_scheme)
        .into();
    let preconditioner = flags.precond.or(file.precond).map(PrecondKind::from);
    let preconditioner = match command {
        Command::Solve | Command::Spectrum => Some(preconditioner.unwrap_or(PrecondKind::Tau)),
        _ => preconditioner,
    };
    let tol = flags.tol.or(file.tol).unwrap_or(1e-8);
    let maxit = flags.maxit.or(file.maxit).unwrap_or(100);
    let default_out = if command == Command::Spectrum {
        "spectrum.csv"
    } else {
        "results.csv"
    };
    let output_path = flags
        .out
        .or(file.out)
        .unwrap_or_else(|| PathBuf::from(default_out));
    let jobs = flags.jobs.or(file.jobs).unwrap_or(1);
    let seed = flags.seed.or(file.seed).unwrap_or(0);

    if n1 == 0 {
        return Err(CliError::Usage("--n1 must be at least 1".into()));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(CliError::Usage(format!(
            "--tol must be positive, got {tol}"
        )));
    }
    if maxit == 0 {
        return Err(CliError::Usage("--maxit must be at least 1".into()));
    }
    if jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    if command == Command::Spectrum && n1 * n1 > symtau::toeplitz::DENSE_CAP {
        return Err(CliError::Usage(format!(
            "spectrum needs n1² ≤ {}, got n1 = {n1}",
            symtau::toeplitz::DENSE_CAP
        )));
    }
    Ok(RunConfig {
        command,
        n1,
        alphas,
        scheme,
        preconditioner,
        tol,
        maxit,
        output_path,
        jobs,
        seed,
    })
}

/// Parses `"a1,a2;a1,a2"` or `"all"`.
pub fn parse_alphas(s: &str) -> Result<Vec<(f64, f64)>, CliError> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(TABLE_ALPHAS.to_vec());
    }
    let bad = || {
        CliError::Usage(format!(
            "malformed --alphas {s:?}; expected pairs like 1.5,1.5;1.9,1.1"
        ))
    };
    let mut out = Vec::new();
    for pair in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let parts: Vec<&str> = pair.split(',').map(str::trim).collect();
        if parts.len() != 2 {
            return Err(bad());
        }
        let a: f64 = parts[0].parse().map_err(|_| bad())?;
        let b: f64 = parts[1].parse().map_err(|_| bad())?;
        for v in [a, b] {
            if !(v > 1.0 && v < 2.0) {
                return Err(CliError::Usage(format!(
                    "fractional order {v} outside (1, 2)"
                )));
            }
        }
        out.push((a, b));
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

fn read_config_file(path: &Path) -> Result<Flags, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
    let Value::Object(map) = value else {
        return Err(CliError::Usage(format!(
            "config {}: expected a JSON object",
            path.display()
        )));
    };
    flags_from_map(&map)
}

fn flags_from_map(map: &Map<String, Value>) -> Result<Flags, CliError> {
    let mut f = Flags::default();
    for (key, v) in map {
        let bad = |what: &str| CliError::Usage(format!("config key {key:?}: expected {what}"));
        match key.as_str() {
            "n1" => f.n1 = Some(v.as_u64().ok_or_else(|| bad("a positive integer"))? as usize),
            "alphas" => {
                f.alphas = Some(match v {
                    Value::String(s) => s.clone(),
                    Value::Array(items) => {
                        let mut parts = Vec::new();
                        for item in items {
                            let pair = item
                                .as_array()
                                .filter(|p| p.len() == 2)
                                .ok_or_else(|| bad("[a1, a2] pairs"))?;
                            let a = pair[0].as_f64().ok_or_else(|| bad("numeric orders"))?;
                            let b = pair[1].as_f64().ok_or_else(|| bad("numeric orders"))?;
                            parts.push(format!("{a},{b}"));
                        }
                        parts.join(";")
                    }
                    _ => return Err(bad("a string or an array of pairs")),
                })
            }
            "scheme" => {
                f.scheme = Some(
                    SchemeArg::from_str(
                        v.as_str().ok_or_else(|| bad("\"first\" or \"second\""))?,
                        true,
                    )
                    .map_err(|_| bad("\"first\" or \"second\""))?,
                )
            }
            "precond" => {
                f.precond = Some(
                    PrecondArg::from_str(
                        v.as_str().ok_or_else(|| bad("\"tau\" or \"identity\""))?,
                        true,
                    )
                    .map_err(|_| bad("\"tau\" or \"identity\""))?,
                )
            }
            "tol" => f.tol = Some(v.as_f64().ok_or_else(|| bad("a number"))?),
            "maxit" => {
                f.maxit = Some(v.as_u64().ok_or_else(|| bad("a positive integer"))? as usize)
            }
            "out" => {
                f.out = Some(PathBuf::from(
                    v.as_str().ok_or_else(|| bad("a path string"))?,
                ))
            }
            "jobs" => f.jobs = Some(v.as_u64().ok_or_else(|| bad("a positive integer"))? as usize),
            "seed" => f.seed = Some(v.as_u64().ok_or_else(|| bad("a nonnegative integer"))?),
            _ => return Err(CliError::Usage(format!("unknown config key {key:?}"))),
        }
    }
    Ok(f)
}
