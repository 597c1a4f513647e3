//! Command-line front end for the symtau solver.

pub mod config;
pub mod run;

use std::io::Write;

use thiserror::Error;

pub use config::{parse_config, Command, RunConfig};
pub use run::run;

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_IO: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    /// Help or version text; not a failure.
    #[error("{0}")]
    Display(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Compute(#[from] symtau::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Display(_) => 0,
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) | CliError::Compute(symtau::Error::Io(_)) => EXIT_IO,
            CliError::Compute(_) => EXIT_USAGE,
        }
    }
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn main_with<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let result = parse_config(argv).and_then(|cfg| run(&cfg, &mut out));
    match result {
        Ok(code) => code,
        Err(CliError::Display(text)) => {
            let _ = out.write_all(text.as_bytes());
            0
        }
        Err(e) => {
            eprintln!("symtau: {e}");
            e.exit_code()
        }
    }
}
