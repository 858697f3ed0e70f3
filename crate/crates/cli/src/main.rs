//! `mti`: run missing-tag identification protocols, sweep parameter grids,
//! print reference bound tables and self-test the numerics.
//!
//! Exit codes: 0 success, 1 runtime or self-test failure, 2 usage error.

mod commands;
mod settings;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use settings::{CommonArgs, Defaults, Format, Settings};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "mti", version, about, arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run trials of one parameter cell
    Run(CommonArgs),
    /// Run trials over the cartesian grid of the given lists
    Sweep(CommonArgs),
    /// Print lower-bound and expected-time reference curves
    Bounds(CommonArgs),
    /// Check decoding, quantiles and exhaustive-mode exactness
    Selftest(CommonArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Help and version requests are not errors.
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("mti: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn dispatch(command: Command) -> Result<u8, CliError> {
    let (args, defaults) = match &command {
        Command::Run(a) | Command::Sweep(a) => (
            a,
            Defaults {
                n: "50000",
                trials: "100",
                format: Format::Csv,
            },
        ),
        Command::Bounds(a) => (
            a,
            Defaults {
                n: "50000",
                trials: "1",
                format: Format::Pretty,
            },
        ),
        Command::Selftest(a) => (
            a,
            Defaults {
                n: "50000",
                trials: "1",
                format: Format::Pretty,
            },
        ),
    };
    let settings = Settings::resolve(args, &defaults)?;
    for note in &settings.out_of_range {
        eprintln!("mti: warning: {note}; bounds do not apply");
    }
    let (text, code) = match command {
        Command::Run(_) => (commands::run(&settings)?, 0),
        Command::Sweep(_) => (commands::sweep_cmd(&settings)?, 0),
        Command::Bounds(_) => (commands::bounds(&settings)?, 0),
        Command::Selftest(_) => {
            let (text, ok) = commands::selftest(&settings);
            (text, if ok { 0 } else { 1 })
        }
    };
    emit(&settings, &text)?;
    Ok(code)
}

fn emit(settings: &Settings, text: &str) -> Result<(), CliError> {
    match &settings.out {
        Some(path) => {
            std::fs::write(path, text)
                .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
            eprintln!("mti: wrote {}", path.display());
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Runtime(format!("cannot write output: {e}")))?;
        }
    }
    Ok(())
}
