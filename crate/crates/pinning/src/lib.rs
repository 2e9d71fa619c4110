//! File formats, report rendering and the command-line front end for
//! [`pinning_core`].
//!
//! [`run`] is the whole program: it parses arguments, applies a config
//! file, executes one command and writes its report. Exit codes are listed
//! in [`error::exit`].

pub mod cli;
pub mod error;
pub mod input;
pub mod output;

use std::io::Write;
use std::path::PathBuf;

use clap::Parser;

use crate::cli::Cli;
use crate::error::{exit, CliError, Result};

/// Runs the program on `args` (including the program name) and returns the
/// exit code. Reports go to `stdout` unless an output file is selected;
/// diagnostics go to `stderr`.
pub fn run(args: Vec<String>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8 {
    let args = match apply_config(args) {
        Ok(a) => a,
        Err(e) => return report_error(&e, stderr),
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    exit::OK
                }
                _ => {
                    let _ = write!(stderr, "{e}");
                    exit::ARGUMENT
                }
            };
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => exit::OK,
        Err(e) => report_error(&e, stderr),
    }
}

fn report_error(e: &CliError, stderr: &mut dyn Write) -> u8 {
    let _ = writeln!(stderr, "error: {e}");
    e.exit_code()
}

/// Finds `--config FILE` and merges the file into the arguments.
fn apply_config(args: Vec<String>) -> Result<Vec<String>> {
    let mut path = None;
    for (i, a) in args.iter().enumerate() {
        if a == "--config" {
            path = Some(args.get(i + 1).ok_or_else(|| CliError::usage("--config needs a file"))?.clone());
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    match path {
        None => Ok(args),
        Some(p) => {
            let entries = input::read_config(&PathBuf::from(p))?;
            if entries.iter().any(|(k, _)| k == "config") {
                return Err(CliError::usage("a config file cannot name another config file"));
            }
            Ok(input::merge_config(&args, &entries))
        }
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    let outcome = cli::execute(cli)?;
    let (text, format) = cli::render(&outcome, cli.global.format)?;
    let dir = std::env::var_os(output::OUTPUT_DIR_ENV).map(PathBuf::from);
    let extension = format.map_or("txt", output::Format::extension);
    let dest = output::destination(cli.global.output.as_deref(), dir.as_deref(), outcome.report.name, extension);
    output::emit(&outcome.report, &text, format, dest.as_deref(), stdout)
}
