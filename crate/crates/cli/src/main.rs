//! `rmtlab` command-line interface.
//!
//! Exit status: 0 on success, 1 on a runtime failure (including a failed
//! `verify` check), 2 on a usage error.

mod commands;
mod config;
mod verify;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::Command;

use crate::commands::COMMANDS;
use crate::config::{build_command, CliError, Resolved};

fn cli() -> Command {
    let mut root = Command::new("rmtlab")
        .about("Sparse inhomogeneous random matrices: sampling, spectra and exact walk moments")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true);
    for spec in COMMANDS {
        root = root.subcommand(build_command(spec.name, spec.about, spec.keys));
    }
    root
}

fn run(args: impl IntoIterator<Item = OsString>) -> u8 {
    let matches = match cli().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return e.exit_code() as u8;
        }
    };
    let (name, sub) = matches.subcommand().expect("a subcommand is required");
    let spec = COMMANDS.iter().find(|c| c.name == name).expect("registered subcommand");
    let result = Resolved::resolve(spec.keys, sub).and_then(|resolved| {
        if let Some(t) = resolved.parse::<usize>("threads")? {
            if t == 0 {
                return Err(CliError::Usage("--threads must be >= 1".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build_global()
                .map_err(|e| CliError::Runtime(e.to_string()))?;
        }
        (spec.run)(&resolved)
    });
    match result {
        Ok(()) => 0,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            2
        }
        Err(CliError::Runtime(m)) => {
            eprintln!("error: {m}");
            1
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(run(std::env::args_os()))
}
