//! `mcem`: command-line front end for the multicolour East model toolkit.
//!
//! Exit codes: 0 success, 1 I/O or failed path verification, 2 config error,
//! 3 cap exceeded, 4 numeric failure.

mod commands;
mod config;
mod error;
mod files;
mod output;

use clap::Parser;

use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "mcem",
    version,
    about = "Multicolour East model simulations, spectral gaps and renormalization estimates"
)]
struct Cli {
    #[command(subcommand)]
    command: commands::Command,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = commands::run(cli.command) {
        eprintln!("error: {e:#}");
        let code = e.downcast_ref::<CliError>().map_or(1, CliError::exit_code);
        std::process::exit(code);
    }
}
