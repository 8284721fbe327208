use std::process::ExitCode;

use clap::Parser;
use geodesic_count_cli::commands::run;
use geodesic_count_cli::config::{Cli, FileConfig, RunConfig, CACHE_ENV};
use geodesic_count_cli::CliError;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match resolve(cli).and_then(|cfg| run(&cfg)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn resolve(cli: Cli) -> Result<RunConfig, CliError> {
    let file = match &cli.flags.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let env_cache = std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(Into::into);
    RunConfig::resolve(cli.command, cli.flags, file, env_cache)
}
