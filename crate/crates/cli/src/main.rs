use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use taglat_cli::{execute, Cli, CliError};

fn run(cli: &Cli) -> Result<(), CliError> {
    let out = execute(cli)?;
    match &cli.out {
        Some(path) => std::fs::write(path, &out.stdout)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?,
        None => std::io::stdout().lock().write_all(out.stdout.as_bytes())?,
    }
    if !out.stderr.is_empty() {
        eprint!("{}", out.stderr);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("taglat: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
