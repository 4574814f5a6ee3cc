use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use lagplace_cli::{run, Cli, EXIT_INPUT, THREADS_ENV};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { 0 });
        }
    };
    let threads = std::env::var(THREADS_ENV).ok();
    match run(&cli, threads.as_deref()) {
        Ok(outcome) => {
            let written = match &cli.out {
                Some(path) => std::fs::write(path, &outcome.output).map_err(|e| format!("{}: {e}", path.display())),
                None => std::io::stdout().write_all(outcome.output.as_bytes()).map_err(|e| e.to_string()),
            };
            if let Err(e) = written {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_INPUT);
            }
            ExitCode::from(outcome.exit)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
