use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use maxitive_cli::{run, Cli, EXIT_CONFIG, EXIT_OK};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { EXIT_OK as u8 });
        }
    };
    let outcome = run(&cli);
    if outcome.status == EXIT_CONFIG {
        let _ = std::io::stderr().write_all(&outcome.output);
        return ExitCode::from(EXIT_CONFIG as u8);
    }
    let written = match &cli.global.out {
        Some(path) => std::fs::write(path, &outcome.output).map_err(|e| format!("{}: {e}", path.display())),
        None => std::io::stdout().write_all(&outcome.output).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_CONFIG as u8);
    }
    ExitCode::from(outcome.status as u8)
}
