use std::process::ExitCode;

use clap::Parser;

use geomedian_cli::errors::CliError;
use geomedian_cli::{run, Cli, THREADS_ENV};

fn main() -> ExitCode {
    let cli = Cli::parse();

    let pool = match std::env::var(THREADS_ENV) {
        Ok(raw) => match raw.parse::<usize>() {
            Ok(t) if t >= 1 => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
                Ok(pool) => Some(pool),
                Err(e) => {
                    let err = CliError::config(format!("cannot build thread pool: {e}"));
                    eprintln!("{}", err.to_json());
                    return err.exit_code();
                }
            },
            _ => {
                let err = CliError::config(format!(
                    "{THREADS_ENV} must be a positive integer, got '{raw}'"
                ));
                eprintln!("{}", err.to_json());
                return err.exit_code();
            }
        },
        Err(_) => None,
    };

    let outcome = match &pool {
        Some(pool) => pool.install(|| run(&cli)),
        None => run(&cli),
    };

    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
