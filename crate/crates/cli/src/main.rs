use std::process::ExitCode;

use clap::Parser;
use esbmix_cli::{run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ESBMIX_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("esbmix: verification failed; see the report in {}", cli.global.out.display());
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("esbmix: {e}");
            ExitCode::from(2)
        }
    }
}
