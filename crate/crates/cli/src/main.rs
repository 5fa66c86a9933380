//! `tempo`: temporal network centralities from the command line.

mod args;
mod run;

use std::process::ExitCode;

use clap::Parser;

use args::Args;

/// Exit status for a malformed command line.
const USAGE_EXIT: u8 = 64;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let body = serde_json::json!({ "code": "USAGE", "message": e.to_string().trim() });
            eprintln!("{body}");
            return ExitCode::from(USAGE_EXIT);
        }
    };
    match run::run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", run::error_json(&e));
            ExitCode::from(run::exit_code(&e))
        }
    }
}
