//! Command-line front end: `fit`, `simulate`, `select-u` and `bootstrap`.
//!
//! Exit codes: 0 on success, 1 on computation or input errors (a JSON error
//! object on standard error), 2 on usage errors.

pub mod args;
pub mod commands;
pub mod io;

use clap::Parser;
use std::ffi::OsString;

pub use args::Cli;
pub use commands::CliError;

/// Environment variable overriding the worker thread count.
pub const THREADS_VAR: &str = "ENVEST_THREADS";

fn thread_count() -> Result<Option<usize>, String> {
    match std::env::var(THREADS_VAR) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(format!("{THREADS_VAR}: {e}")),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!("{THREADS_VAR} must be a positive integer, got {v:?}")),
        },
    }
}

fn error_json(err: &CliError) -> String {
    serde_json::json!({ "error": { "kind": err.kind(), "message": err.to_string() } }).to_string()
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let threads = match thread_count() {
        Ok(t) => t,
        Err(msg) => {
            eprintln!("error: {msg}");
            return 2;
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("{}", error_json(&CliError::Usage(e.to_string())));
            return 1;
        }
    };
    match pool.install(|| commands::dispatch(&cli.command)) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            1
        }
    }
}
