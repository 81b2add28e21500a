//! `fpmforge` command-line front end.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod io;
pub mod render;

pub use commands::{run, Command, Invocation, Outcome};

/// Worker cap from `FPMFORGE_THREADS`; unset or unparsable means no cap.
pub fn thread_cap() -> Option<usize> {
    std::env::var("FPMFORGE_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}
