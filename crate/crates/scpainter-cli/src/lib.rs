//! Library backing the `scpainter` binary. Each subcommand is an
//! ordinary function over parsed options so the acceptance and CLI test
//! suites can drive them in-process.

pub mod commands;
pub mod lock;
pub mod metrics;

/// Process exit codes: 0 success, 1 internal invariant violation, 2
/// user-input error.
pub fn exit_code_for(err: &scpainter_core::Error) -> i32 {
    if err.is_user_error() {
        2
    } else {
        1
    }
}
