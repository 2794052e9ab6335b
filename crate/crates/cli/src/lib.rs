//! Library surface of the `seamtrace` binary: subcommand implementations,
//! overlay rendering, and landmark text-file parsing.

pub mod commands;
pub mod overlay;
pub mod textio;

/// Exit codes are stage-specific so scripted callers can tell failures
/// apart. Documented in the README.
pub fn exit_code(err: &seamtrace_core::Error) -> i32 {
    use seamtrace_core::Error::*;
    match err {
        Image(_) => 2,
        Annotation(_) => 3,
        Curve(_) => 4,
        Seam(_) => 5,
        Integrate(_) => 6,
        Metrics(_) => 7,
        Synth(_) => 8,
        Config(_) => 9,
        Io(_) => 10,
        Json(_) => 11,
    }
}
