//! Support code for the `fscns` binary: config files, dataset files and run manifests.

pub mod config;
pub mod dataset;
pub mod manifest;

use fscns::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const OTHER: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const PARSE: i32 = 3;
    pub const INSUFFICIENT_DATA: i32 = 4;
    pub const DEGENERATE: i32 = 5;
}

/// Maps an error chain to an exit code.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Parse { .. } | Error::Io(_) | Error::CountMismatch { .. } => exit::PARSE,
                Error::InsufficientData(_) => exit::INSUFFICIENT_DATA,
                e if e.is_numeric() => exit::DEGENERATE,
                _ => exit::USAGE,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some()
            || cause.downcast_ref::<toml::de::Error>().is_some()
            || cause.downcast_ref::<config::ConfigError>().is_some()
        {
            return exit::PARSE;
        }
    }
    exit::OTHER
}
