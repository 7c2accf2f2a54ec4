//! Command-line front end for the `tlcm` library.

pub mod commands;
pub mod config;
pub mod model_file;

use tlcm::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DIMENSION: i32 = 3;
pub const EXIT_QUERY: i32 = 4;
/// Numerical trouble inside a run.
pub const EXIT_RUNTIME: i32 = 1;

pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Io(_)
                | Error::Ingest(_)
                | Error::Corpus(_)
                | Error::InvalidArgument(_)
                | Error::Empty(_) => EXIT_INPUT,
                Error::Dimension(_) => EXIT_DIMENSION,
                Error::Query(_) | Error::OutOfRange(_) => EXIT_QUERY,
                Error::Singular(_) | Error::Numerical(_) => EXIT_RUNTIME,
            };
        }
        if cause.is::<std::io::Error>() || cause.is::<serde_json::Error>() {
            return EXIT_INPUT;
        }
    }
    EXIT_RUNTIME
}
