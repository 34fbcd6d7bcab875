//! Command-line front end: dictionary files, rasterization and the
//! `segment`/`sweep`/`dsd`/`linkage`/`certify`/`oracle` commands.

use std::path::{Path, PathBuf};

use thiserror::Error;

pub mod dictionary;
pub mod run;

pub use dictionary::{parse_dictionary, rasterize, render_dictionary, DictionarySpec, Entry, Shape};
pub use run::{run, Command, Levels, RunConfig, RunStatus};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },

    #[error("{}: {source}", path.display())]
    Input {
        path: PathBuf,
        #[source]
        source: shapecomp::Error,
    },

    #[error(transparent)]
    Core(#[from] shapecomp::Error),
}

impl CliError {
    pub(crate) fn input(path: &Path, source: shapecomp::Error) -> Self {
        CliError::Input {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Process exit code: 0 success, 1 input error, 2 solver non-convergence.
pub fn exit_code(outcome: &Result<RunStatus, CliError>) -> i32 {
    match outcome {
        Ok(status) => status.exit_code(),
        Err(_) => 1,
    }
}
