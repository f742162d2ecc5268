use std::path::PathBuf;

use capdrop_core::alexandrov::AlexandrovError;
use capdrop_core::analytic::AnalyticError;
use capdrop_core::geom::io::IoError;
use capdrop_core::solver::SolverError;
use capdrop_core::verify::VerifyError;
use capdrop_core::MeshError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or invalid scenario. `location` is `line L column C` for syntax and
    /// schema errors, or the offending field for range checks.
    #[error("{path}: {location}: {message}")]
    ConfigParse { path: PathBuf, location: String, message: String },
    #[error("unknown tolerance `{0}`")]
    UnknownTolerance(String),
    #[error("bad value for tolerance `{name}`: {value}")]
    BadTolerance { name: String, value: String },
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    MeshIo(#[from] IoError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Alexandrov(#[from] AlexandrovError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub(crate) fn field(path: &std::path::Path, field: &str, message: impl Into<String>) -> Self {
        CliError::ConfigParse {
            path: path.to_path_buf(),
            location: format!("field `{field}`"),
            message: message.into(),
        }
    }
}
