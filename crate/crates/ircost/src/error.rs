use std::path::PathBuf;

use ircost_core::closed::ClosedFormError;
use ircost_core::costrel::CrParseError;
use ircost_core::interp::InterpError;
use ircost_core::ir::ParseError;
use ircost_core::solver::EvalError;
use ircost_core::PipelineError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{}:{source}", path.display())]
    Parse { path: PathBuf, source: ParseError },
    #[error("{}:{}: {}", path.display(), source.line, source.message)]
    Crs { path: PathBuf, source: CrParseError },
    #[error("{}: {message}", path.display())]
    Model { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Pipeline { path: PathBuf, source: PipelineError },
    #[error(transparent)]
    Interp(#[from] InterpError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    ClosedForm(#[from] ClosedFormError),
    #[error("{0}")]
    Usage(String),
    #[error("formula falls below the interpreter at {0}")]
    NotAnUpperBound(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn read(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}
