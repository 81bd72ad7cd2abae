//! File formats, program harnesses and reports around `ircost-core`.

pub mod error;
pub mod fixture;
pub mod harness;
pub mod model;
pub mod report;

use std::path::Path;

use ircost_core::costrel::{parse_crs, CostRelationSystem};
use ircost_core::{parse_module, IrModule};

pub use error::{Error, Result};

pub fn load_module(path: &Path) -> Result<IrModule> {
    let text = error::read(path)?;
    parse_module(&text).map_err(|source| Error::Parse { path: path.to_path_buf(), source })
}

/// Reads a cost relation system in JSON or in the text format.
pub fn load_crs(path: &Path) -> Result<CostRelationSystem> {
    let text = error::read(path)?;
    if text.trim_start().starts_with('{') {
        return serde_json::from_str(&text).map_err(|source| Error::Json { path: path.to_path_buf(), source });
    }
    parse_crs(&text).map_err(|source| Error::Crs { path: path.to_path_buf(), source })
}
