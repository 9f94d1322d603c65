//! File formats, configuration, run manifests and the command-line front end
//! for `mlzsr-core`.

pub mod cli;
pub mod cmd;
pub mod config;
pub mod error;
pub mod experiment;
pub mod formats;
pub mod io;
pub mod manifest;

pub use error::{AppError, AppResult};
