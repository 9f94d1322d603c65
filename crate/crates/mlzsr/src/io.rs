//! Loading and atomic saving of every file kind.

use std::io::Write as _;
use std::path::Path;

use mlzsr_core::data::{Dataset, SplitSpec};
use mlzsr_core::eval::EvalReport;
use mlzsr_core::train::RoundLog;
use sha2::{Digest, Sha256};

use crate::error::{AppError, AppResult};
use crate::formats::checkpoint::{checkpoint_to_text, decode_checkpoint, encode_checkpoint, ModelFile};
use crate::formats::dataset::{parse_dataset, write_dataset};
use crate::formats::linear::{decode_baseline, encode_baseline, BaselineModel};
use crate::formats::log::write_log;
use crate::formats::report::write_report;
use crate::formats::scores::{parse_scores, write_scores, ScoreDump};
use crate::formats::split::{parse_split, write_split};
use crate::formats::ParseResult;

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> AppResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| AppError::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| AppError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| AppError::io(path, e))?;
    tmp.persist(path).map_err(|e| AppError::io(path, e.error))?;
    Ok(())
}

pub fn read_bytes(path: &Path) -> AppResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| AppError::io(path, e))
}

pub fn read_text(path: &Path) -> AppResult<String> {
    std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

fn parsed<T>(path: &Path, r: ParseResult<T>) -> AppResult<T> {
    r.map_err(|e| AppError::parse(path, e))
}

pub fn load_dataset(path: &Path) -> AppResult<Dataset> {
    parsed(path, parse_dataset(&read_text(path)?))
}

pub fn dataset_bytes(ds: &Dataset) -> AppResult<Vec<u8>> {
    write_dataset(ds)
        .map(String::into_bytes)
        .map_err(|m| mlzsr_core::Error::Data(m).into())
}

pub fn save_dataset(ds: &Dataset, path: &Path) -> AppResult<()> {
    write_atomic(path, &dataset_bytes(ds)?)
}

/// Loads a split and checks it against `ds`.
pub fn load_split(path: &Path, ds: &Dataset) -> AppResult<SplitSpec> {
    let split = parsed(path, parse_split(&read_text(path)?))?;
    split.check(ds)?;
    Ok(split)
}

pub fn save_split(split: &SplitSpec, path: &Path) -> AppResult<()> {
    write_atomic(path, write_split(split).as_bytes())
}

pub fn load_checkpoint(path: &Path) -> AppResult<ModelFile> {
    parsed(path, decode_checkpoint(&read_bytes(path)?))
}

pub fn save_checkpoint(m: &ModelFile, path: &Path) -> AppResult<()> {
    write_atomic(path, &encode_checkpoint(m))
}

pub fn save_checkpoint_text(m: &ModelFile, path: &Path) -> AppResult<()> {
    write_atomic(path, checkpoint_to_text(m).as_bytes())
}

pub fn load_baseline(path: &Path) -> AppResult<BaselineModel> {
    parsed(path, decode_baseline(&read_bytes(path)?))
}

pub fn save_baseline(m: &BaselineModel, path: &Path) -> AppResult<()> {
    write_atomic(path, &encode_baseline(m))
}

pub fn load_scores(path: &Path) -> AppResult<ScoreDump> {
    parsed(path, parse_scores(&read_text(path)?))
}

pub fn save_scores(dump: &ScoreDump, path: &Path) -> AppResult<()> {
    write_atomic(path, write_scores(dump).as_bytes())
}

pub fn save_report(reports: &[EvalReport], path: &Path) -> AppResult<()> {
    write_atomic(path, write_report(reports).as_bytes())
}

pub fn save_log(log: &[RoundLog], path: &Path) -> AppResult<()> {
    write_atomic(path, write_log(log).as_bytes())
}
