//! On-disk formats: JSON for controllers, baselines and reports; CSV for
//! time series and grids. Every file carries the config digest and seed.

use std::fmt::Display;
use std::fs;
use std::path::Path;

use gftlqr_core::{BaselineStore, GftController};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const CONTROLLER_FORMAT: &str = "gftlqr-controller/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingMeta {
    /// Mean relative cost of the saved controller over `cases`.
    pub final_cost: f64,
    pub generations: usize,
    pub population_size: usize,
    pub n_islands: usize,
    pub cases: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerFile {
    pub format: String,
    pub config_digest: String,
    pub seed: u64,
    pub controller: GftController,
    pub training: Option<TrainingMeta>,
}

/// Pretty JSON with a trailing newline; field order is fixed by the types
/// and floats print in shortest round-trip form.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, what: &str) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {what} {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("invalid {what} {}: {e}", path.display())))
}

pub fn load_controller(path: &Path) -> Result<ControllerFile, CliError> {
    let file: ControllerFile = read_json(path, "controller file")?;
    if file.format != CONTROLLER_FORMAT {
        return Err(CliError::Validation(format!(
            "{}: unsupported controller format `{}`",
            path.display(),
            file.format
        )));
    }
    Ok(file)
}

pub fn save_controller(path: &Path, file: &ControllerFile) -> Result<(), CliError> {
    write_text(path, &to_canonical_json(file))
}

pub fn load_baselines(path: &Path) -> Result<BaselineStore, CliError> {
    read_json(path, "baseline store")
}

/// Loads a store and rejects it if it was computed under other dynamics.
pub fn load_current_baselines(path: &Path, digest: &str) -> Result<BaselineStore, CliError> {
    let store = load_baselines(path)?;
    if store.config_digest != digest {
        return Err(CliError::Validation(format!(
            "baseline store {} is stale: digest {} does not match current config {}",
            path.display(),
            store.config_digest,
            digest
        )));
    }
    Ok(store)
}

/// CSV text with a leading provenance comment, then a header and rows.
pub struct CsvText {
    writer: csv::Writer<Vec<u8>>,
}

impl CsvText {
    pub fn new(digest: &str, seed: u64, header: &[&str]) -> Self {
        let preamble = format!("# config_digest={digest} seed={seed}\n").into_bytes();
        let mut writer = csv::WriterBuilder::new().from_writer(preamble);
        writer.write_record(header).expect("in-memory write");
        Self { writer }
    }

    pub fn row<I, T>(&mut self, fields: I)
    where
        I: IntoIterator<Item = T>,
        T: Display,
    {
        self.writer
            .write_record(fields.into_iter().map(|f| f.to_string()))
            .expect("in-memory write");
    }

    pub fn into_string(self) -> String {
        let bytes = self.writer.into_inner().expect("in-memory flush");
        String::from_utf8(bytes).expect("fields are UTF-8")
    }
}
