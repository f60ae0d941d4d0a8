use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use relhartree::spectral::snapshot::{encode_field, write_atomic};
use relhartree::Field;
use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

/// Bumped whenever a report layout changes.
pub const SCHEMA_VERSION: u32 = 1;

/// Wall-clock data; the only part of a report allowed to differ between runs.
#[derive(Clone, Debug, Serialize)]
pub struct Metadata {
    pub tool_version: &'static str,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    command: &'a str,
    config: &'a RunConfig,
    result: &'a T,
    metadata: Metadata,
}

fn unix_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis())
}

/// Every artifact of one command goes through here, each file by atomic rename.
pub struct Output {
    dir: PathBuf,
    command: &'static str,
    started: u128,
    quiet: bool,
}

impl Output {
    pub fn create(dir: &Path, command: &'static str, quiet: bool) -> Result<Self, CliError> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Config(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Output {
            dir: dir.to_path_buf(),
            command,
            started: unix_ms(),
            quiet,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes).map_err(|e| CliError::Output(e.to_string()))?;
        Ok(path)
    }

    /// `{schema_version, command, config, result, metadata}` as pretty JSON.
    pub fn report<T: Serialize>(&self, name: &str, config: &RunConfig, result: &T) -> Result<PathBuf, CliError> {
        let envelope = Envelope {
            schema_version: SCHEMA_VERSION,
            command: self.command,
            config,
            result,
            metadata: Metadata {
                tool_version: env!("CARGO_PKG_VERSION"),
                started_unix_ms: self.started,
                finished_unix_ms: unix_ms(),
            },
        };
        let mut bytes = serde_json::to_vec_pretty(&envelope).map_err(|e| CliError::Output(e.to_string()))?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    pub fn csv<R: Serialize>(
        &self,
        name: &str,
        header: &[&str],
        rows: impl IntoIterator<Item = R>,
    ) -> Result<PathBuf, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| CliError::Output(e.to_string());
        w.write_record(header).map_err(err)?;
        for row in rows {
            w.serialize(row).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
        self.write(name, &bytes)
    }

    pub fn snapshot(&self, name: &str, field: &Field) -> Result<PathBuf, CliError> {
        self.write(name, &encode_field(field))
    }
}
