use std::fs::{self, OpenOptions};
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const LOCK_NAME: &str = ".mgcpp.lock";
pub const SCHEMA_VERSION: u32 = 1;

/// An output directory held exclusively for one run. The lockfile is
/// removed on drop.
#[derive(Debug)]
pub struct OutputDir {
    dir: PathBuf,
    lock: PathBuf,
}

impl OutputDir {
    pub fn open(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let lock = dir.join(LOCK_NAME);
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(_) => Ok(Self {
                dir: dir.to_path_buf(),
                lock,
            }),
            Err(e) if e.kind() == ErrorKind::AlreadyExists => Err(CliError::Locked {
                dir: dir.to_path_buf(),
            }),
            Err(e) => Err(CliError::io(lock, e)),
        }
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    /// Renders into memory with `f`, then writes the file.
    pub fn write_with<F>(&self, name: &str, f: F) -> Result<PathBuf>
    where
        F: FnOnce(&mut Vec<u8>) -> mgcpp_core::Result<()>,
    {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, buf)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).map_err(mgcpp_core::Error::from)?;
        text.push('\n');
        self.write(name, text)
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    command: &'a str,
    version: &'a str,
    config_file: Option<String>,
    effective_config: &'a RunConfig,
}

/// Echoes the config file verbatim as `config.toml` and writes
/// `manifest.json` with the effective configuration.
pub fn write_manifest(
    out: &OutputDir,
    command: &str,
    config: &RunConfig,
    source: Option<&(PathBuf, String)>,
) -> Result<()> {
    if let Some((_, text)) = source {
        out.write("config.toml", text)?;
    }
    out.write_json(
        "manifest.json",
        &Manifest {
            schema_version: SCHEMA_VERSION,
            command,
            version: env!("CARGO_PKG_VERSION"),
            config_file: source.map(|(p, _)| p.display().to_string()),
            effective_config: config,
        },
    )?;
    Ok(())
}
