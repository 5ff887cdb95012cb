//! Run manifests and tabular output.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lozenge_core::linalg::{to_f64, Q};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub core_version: &'static str,
    pub subcommand: String,
    pub args: Vec<String>,
    pub config: Option<String>,
    pub config_sha256: Option<String>,
    pub seed: Option<u64>,
    pub workers: usize,
}

impl Manifest {
    pub fn new(subcommand: &str, config: Option<(&Path, &[u8])>, seed: Option<u64>) -> Self {
        Manifest {
            tool: "lozenge",
            version: env!("CARGO_PKG_VERSION"),
            core_version: lozenge_core::VERSION,
            subcommand: subcommand.into(),
            args: std::env::args().skip(1).collect(),
            config: config.map(|(p, _)| p.display().to_string()),
            config_sha256: config.map(|(_, bytes)| hex::encode(Sha256::digest(bytes))),
            seed,
            workers: rayon::current_num_threads(),
        }
    }

    /// Writes `<output>.manifest.json`, or `manifest.json` inside a directory output.
    pub fn write_beside(&self, output: &Path) -> Result<PathBuf> {
        let path = if output.is_dir() {
            output.join("manifest.json")
        } else {
            let mut name = output.as_os_str().to_owned();
            name.push(".manifest.json");
            PathBuf::from(name)
        };
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

/// `num/den` of an exact value.
pub fn fraction_parts(v: &Q) -> (String, String, f64) {
    (v.numer().to_string(), v.denom().to_string(), to_f64(v))
}

/// A CSV writer on `path`, or on stdout when no path is given.
pub fn csv_writer(path: Option<&Path>) -> Result<csv::Writer<Box<dyn Write>>> {
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(std::io::stdout()),
    };
    Ok(csv::Writer::from_writer(sink))
}

/// Writes `text` to `path`, or to stdout.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => Ok(std::io::stdout().lock().write_all(text.as_bytes())?),
    }
}

/// One line on stdout; a closed pipe is reported as an error rather than a panic.
pub fn line(text: impl std::fmt::Display) -> Result<()> {
    Ok(writeln!(std::io::stdout().lock(), "{text}")?)
}
