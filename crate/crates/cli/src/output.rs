//! CSV emission with a manifest comment line.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::Context;

use crate::manifest::RunManifest;

pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> anyhow::Result<Self> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header)?;
        Ok(Self { writer })
    }

    pub fn row(&mut self, fields: &[String]) -> anyhow::Result<()> {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn into_body(self) -> anyhow::Result<Vec<u8>> {
        self.writer.into_inner().context("flushing CSV")
    }
}

/// Shortest round-trip formatting; empty for missing values.
pub fn num(x: f64) -> String {
    x.to_string()
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Write manifest line plus body to `path`, or to stdout when absent.
pub fn emit(path: Option<&Path>, manifest: &RunManifest, body: &[u8]) -> anyhow::Result<()> {
    let mut bytes = manifest.comment_line().into_bytes();
    bytes.push(b'\n');
    bytes.extend_from_slice(body);
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            fs::write(p, &bytes).with_context(|| format!("writing {}", p.display()))
        }
        None => std::io::stdout().write_all(&bytes).context("writing stdout"),
    }
}
