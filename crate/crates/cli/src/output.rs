//! Report files: RFC 4180 CSV, pretty JSON and optional SVG plots.

use crate::svg::Plot;
use hornlab::{Error, Result};
use serde::Serialize;
use std::path::{Path, PathBuf};

fn io(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

/// Where a command writes its files. With no directory nothing is written.
#[derive(Clone, Debug, Default)]
pub struct Sink {
    dir: Option<PathBuf>,
    svg: bool,
    written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(dir: Option<PathBuf>, svg: bool) -> Result<Self> {
        if svg && dir.is_none() {
            return Err(Error::Config("--svg needs --out".into()));
        }
        if let Some(d) = &dir {
            std::fs::create_dir_all(d).map_err(|e| io(d, e))?;
        }
        Ok(Sink {
            dir,
            svg,
            written: Vec::new(),
        })
    }

    /// Files written so far, in order.
    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn target(&mut self, name: &str) -> Option<PathBuf> {
        let path = self.dir.as_ref()?.join(name);
        self.written.push(path.clone());
        Some(path)
    }

    pub fn csv<T: Serialize>(
        &mut self,
        name: &str,
        rows: impl IntoIterator<Item = T>,
    ) -> Result<()> {
        let Some(path) = self.target(name) else {
            return Ok(());
        };
        let mut w = csv::Writer::from_path(&path).map_err(|e| io(&path, e))?;
        for row in rows {
            w.serialize(row).map_err(|e| io(&path, e))?;
        }
        w.flush().map_err(|e| io(&path, e))
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let Some(path) = self.target(name) else {
            return Ok(());
        };
        let mut text = serde_json::to_string_pretty(value).map_err(|e| io(&path, e))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| io(&path, e))
    }

    pub fn plot(&mut self, name: &str, plot: &Plot) -> Result<()> {
        if !self.svg {
            return Ok(());
        }
        let Some(path) = self.target(name) else {
            return Ok(());
        };
        std::fs::write(&path, plot.render()).map_err(|e| io(&path, e))
    }
}
