//! Report emission. Every file goes through a temporary file and an atomic
//! rename, so a failed command leaves no partial output behind.

use std::path::{Path, PathBuf};

use serde::Serialize;
use subdyadic::io::{atomic_write, write_json};

use crate::error::Result;

pub struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Self {
        Outputs { dir: dir.to_owned(), written: Vec::new() }
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.dir.join(name);
        write_json(&path, value)?;
        self.written.push(path);
        Ok(())
    }

    /// Writes a header and rows of already formatted cells.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
        let path = self.dir.join(name);
        atomic_write(&path, &bytes)?;
        self.written.push(path);
        Ok(())
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

/// Shortest round-trip decimal form; `inf`, `-inf` and `NaN` spelled out.
pub fn num(v: f64) -> String {
    v.to_string()
}
