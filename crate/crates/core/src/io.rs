//! Signal files and atomic report writing.
//!
//! A signal is a header-less stream of little-endian `f64`, interleaved
//! `re, im` when complex, with a sidecar `<name>.meta.json` describing the
//! grid.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, SampledField};
use crate::linalg::C64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalMeta {
    pub d: usize,
    pub n: usize,
    #[serde(rename = "L")]
    pub length: f64,
    pub complex: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
}

impl SignalMeta {
    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.d, self.n, self.length)
    }
}

/// `dir/name.bin` → `dir/name.meta.json`.
pub fn meta_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.meta.json"))
}

/// Writes through a temporary file in the same directory and renames it
/// into place, so a failed run leaves no partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

/// Writes the samples and the sidecar. Real-valued fields are stored as
/// real doubles.
pub fn write_signal(path: &Path, field: &SampledField, kind: Option<&str>) -> Result<()> {
    let complex = field.max_imag() > 0.0;
    let mut bytes = Vec::with_capacity(field.values.len() * if complex { 16 } else { 8 });
    for v in &field.values {
        bytes.extend_from_slice(&v.re.to_le_bytes());
        if complex {
            bytes.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    let g = field.grid;
    let meta = SignalMeta { d: g.d, n: g.n, length: g.length, complex, kind: kind.map(str::to_owned) };
    atomic_write(path, &bytes)?;
    write_json(&meta_path(path), &meta)
}

pub fn read_signal(path: &Path) -> Result<SampledField> {
    let mp = meta_path(path);
    let text = fs::read_to_string(&mp).map_err(|e| Error::io(&mp, e))?;
    let meta: SignalMeta = serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", mp.display())))?;
    let grid = meta.grid()?;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let width = if meta.complex { 16 } else { 8 };
    if bytes.len() != grid.total() * width {
        return Err(Error::Format(format!(
            "{}: {} bytes, expected {} for {} samples",
            path.display(),
            bytes.len(),
            grid.total() * width,
            grid.total()
        )));
    }
    let f = |c: &[u8]| f64::from_le_bytes(c.try_into().expect("8-byte chunk"));
    let values = bytes
        .chunks_exact(width)
        .map(|c| if meta.complex { C64::new(f(&c[..8]), f(&c[8..])) } else { C64::new(f(c), 0.0) })
        .collect();
    SampledField::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_complex_and_real() {
        let dir = tempfile::tempdir().unwrap();
        let g = GridSpec::new(1, 16, 4.0).unwrap();
        let f = SampledField::from_fn(g, |x| C64::new(x[0], -x[0] * 0.5));
        let p = dir.path().join("sig.bin");
        write_signal(&p, &f, Some("test")).unwrap();
        assert!(dir.path().join("sig.meta.json").exists());
        assert_eq!(read_signal(&p).unwrap(), f);

        let r = SampledField::from_fn(g, |x| C64::new(x[0].sin(), 0.0));
        write_signal(&p, &r, None).unwrap();
        assert_eq!(fs::metadata(&p).unwrap().len(), 16 * 8);
        assert_eq!(read_signal(&p).unwrap(), r);
    }

    #[test]
    fn truncated_file_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let g = GridSpec::new(1, 16, 4.0).unwrap();
        let p = dir.path().join("sig.bin");
        write_signal(&p, &SampledField::from_fn(g, |x| C64::new(x[0], 0.0)), None).unwrap();
        fs::write(&p, [0u8; 10]).unwrap();
        assert!(matches!(read_signal(&p), Err(Error::Format(_))));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = read_signal(Path::new("/nonexistent/x.bin")).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }
}
