//! Deterministic serialization helpers.
//!
//! Every float written by this crate uses 17 significant digits in
//! scientific notation, so identical inputs give byte-identical files.
//! Non-finite values become JSON `null`.

use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

/// `serde_json` formatter that prints floats with 17 significant digits.
#[derive(Clone, Copy, Debug, Default)]
pub struct FixedDigits;

impl serde_json::ser::Formatter for FixedDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{}", fmt_f64(value))
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// 17-significant-digit scientific notation (`-1.2345678901234567e-3`).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedDigits);
    value.serialize(&mut ser)?;
    // The formatter only ever emits UTF-8.
    Ok(String::from_utf8(out).expect("serde_json produced invalid UTF-8"))
}

/// Writes `contents` to `path` through a sibling temporary file and a rename,
/// so readers never observe a partially written file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = to_json_string(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}
