//! Deterministic file output: floats at 17 significant digits, files written
//! to a temp name and renamed so failures leave no partial artifacts.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::CliError;

/// 17 significant digits, scientific notation.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Optional cell: empty when absent.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

/// Write `content` to `dir/name` atomically (temp file + rename).
pub fn write_atomic(dir: &Path, name: &str, content: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(".tmp.{name}"));
    let target = dir.join(name);
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(content.as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, &target)?;
    Ok(target)
}
