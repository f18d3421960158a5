//! Output emission: 17-significant-digit CSV series and atomic file writes.

use std::fs;
use std::path::Path;

use anyhow::Context;

/// 17 significant digits; enough to round-trip any f64 exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write bytes to `path` atomically: write a sibling temp file, then rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = path.parent().context("output path has no parent")?;
    fs::create_dir_all(dir)?;
    let file_name = path.file_name().context("output path has no file name")?;
    let tmp = dir.join(format!(".{}.tmp", file_name.to_string_lossy()));
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// CSV with a header row, comma separators, `.` decimals, LF line endings.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> anyhow::Result<()> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_has_17_significant_digits() {
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_f64(std::f64::consts::PI), "3.1415926535897931e0");
        let v: f64 = "3.1415926535897931e0".parse().unwrap();
        assert_eq!(v, std::f64::consts::PI);
    }

    #[test]
    fn csv_uses_lf_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        write_csv(&path, &["t", "y"], &[vec![0.0, 1.0], vec![0.5, -2.0]]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("t,y\n"));
        assert!(!text.contains('\r'));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn atomic_write_replaces_existing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        atomic_write(&path, b"one").unwrap();
        atomic_write(&path, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "two");
    }
}
