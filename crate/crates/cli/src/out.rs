//! Output helpers: every float prints with 17 significant digits so parsed
//! values are bit-exact, and whole files are written in one shot.

use std::io::Write;
use std::path::{Path, PathBuf};

use tsmt_core::Result;

/// 17 significant digits; round-trips exactly through parse.
pub fn f(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `content` to the path, or stdout when absent.
pub fn write_output(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => write_file(path, content),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(content.as_bytes())?;
            Ok(())
        }
    }
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content)?;
    Ok(())
}

/// The summary line goes to stdout when the CSV went to a file, otherwise to
/// stderr so the CSV stream stays clean.
pub fn emit_summary(out: &Option<PathBuf>, line: &str) {
    if out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for &v in &[0.05, 1.0 / 3.0, 26.661013976826766, 1e-300, -0.0, 12345.678] {
            let s = f(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{v} -> {s}");
        }
    }
}
