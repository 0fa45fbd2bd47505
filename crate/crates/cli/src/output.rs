//! CSV and JSON writers. Column order follows the row struct field order
//! and is part of the command-line contract.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

pub fn write_csv<W: Write, T: Serialize>(writer: W, rows: &[T]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `rows` to `dir/name`, or to stdout when no directory is given.
pub fn emit_csv<T: Serialize>(dir: Option<&Path>, name: &str, rows: &[T]) -> anyhow::Result<()> {
    match dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            write_csv(std::fs::File::create(dir.join(name))?, rows)
        }
        None => write_csv(std::io::stdout().lock(), rows),
    }
}

/// Writes pretty JSON to `dir/name`; a no-op without a directory.
pub fn emit_json<T: Serialize>(dir: Option<&Path>, name: &str, value: &T) -> anyhow::Result<()> {
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(name), serde_json::to_string_pretty(value)?)?;
    }
    Ok(())
}
