use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use super::CliError;

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("cannot write {}: {e}", path.display()))
}

pub fn write_bytes(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| io_error(&path, e))
}

pub fn write_json(dir: &Path, name: &str, value: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("json");
    text.push('\n');
    write_bytes(dir, name, text.as_bytes())
}

/// JSON Lines: the metadata object first, then one row per record.
pub fn write_jsonl<T: Serialize>(dir: &Path, name: &str, meta: &Value, rows: &[T]) -> Result<(), CliError> {
    let mut text = serde_json::to_string(&serde_json::json!({ "metadata": meta })).expect("json");
    text.push('\n');
    for r in rows {
        text.push_str(&serde_json::to_string(r).expect("json"));
        text.push('\n');
    }
    write_bytes(dir, name, text.as_bytes())
}

/// CSV preceded by one `#` comment line carrying the metadata as JSON.
pub fn write_csv<T: Serialize>(
    dir: &Path,
    name: &str,
    meta: &Value,
    header: &[&str],
    rows: &[T],
) -> Result<(), CliError> {
    let mut buf = format!("# {}\r\n", serde_json::to_string(meta).expect("json")).into_bytes();
    {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .has_headers(false)
            .from_writer(&mut buf);
        w.write_record(header).map_err(|e| io_error(&dir.join(name), e))?;
        for r in rows {
            w.serialize(r).map_err(|e| io_error(&dir.join(name), e))?;
        }
        w.flush().map_err(|e| io_error(&dir.join(name), e))?;
    }
    write_bytes(dir, name, &buf)
}
