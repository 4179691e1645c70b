//! Delimited-text plumbing shared by every file format, plus the result
//! tables written by the pipeline.

mod tables;

pub use tables::*;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer};

use crate::error::{Error, Result};

/// Reads a comma-delimited file with headers. Each row comes back with its
/// 1-based line number so validation messages can point at it.
pub fn read_rows<T: DeserializeOwned>(path: &Path, required: &[&str]) -> Result<Vec<(u64, T)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_open_error(path, e))?;
    let headers = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    let missing: Vec<_> = required
        .iter()
        .filter(|h| !headers.iter().any(|x| x == **h))
        .collect();
    if !missing.is_empty() {
        return Err(Error::format(
            path,
            format!(
                "header is missing column(s) {}",
                missing.iter().map(|s| format!("`{s}`")).collect::<Vec<_>>().join(", ")
            ),
        ));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let row: T = rec
            .deserialize(Some(&headers))
            .map_err(|e| Error::format(path, format!("line {line}: {e}")))?;
        out.push((line, row));
    }
    Ok(out)
}

fn csv_open_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format(path, format!("{other:?}")),
    }
}

pub(crate) fn de_flag<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
    let s = Option::<String>::deserialize(d)?.unwrap_or_default();
    match s.trim().to_ascii_lowercase().as_str() {
        "" | "0" | "false" | "no" | "n" => Ok(false),
        "1" | "true" | "yes" | "y" => Ok(true),
        other => Err(serde::de::Error::custom(format!("not a boolean flag: `{other}`"))),
    }
}

pub(crate) type CsvWriter = csv::Writer<BufWriter<File>>;

pub(crate) fn writer(path: &Path) -> Result<CsvWriter> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(f)))
}

pub(crate) fn write_record<I, S>(path: &Path, w: &mut CsvWriter, rec: I) -> Result<()>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    w.write_record(rec).map_err(|e| Error::csv(path, e))
}

pub(crate) fn flush(path: &Path, w: CsvWriter) -> Result<()> {
    let mut inner = w
        .into_inner()
        .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    inner.flush().map_err(|e| Error::io(path, e))
}

/// Writes pretty JSON with a trailing newline.
pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&s).map_err(|e| Error::format(path, e.to_string()))
}
