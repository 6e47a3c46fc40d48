//! Output metadata headers and JSONL helpers.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Provenance stamped on every output file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputMeta {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seed: Option<u64>,
}

impl OutputMeta {
    pub fn new(config_hash: impl Into<String>, seed: Option<u64>) -> Self {
        OutputMeta {
            tool: "poc".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: config_hash.into(),
            seed,
        }
    }

    /// Single-line form used as a `#` comment in CSV files.
    pub fn comment_line(&self) -> String {
        let seed = self.seed.map_or_else(|| "none".to_owned(), |s| s.to_string());
        format!(
            "# tool={} version={} config_hash={} seed={}",
            self.tool, self.version, self.config_hash, seed
        )
    }
}

#[derive(Serialize, Deserialize)]
struct MetaLine {
    meta: OutputMeta,
}

/// Reads a JSONL file, skipping blank lines and `{"meta": ...}` header lines.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || is_meta_line(trimmed) {
            continue;
        }
        let item = serde_json::from_str(trimmed).map_err(|e| Error::Malformed {
            path: path.to_owned(),
            line: i + 1,
            msg: e.to_string(),
        })?;
        out.push(item);
    }
    Ok(out)
}

fn is_meta_line(line: &str) -> bool {
    line.starts_with("{\"meta\"") && serde_json::from_str::<MetaLine>(line).is_ok()
}

/// Reads the `meta` header line of a JSONL file, if it has one.
pub fn read_jsonl_meta(path: &Path) -> Result<Option<OutputMeta>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut first = String::new();
    BufReader::new(file)
        .read_line(&mut first)
        .map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str::<MetaLine>(first.trim()).ok().map(|m| m.meta))
}

/// Line-oriented JSON writer. Opening an existing file appends to it; a new
/// file starts with the metadata header.
pub struct JsonlWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl JsonlWriter {
    pub fn create(path: &Path, meta: &OutputMeta) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = JsonlWriter {
            path: path.to_owned(),
            out: BufWriter::new(file),
        };
        w.write(&MetaLine { meta: meta.clone() })?;
        Ok(w)
    }

    pub fn append_or_create(path: &Path, meta: &OutputMeta) -> Result<Self> {
        if path.exists() && std::fs::metadata(path).map(|m| m.len() > 0).unwrap_or(false) {
            let file = OpenOptions::new()
                .append(true)
                .open(path)
                .map_err(|e| Error::io(path, e))?;
            Ok(JsonlWriter {
                path: path.to_owned(),
                out: BufWriter::new(file),
            })
        } else {
            Self::create(path, meta)
        }
    }

    pub fn write<T: Serialize>(&mut self, item: &T) -> Result<()> {
        let line = serde_json::to_string(item)?;
        writeln!(self.out, "{line}").map_err(|e| Error::io(&self.path, e))
    }

    /// Flushes buffered lines so an interrupted run loses nothing written so far.
    pub fn flush(&mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(value)?;
    std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Row {
        id: u32,
    }

    #[test]
    fn header_is_skipped_and_append_keeps_one_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.jsonl");
        let meta = OutputMeta::new("abc", Some(7));
        {
            let mut w = JsonlWriter::append_or_create(&path, &meta).unwrap();
            w.write(&Row { id: 1 }).unwrap();
            w.flush().unwrap();
        }
        {
            let mut w = JsonlWriter::append_or_create(&path, &meta).unwrap();
            w.write(&Row { id: 2 }).unwrap();
            w.flush().unwrap();
        }
        let rows: Vec<Row> = read_jsonl(&path).unwrap();
        assert_eq!(rows, [Row { id: 1 }, Row { id: 2 }]);
        assert_eq!(read_jsonl_meta(&path).unwrap(), Some(meta));
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.matches("\"meta\"").count(), 1);
    }

    #[test]
    fn malformed_line_reports_position() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(&path, "{\"id\": 1}\nnot json\n").unwrap();
        let err = read_jsonl::<Row>(&path).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 2, .. }));
    }
}
