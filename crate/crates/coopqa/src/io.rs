//! Question, document and index files.
//!
//! Questions and documents are newline-delimited JSON, one record per line:
//!
//! ```text
//! {"id": "q0001", "text": "This essay ...", "answer": "Civil Disobedience"}
//! {"id": "wiki-7", "kind": "wikipedia", "label": "Civil Disobedience", "text": "..."}
//! ```
//!
//! Blank lines are skipped. The index is a single JSON object
//! `{"format": "coopqa-index", "version": 1, "index": {...}}`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use coopqa_core::corpus::{validate_documents, validate_questions, CorpusError};
use coopqa_core::{Document, Index, Question};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const INDEX_FORMAT: &str = "coopqa-index";
pub const INDEX_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Open { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{path}: {source}")]
    Invalid { path: PathBuf, source: CorpusError },
    #[error("{path}: expected format {INDEX_FORMAT:?} version {INDEX_VERSION}, found {format:?} version {version}")]
    IndexVersion { path: PathBuf, format: String, version: u32 },
    #[error("{path}: {message}")]
    Index { path: PathBuf, message: String },
}

fn open(path: &Path) -> Result<File, IoError> {
    File::open(path).map_err(|source| IoError::Open {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads one JSON value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, IoError> {
    let reader = BufReader::new(open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| IoError::Open {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| IoError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(value);
    }
    Ok(out)
}

pub fn write_jsonl<'a, T: Serialize + 'a>(path: &Path, items: impl IntoIterator<Item = &'a T>) -> Result<(), IoError> {
    let wrap = |source| IoError::Open {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(wrap)?);
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| wrap(e.into()))?;
        w.write_all(b"\n").map_err(wrap)?;
    }
    w.flush().map_err(wrap)
}

pub fn load_questions(path: &Path) -> Result<Vec<Question>, IoError> {
    let questions: Vec<Question> = read_jsonl(path)?;
    validate_questions(&questions).map_err(|source| IoError::Invalid {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(questions)
}

pub fn load_documents(path: &Path) -> Result<Vec<Document>, IoError> {
    let documents: Vec<Document> = read_jsonl(path)?;
    validate_documents(&documents).map_err(|source| IoError::Invalid {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(documents)
}

#[derive(Serialize, Deserialize)]
struct IndexFile<I> {
    format: String,
    version: u32,
    index: I,
}

#[derive(Deserialize)]
struct IndexHeader {
    format: String,
    version: u32,
}

pub fn save_index(path: &Path, index: &Index) -> Result<(), IoError> {
    let wrap = |source| IoError::Open {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(wrap)?);
    let file = IndexFile {
        format: INDEX_FORMAT.to_string(),
        version: INDEX_VERSION,
        index,
    };
    serde_json::to_writer(&mut w, &file).map_err(|e| wrap(e.into()))?;
    w.flush().map_err(wrap)
}

pub fn load_index(path: &Path) -> Result<Index, IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::Open {
        path: path.to_path_buf(),
        source,
    })?;
    let bad = |e: serde_json::Error| IoError::Index {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let header: IndexHeader = serde_json::from_str(&text).map_err(bad)?;
    if header.format != INDEX_FORMAT || header.version != INDEX_VERSION {
        return Err(IoError::IndexVersion {
            path: path.to_path_buf(),
            format: header.format,
            version: header.version,
        });
    }
    let file: IndexFile<Index> = serde_json::from_str(&text).map_err(bad)?;
    Ok(file.index)
}
