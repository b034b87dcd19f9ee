//! Append-only gameplay record store: one JSON [`GameRecord`] per line.
//!
//! A store has a single writer. Each append validates the record, writes
//! one line and syncs it to disk; earlier bytes are never rewritten.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use coopqa_core::record::RecordError;
use coopqa_core::sampler::ExposureHistory;
use coopqa_core::{GameRecord, Group};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid record for {player:?} on {question:?}: {source}")]
    Invalid {
        player: String,
        question: String,
        source: RecordError,
    },
    #[error("{path}:{line}: corrupt record: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
}

/// Which records to return; unset fields match everything.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RecordFilter {
    pub group: Option<Group>,
    pub player: Option<String>,
    pub question: Option<String>,
}

impl RecordFilter {
    pub fn group(group: Group) -> Self {
        Self {
            group: Some(group),
            ..Self::default()
        }
    }

    pub fn matches(&self, r: &GameRecord) -> bool {
        self.group.is_none_or(|g| g == r.group)
            && self.player.as_deref().is_none_or(|p| p == r.player_id)
            && self.question.as_deref().is_none_or(|q| q == r.question_id)
    }
}

#[derive(Debug)]
pub struct RecordStore {
    path: PathBuf,
    file: File,
}

impl RecordStore {
    /// Opens `path` for appending, creating it if needed.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let path = path.into();
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|source| StoreError::Io {
                path: path.clone(),
                source,
            })?;
        Ok(Self { path, file })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, record: &GameRecord) -> Result<(), StoreError> {
        record.validate().map_err(|source| StoreError::Invalid {
            player: record.player_id.clone(),
            question: record.question_id.clone(),
            source,
        })?;
        let mut line = serde_json::to_vec(record).expect("records serialize");
        line.push(b'\n');
        let io = |source| StoreError::Io {
            path: self.path.clone(),
            source,
        };
        self.file.write_all(&line).map_err(io)?;
        self.file.sync_data().map_err(io)
    }

    /// Appends a batch with a single sync at the end. Every record is
    /// validated before anything is written.
    pub fn append_all<'a>(&mut self, records: impl IntoIterator<Item = &'a GameRecord>) -> Result<usize, StoreError> {
        let records: Vec<&GameRecord> = records.into_iter().collect();
        for r in &records {
            r.validate().map_err(|source| StoreError::Invalid {
                player: r.player_id.clone(),
                question: r.question_id.clone(),
                source,
            })?;
        }
        let mut buf = Vec::new();
        for r in &records {
            serde_json::to_writer(&mut buf, r).expect("records serialize");
            buf.push(b'\n');
        }
        let io = |source| StoreError::Io {
            path: self.path.clone(),
            source,
        };
        self.file.write_all(&buf).map_err(io)?;
        self.file.sync_data().map_err(io)?;
        Ok(records.len())
    }
}

/// Matching records in append order. A missing file is an empty store.
pub fn read_all(path: &Path, filter: &RecordFilter) -> Result<Vec<GameRecord>, StoreError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(source) => {
            return Err(StoreError::Io {
                path: path.to_path_buf(),
                source,
            })
        }
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| StoreError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let corrupt = |message: String| StoreError::Corrupt {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let record: GameRecord = serde_json::from_str(&line).map_err(|e| corrupt(e.to_string()))?;
        record.validate().map_err(|e| corrupt(e.to_string()))?;
        if filter.matches(&record) {
            out.push(record);
        }
    }
    Ok(out)
}

pub fn save_history(path: &Path, history: &ExposureHistory) -> Result<(), StoreError> {
    let io = |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    };
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, serde_json::to_vec_pretty(history).expect("history serializes")).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

/// The saved history, or `None` if there is none yet.
pub fn load_history(path: &Path) -> Result<Option<ExposureHistory>, StoreError> {
    match std::fs::read(path) {
        Ok(bytes) => serde_json::from_slice(&bytes).map(Some).map_err(|e| StoreError::Corrupt {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        }),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(source) => Err(StoreError::Io {
            path: path.to_path_buf(),
            source,
        }),
    }
}
