//! Game event logs: newline-delimited JSON. The first line is a header
//! carrying the format version and the [`GameSetup`]; every following line
//! is one [`GameEvent`].
//!
//! ```text
//! {"format":"coopqa-events","version":1,"setup":{"question_id":"q0001",...}}
//! {"seq":0,"at":250,"kind":"reveal_word","payload":{"position":1}}
//! {"seq":1,"at":500,"player":"p1","kind":"buzz","payload":{"position":1}}
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use coopqa_core::engine::GameSetup;
use coopqa_core::GameEvent;
use serde::{Deserialize, Serialize};

use crate::io::IoError;

pub const EVENTS_FORMAT: &str = "coopqa-events";
pub const EVENTS_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLogHeader {
    pub format: String,
    pub version: u32,
    pub setup: GameSetup,
}

pub fn write_event_log(path: &Path, setup: &GameSetup, events: &[GameEvent]) -> Result<(), IoError> {
    let wrap = |source| IoError::Open {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(wrap)?);
    let header = EventLogHeader {
        format: EVENTS_FORMAT.into(),
        version: EVENTS_VERSION,
        setup: setup.clone(),
    };
    serde_json::to_writer(&mut w, &header).map_err(|e| wrap(e.into()))?;
    w.write_all(b"\n").map_err(wrap)?;
    for e in events {
        serde_json::to_writer(&mut w, e).map_err(|e| wrap(e.into()))?;
        w.write_all(b"\n").map_err(wrap)?;
    }
    w.flush().map_err(wrap)
}

pub fn read_event_log(path: &Path) -> Result<(GameSetup, Vec<GameEvent>), IoError> {
    let file = File::open(path).map_err(|source| IoError::Open {
        path: path.to_path_buf(),
        source,
    })?;
    let parse = |line: usize, message: String| IoError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut header: Option<EventLogHeader> = None;
    let mut events = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| IoError::Open {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        if header.is_none() {
            let h: EventLogHeader = serde_json::from_str(&line).map_err(|e| parse(i + 1, e.to_string()))?;
            if h.format != EVENTS_FORMAT || h.version != EVENTS_VERSION {
                return Err(parse(
                    i + 1,
                    format!("expected {EVENTS_FORMAT} version {EVENTS_VERSION}, found {} version {}", h.format, h.version),
                ));
            }
            header = Some(h);
        } else {
            events.push(serde_json::from_str(&line).map_err(|e| parse(i + 1, e.to_string()))?);
        }
    }
    let header = header.ok_or_else(|| parse(1, "missing header".into()))?;
    Ok((header.setup, events))
}
