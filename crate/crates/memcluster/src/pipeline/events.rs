//! Append-only event log: newline-delimited JSON with per-line checksums.
//! The log is the run's durable checkpoint; replaying it reconstructs the
//! engine state exactly.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::gateway::CallMeta;
use crate::memory::StepOutcome;
use crate::model::{Mode, RunConfig};

/// One completed step, as logged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEvent {
    pub step: usize,
    pub doc_id: String,
    pub mode: Mode,
    pub outcome: StepOutcome,
    pub memory_size_after: usize,
    pub retries: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub call: Option<CallMeta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Record {
    Config { config: RunConfig },
    Step { event: RunEvent },
}

#[derive(Debug, Serialize, Deserialize)]
struct Line {
    record: Record,
    checksum: String,
}

#[derive(Debug, Error)]
pub enum EventLogError {
    #[error("event log io: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt event log at line {0}")]
    Corrupt(usize),
    #[error("event log is locked by another run: {0}")]
    Locked(String),
}

fn checksum(record: &Record) -> String {
    let payload = serde_json::to_string(record).expect("record serializes");
    let hash = Sha256::digest(payload.as_bytes());
    hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Exclusive writer over one event-log path. A sibling `.lock` file keeps a
/// second run off the same log; it is removed on drop.
pub struct EventLogWriter {
    writer: BufWriter<File>,
    lock_path: std::path::PathBuf,
}

impl EventLogWriter {
    pub fn create(path: &Path) -> Result<Self, EventLogError> {
        Self::open(path, false)
    }

    pub fn append(path: &Path) -> Result<Self, EventLogError> {
        Self::open(path, true)
    }

    fn open(path: &Path, append: bool) -> Result<Self, EventLogError> {
        let lock_path = path.with_extension("lock");
        OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&lock_path)
            .map_err(|_| EventLogError::Locked(lock_path.display().to_string()))?;
        let file = if append {
            OpenOptions::new().append(true).open(path)?
        } else {
            File::create(path)?
        };
        Ok(Self { writer: BufWriter::new(file), lock_path })
    }

    pub fn write(&mut self, record: Record) -> Result<(), EventLogError> {
        let line = Line { checksum: checksum(&record), record };
        serde_json::to_writer(&mut self.writer, &line).map_err(std::io::Error::from)?;
        self.writer.write_all(b"\n")?;
        self.writer.flush()?;
        Ok(())
    }
}

impl Drop for EventLogWriter {
    fn drop(&mut self) {
        let _ = self.writer.flush();
        let _ = std::fs::remove_file(&self.lock_path);
    }
}

/// Reads and checksum-verifies every record.
pub fn read_records(path: &Path) -> Result<Vec<Record>, EventLogError> {
    let file = File::open(path)?;
    let mut records = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Line = serde_json::from_str(&line).map_err(|_| EventLogError::Corrupt(line_no))?;
        if checksum(&parsed.record) != parsed.checksum {
            return Err(EventLogError::Corrupt(line_no));
        }
        records.push(parsed.record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::normalize_label;

    fn sample_event(step: usize) -> RunEvent {
        RunEvent {
            step,
            doc_id: format!("d{step}"),
            mode: Mode::Relaxed,
            outcome: StepOutcome {
                assigned: normalize_label("x").unwrap(),
                created_new: true,
                merge_applied: None,
                rewrites: 0,
            },
            memory_size_after: 1,
            retries: 0,
            call: None,
        }
    }

    #[test]
    fn round_trips_records() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.ndjson");
        {
            let mut w = EventLogWriter::create(&path).unwrap();
            w.write(Record::Config { config: RunConfig::with_k_range(1, 5) }).unwrap();
            w.write(Record::Step { event: sample_event(1) }).unwrap();
        }
        let records = read_records(&path).unwrap();
        assert_eq!(records.len(), 2);
        assert!(matches!(records[0], Record::Config { .. }));
    }

    #[test]
    fn detects_tampered_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.ndjson");
        {
            let mut w = EventLogWriter::create(&path).unwrap();
            w.write(Record::Step { event: sample_event(1) }).unwrap();
            w.write(Record::Step { event: sample_event(2) }).unwrap();
        }
        let content = std::fs::read_to_string(&path).unwrap();
        let tampered = content.replace("\"doc_id\":\"d2\"", "\"doc_id\":\"dX\"");
        std::fs::write(&path, tampered).unwrap();
        assert!(matches!(read_records(&path), Err(EventLogError::Corrupt(2))));
    }

    #[test]
    fn lock_file_blocks_second_writer() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.ndjson");
        let _w = EventLogWriter::create(&path).unwrap();
        assert!(matches!(EventLogWriter::create(&path), Err(EventLogError::Locked(_))));
    }
}
