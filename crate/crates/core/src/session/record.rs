//! Persisted session records.
//!
//! A record is stored as JSON lines: a `header` line with session metadata,
//! one `entry` line per submission (accepted or not) in arrival order, then
//! `window` lines for the final aggregation windows and `moderation` lines for
//! warnings and bans. [`FileStore`] writes one such file per session plus an
//! `index.jsonl` with one summary line per stored session.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use crate::aggregation::AggregationWindow;
use crate::analytics::{AnalyticsConfig, AnalyticsSnapshot};
use crate::error::StoreError;
use crate::model::{AnonUserId, Reaction, ReactionType, SessionId, Timestamp};
use crate::moderation::{ModerationConfig, ModerationVerdict};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMeta {
    pub session_id: SessionId,
    pub created_at: Timestamp,
    pub ended_at: Timestamp,
    pub window_len_ms: u64,
    pub moderation: ModerationConfig,
    pub analytics: AnalyticsConfig,
    pub participants: u32,
}

/// One submission and the verdict it received.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub seq: u64,
    pub user: AnonUserId,
    pub kind: ReactionType,
    pub at: Timestamp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub client_time: Option<Timestamp>,
    pub verdict: ModerationVerdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModerationAction {
    Warned,
    Banned,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModerationEvent {
    pub user: AnonUserId,
    pub at: Timestamp,
    pub action: ModerationAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub meta: SessionMeta,
    pub entries: Vec<LogEntry>,
    pub windows: Vec<AggregationWindow>,
    pub moderation_events: Vec<ModerationEvent>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum RecordLine {
    Header(SessionMeta),
    Entry(LogEntry),
    Window(AggregationWindow),
    Moderation(ModerationEvent),
}

impl SessionRecord {
    pub fn accepted_reactions(&self) -> Vec<Reaction> {
        self.entries
            .iter()
            .filter(|e| e.verdict.is_accepted())
            .map(|e| Reaction {
                session: self.meta.session_id.clone(),
                user: e.user.clone(),
                kind: e.kind,
                at: e.at,
            })
            .collect()
    }

    pub fn accepted_count(&self) -> usize {
        self.entries.iter().filter(|e| e.verdict.is_accepted()).count()
    }

    /// Dashboard values as of session end.
    pub fn analytics(&self) -> AnalyticsSnapshot {
        AnalyticsSnapshot::compute(&self.accepted_reactions(), self.meta.ended_at, &self.meta.analytics)
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<(), StoreError> {
        let mut line = |l: &RecordLine| -> Result<(), StoreError> {
            serde_json::to_writer(&mut w, l)?;
            w.write_all(b"\n")?;
            Ok(())
        };
        line(&RecordLine::Header(self.meta.clone()))?;
        for e in &self.entries {
            line(&RecordLine::Entry(e.clone()))?;
        }
        for win in &self.windows {
            line(&RecordLine::Window(win.clone()))?;
        }
        for m in &self.moderation_events {
            line(&RecordLine::Moderation(m.clone()))?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self, StoreError> {
        let mut meta = None;
        let mut entries = Vec::new();
        let mut windows = Vec::new();
        let mut moderation_events = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: RecordLine = serde_json::from_str(&line)
                .map_err(|source| StoreError::Malformed { line: i + 1, source })?;
            match parsed {
                RecordLine::Header(m) => meta = Some(m),
                RecordLine::Entry(e) => entries.push(e),
                RecordLine::Window(w) => windows.push(w),
                RecordLine::Moderation(m) => moderation_events.push(m),
            }
        }
        Ok(SessionRecord {
            meta: meta.ok_or(StoreError::MissingHeader)?,
            entries,
            windows,
            moderation_events,
        })
    }

    pub fn from_jsonl(s: &str) -> Result<Self, StoreError> {
        Self::read_jsonl(s.as_bytes())
    }
}

pub trait RecordStore: Send + Sync {
    fn save(&self, record: &SessionRecord) -> Result<(), StoreError>;
    fn load(&self, id: &SessionId) -> Result<Option<SessionRecord>, StoreError>;
}

#[derive(Debug, Default)]
pub struct MemoryStore {
    records: Mutex<HashMap<SessionId, String>>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Raw JSON-lines text as stored.
    pub fn raw(&self, id: &SessionId) -> Option<String> {
        self.records.lock().get(id).cloned()
    }
}

impl RecordStore for MemoryStore {
    fn save(&self, record: &SessionRecord) -> Result<(), StoreError> {
        self.records
            .lock()
            .insert(record.meta.session_id.clone(), record.to_jsonl());
        Ok(())
    }

    fn load(&self, id: &SessionId) -> Result<Option<SessionRecord>, StoreError> {
        self.records
            .lock()
            .get(id)
            .map(|s| SessionRecord::from_jsonl(s))
            .transpose()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub session_id: SessionId,
    pub created_at: Timestamp,
    pub ended_at: Timestamp,
    pub submissions: usize,
    pub accepted: usize,
    pub file: String,
}

/// One `<ID>.jsonl` per session under `dir`, plus `index.jsonl`.
#[derive(Debug)]
pub struct FileStore {
    dir: PathBuf,
    index_lock: Mutex<()>,
}

impl FileStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(FileStore {
            dir,
            index_lock: Mutex::new(()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn record_path(&self, id: &SessionId) -> PathBuf {
        self.dir.join(format!("{id}.jsonl"))
    }

    pub fn index_path(&self) -> PathBuf {
        self.dir.join("index.jsonl")
    }

    pub fn index(&self) -> Result<Vec<IndexEntry>, StoreError> {
        let path = self.index_path();
        if !path.exists() {
            return Ok(Vec::new());
        }
        let reader = BufReader::new(File::open(path)?);
        let mut out = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(
                serde_json::from_str(&line)
                    .map_err(|source| StoreError::Malformed { line: i + 1, source })?,
            );
        }
        Ok(out)
    }
}

impl RecordStore for FileStore {
    fn save(&self, record: &SessionRecord) -> Result<(), StoreError> {
        let id = &record.meta.session_id;
        let path = self.record_path(id);
        let tmp = path.with_extension("jsonl.tmp");
        {
            let mut w = BufWriter::new(File::create(&tmp)?);
            record.write_jsonl(&mut w)?;
            w.flush()?;
        }
        fs::rename(&tmp, &path)?;

        let entry = IndexEntry {
            session_id: id.clone(),
            created_at: record.meta.created_at,
            ended_at: record.meta.ended_at,
            submissions: record.entries.len(),
            accepted: record.accepted_count(),
            file: format!("{id}.jsonl"),
        };
        let _guard = self.index_lock.lock();
        let mut index = OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.index_path())?;
        serde_json::to_writer(&mut index, &entry)?;
        index.write_all(b"\n")?;
        Ok(())
    }

    fn load(&self, id: &SessionId) -> Result<Option<SessionRecord>, StoreError> {
        let path = self.record_path(id);
        if !path.exists() {
            return Ok(None);
        }
        SessionRecord::read_jsonl(BufReader::new(File::open(path)?)).map(Some)
    }
}
