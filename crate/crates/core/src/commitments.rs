//! Five-item pledges and share events in an append-only JSON-lines log. The
//! public counter is the number of commit lines; it is rebuilt by replaying
//! the log on open.
//!
//! Log lines, one object each:
//!
//! ```text
//! {"t":"2020-06-01T12:00:00.000Z","id":"…","kind":"commit","items":[true,true,true,true,true]}
//! {"t":"2020-06-01T12:00:05.000Z","id":"…","kind":"share","channel":"facebook"}
//! ```

use std::collections::HashSet;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ITEM_NAMES: [&str; 5] = ["leave_home_less", "wash_hands", "distance_6ft", "wear_mask", "stay_connected"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CommitmentError {
    #[error("a commitment needs at least one item")]
    AllItemsFalse,
    #[error("unknown commitment id `{0}`")]
    UnknownId(String),
    #[error("unknown share channel `{0}` (expected facebook or twitter)")]
    UnknownChannel(String),
    #[error("commitment log write failed: {0}")]
    StorageFailure(String),
    #[error("commitment log line {line}: {reason}")]
    CorruptLog { line: usize, reason: String },
}

/// The five pledge flags, in `ITEM_NAMES` order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "[bool; 5]", into = "[bool; 5]")]
pub struct CommitmentItems([bool; 5]);

impl CommitmentItems {
    pub fn new(flags: [bool; 5]) -> Result<Self, CommitmentError> {
        if flags.iter().any(|&f| f) {
            Ok(Self(flags))
        } else {
            Err(CommitmentError::AllItemsFalse)
        }
    }

    pub fn all() -> Self {
        Self([true; 5])
    }

    pub fn flags(&self) -> [bool; 5] {
        self.0
    }
}

impl TryFrom<[bool; 5]> for CommitmentItems {
    type Error = CommitmentError;

    fn try_from(flags: [bool; 5]) -> Result<Self, Self::Error> {
        Self::new(flags)
    }
}

impl From<CommitmentItems> for [bool; 5] {
    fn from(items: CommitmentItems) -> Self {
        items.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Facebook,
    Twitter,
}

impl Channel {
    pub fn as_str(&self) -> &'static str {
        match self {
            Channel::Facebook => "facebook",
            Channel::Twitter => "twitter",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Channel {
    type Err = CommitmentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "facebook" => Ok(Channel::Facebook),
            "twitter" => Ok(Channel::Twitter),
            other => Err(CommitmentError::UnknownChannel(other.to_string())),
        }
    }
}

#[derive(Serialize)]
struct CommitLine<'a> {
    t: &'a str,
    id: &'a str,
    kind: &'static str,
    items: CommitmentItems,
}

#[derive(Serialize)]
struct ShareLine<'a> {
    t: &'a str,
    id: &'a str,
    kind: &'static str,
    channel: Channel,
}

#[derive(Deserialize)]
struct AnyLine {
    t: DateTime<Utc>,
    id: String,
    kind: String,
    items: Option<CommitmentItems>,
    channel: Option<Channel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ShareTally {
    pub facebook: u64,
    pub twitter: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Receipt {
    pub id: String,
    pub total: u64,
}

struct Writer {
    file: File,
    len: u64,
    ids: HashSet<String>,
    seq: u64,
    last_t: DateTime<Utc>,
    /// Test hook: fail the next append after writing this many bytes.
    fail_after: Option<usize>,
}

pub struct CommitmentStore {
    path: PathBuf,
    writer: Mutex<Writer>,
    total: AtomicU64,
    facebook: AtomicU64,
    twitter: AtomicU64,
}

impl fmt::Debug for CommitmentStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CommitmentStore")
            .field("path", &self.path)
            .field("total", &self.total())
            .finish()
    }
}

fn storage(e: io::Error) -> CommitmentError {
    CommitmentError::StorageFailure(e.to_string())
}

impl CommitmentStore {
    /// Opens or creates the log and replays it. A torn final line (no
    /// trailing newline) is cut off; any other unreadable line is an error.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, CommitmentError> {
        let path = path.as_ref().to_path_buf();
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)
            .map_err(storage)?;
        let mut text = Vec::new();
        file.read_to_end(&mut text).map_err(storage)?;

        let complete = text.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
        if complete < text.len() {
            tracing::warn!(
                path = %path.display(),
                bytes = text.len() - complete,
                "dropping torn final line of commitment log"
            );
            file.set_len(complete as u64).map_err(storage)?;
            file.seek(SeekFrom::End(0)).map_err(storage)?;
        }

        let mut ids = HashSet::new();
        let (mut total, mut tally) = (0u64, ShareTally::default());
        let mut last_t = DateTime::<Utc>::MIN_UTC;
        for (n, raw) in text[..complete].split(|&b| b == b'\n').enumerate() {
            if raw.is_empty() {
                continue;
            }
            let corrupt = |reason: String| CommitmentError::CorruptLog { line: n + 1, reason };
            let line: AnyLine = serde_json::from_slice(raw).map_err(|e| corrupt(e.to_string()))?;
            last_t = last_t.max(line.t);
            match (line.kind.as_str(), line.items, line.channel) {
                ("commit", Some(_), None) => {
                    if !ids.insert(line.id) {
                        return Err(corrupt("duplicate commitment id".into()));
                    }
                    total += 1;
                }
                ("share", None, Some(channel)) => {
                    if !ids.contains(&line.id) {
                        return Err(corrupt(format!("share for unknown id `{}`", line.id)));
                    }
                    match channel {
                        Channel::Facebook => tally.facebook += 1,
                        Channel::Twitter => tally.twitter += 1,
                    }
                }
                _ => return Err(corrupt(format!("unexpected record of kind `{}`", line.kind))),
            }
        }

        Ok(Self {
            path,
            writer: Mutex::new(Writer {
                file,
                len: complete as u64,
                ids,
                seq: total,
                last_t,
                fail_after: None,
            }),
            total: AtomicU64::new(total),
            facebook: AtomicU64::new(tally.facebook),
            twitter: AtomicU64::new(tally.twitter),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Number of commit records; lock-free, may trail an in-flight append.
    pub fn total(&self) -> u64 {
        self.total.load(Ordering::Acquire)
    }

    pub fn shares(&self) -> ShareTally {
        ShareTally {
            facebook: self.facebook.load(Ordering::Acquire),
            twitter: self.twitter.load(Ordering::Acquire),
        }
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Writer> {
        // a panic mid-append leaves the file consistent (append or truncate), so recover
        self.writer.lock().unwrap_or_else(|p| p.into_inner())
    }

    /// Appends `line` and syncs it, or restores the previous length on failure.
    fn append(w: &mut Writer, mut line: Vec<u8>) -> Result<(), CommitmentError> {
        line.push(b'\n');
        let result = match w.fail_after.take() {
            Some(n) => w
                .file
                .write_all(&line[..n.min(line.len())])
                .and(Err(io::Error::other("injected write failure"))),
            None => w.file.write_all(&line).and_then(|_| w.file.sync_data()),
        };
        match result {
            Ok(()) => {
                w.len += line.len() as u64;
                Ok(())
            }
            Err(e) => {
                if let Err(t) = w.file.set_len(w.len) {
                    tracing::error!(error = %t, "could not roll back partial commitment log write");
                }
                Err(storage(e))
            }
        }
    }

    fn now(w: &mut Writer) -> (DateTime<Utc>, String) {
        let t = Utc::now().max(w.last_t);
        w.last_t = t;
        (t, t.to_rfc3339_opts(SecondsFormat::Millis, true))
    }

    pub fn make_commitment(&self, items: CommitmentItems) -> Result<Receipt, CommitmentError> {
        let mut w = self.lock();
        let (t, stamp) = Self::now(&mut w);
        let id = format!("{:x}-{:x}", t.timestamp_millis(), w.seq + 1);
        let line = serde_json::to_vec(&CommitLine {
            t: &stamp,
            id: &id,
            kind: "commit",
            items,
        })
        .expect("log lines serialize");
        Self::append(&mut w, line)?;
        w.seq += 1;
        w.ids.insert(id.clone());
        let total = self.total.fetch_add(1, Ordering::AcqRel) + 1;
        Ok(Receipt { id, total })
    }

    pub fn record_share(&self, id: &str, channel: &str) -> Result<(), CommitmentError> {
        let channel: Channel = channel.parse()?;
        let mut w = self.lock();
        if !w.ids.contains(id) {
            return Err(CommitmentError::UnknownId(id.to_string()));
        }
        let (_, stamp) = Self::now(&mut w);
        let line = serde_json::to_vec(&ShareLine {
            t: &stamp,
            id,
            kind: "share",
            channel,
        })
        .expect("log lines serialize");
        Self::append(&mut w, line)?;
        match channel {
            Channel::Facebook => self.facebook.fetch_add(1, Ordering::AcqRel),
            Channel::Twitter => self.twitter.fetch_add(1, Ordering::AcqRel),
        };
        Ok(())
    }

    /// Flushes and syncs the log file.
    pub fn sync(&self) -> Result<(), CommitmentError> {
        let mut w = self.lock();
        w.file.flush().map_err(storage)?;
        w.file.sync_all().map_err(storage)
    }

    #[doc(hidden)]
    pub fn inject_write_failure(&self, after_bytes: usize) {
        self.lock().fail_after = Some(after_bytes);
    }
}
