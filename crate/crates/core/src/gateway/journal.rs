use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{ChatMessage, Conversation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JournalEntry {
    /// RFC 3339, UTC.
    pub timestamp: String,
    pub digest: String,
    pub conversation: Conversation,
    pub response: ChatMessage,
    #[serde(default)]
    pub cached: bool,
}

impl JournalEntry {
    pub fn now(digest: &str, conv: &Conversation, response: &ChatMessage, cached: bool) -> Self {
        Self {
            timestamp: chrono::Utc::now().to_rfc3339(),
            digest: digest.to_string(),
            conversation: conv.clone(),
            response: response.clone(),
            cached,
        }
    }
}

/// Append-only newline-delimited JSON log of every prompt/response pair.
pub struct Journal {
    out: Mutex<BufWriter<File>>,
}

impl Journal {
    pub fn open(path: &Path) -> io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            out: Mutex::new(BufWriter::new(file)),
        })
    }

    /// Write failures are logged, never propagated.
    pub fn append(&self, entry: &JournalEntry) {
        let mut out = self.out.lock().unwrap_or_else(|e| e.into_inner());
        let res = serde_json::to_writer(&mut *out, entry)
            .map_err(io::Error::from)
            .and_then(|_| out.write_all(b"\n"))
            .and_then(|_| out.flush());
        if let Err(e) = res {
            log::warn!("journal write failed: {e}");
        }
    }
}
