use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use sha2::{Digest, Sha256};

use super::{ChatMessage, Conversation, GenerationParams};

/// Stable hex digest of a request: the message list plus generation params.
pub fn cache_key(conv: &Conversation, params: &GenerationParams) -> String {
    let payload = serde_json::to_vec(&(&conv.messages, params))
        .expect("conversation and params serialize to json");
    hex::encode(Sha256::digest(&payload))
}

/// Response cache keyed by [`cache_key`]. With a directory configured each
/// entry is also stored as `<dir>/<digest>.json` and survives restarts.
///
/// Disk failures are logged and the cache keeps working from memory.
#[derive(Debug, Default)]
pub struct ResponseCache {
    dir: Option<PathBuf>,
    entries: Mutex<HashMap<String, ChatMessage>>,
    key_locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl ResponseCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn on_disk(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self {
            dir: Some(dir),
            ..Self::default()
        })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    /// Lock serializing lookups of one key, so concurrent identical
    /// requests reach the backend once.
    pub fn key_lock(&self, key: &str) -> Arc<Mutex<()>> {
        self.key_locks
            .lock()
            .unwrap()
            .entry(key.to_string())
            .or_default()
            .clone()
    }

    pub fn get(&self, key: &str) -> Option<ChatMessage> {
        if let Some(hit) = self.entries.lock().unwrap().get(key) {
            return Some(hit.clone());
        }
        let path = self.dir.as_ref()?.join(format!("{key}.json"));
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return None,
            Err(e) => {
                log::warn!("cache read {} failed: {e}", path.display());
                return None;
            }
        };
        match serde_json::from_slice::<ChatMessage>(&bytes) {
            Ok(msg) => {
                self.entries
                    .lock()
                    .unwrap()
                    .insert(key.to_string(), msg.clone());
                Some(msg)
            }
            Err(e) => {
                log::warn!("ignoring corrupt cache entry {}: {e}", path.display());
                None
            }
        }
    }

    pub fn put(&self, key: &str, msg: &ChatMessage) {
        self.entries
            .lock()
            .unwrap()
            .insert(key.to_string(), msg.clone());
        if let Some(dir) = &self.dir {
            if let Err(e) = write_atomic(&dir.join(format!("{key}.json")), msg) {
                log::warn!("cache write to {} failed: {e}", dir.display());
            }
        }
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn write_atomic(path: &Path, msg: &ChatMessage) -> io::Result<()> {
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, serde_json::to_vec(msg)?)?;
    fs::rename(&tmp, path)
}
