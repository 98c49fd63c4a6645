//! Deterministic backend for tests and offline runs.
//!
//! Two modes:
//!
//! * **keyed**: the reply is looked up by the content of the latest user
//!   message. Exact entries are tried first, then `"match": "contains"`
//!   entries (substring of the user message) in declaration order. An entry
//!   may carry a `context` string that must appear in an earlier message of
//!   the conversation; such entries win over context-free ones, which lets
//!   one script serve several documents that share the same questions.
//! * **playback**: replies are returned in recorded order, optionally
//!   checking each user message against the recording.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{ChatBackend, ChatMessage, Conversation, GatewayError, GenerationParams};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    #[default]
    Exact,
    Contains,
}

impl MatchMode {
    fn is_exact(&self) -> bool {
        *self == MatchMode::Exact
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub user: String,
    pub response: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
    #[serde(default, rename = "match", skip_serializing_if = "MatchMode::is_exact")]
    pub match_mode: MatchMode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaybackTurn {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user: Option<String>,
    pub assistant: String,
}

/// On-disk script: JSON with optional `context`, `entries` and `turns`.
///
/// ```json
/// { "context": "Monroe",
///   "entries": [{"user": "ping", "response": "pong"}],
///   "turns": [{"user": "Is there text ...", "assistant": "Yes"}] }
/// ```
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
    #[serde(default)]
    pub entries: Vec<ScriptEntry>,
    #[serde(default)]
    pub turns: Vec<PlaybackTurn>,
}

impl ScriptFile {
    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GatewayError::Config(format!("reading {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| GatewayError::Config(format!("parsing {}: {e}", path.display())))
    }

    /// Entries plus turns that name their user message, with the file-level
    /// context applied where an entry has none.
    pub fn keyed_entries(&self) -> Vec<ScriptEntry> {
        let from_turns = self.turns.iter().filter_map(|t| {
            t.user.as_ref().map(|u| ScriptEntry {
                user: u.clone(),
                response: t.assistant.clone(),
                context: None,
                match_mode: MatchMode::Exact,
            })
        });
        self.entries
            .iter()
            .cloned()
            .chain(from_turns)
            .map(|mut e| {
                if e.context.is_none() {
                    e.context = self.context.clone();
                }
                e
            })
            .collect()
    }
}

#[derive(Debug)]
enum Mode {
    Keyed(Vec<ScriptEntry>),
    Playback {
        turns: Vec<PlaybackTurn>,
        cursor: Mutex<usize>,
    },
}

#[derive(Debug)]
pub struct ScriptedBackend {
    mode: Mode,
    calls: AtomicUsize,
}

impl ScriptedBackend {
    pub fn keyed() -> Self {
        Self::from_entries(Vec::new())
    }

    pub fn from_entries(entries: Vec<ScriptEntry>) -> Self {
        Self {
            mode: Mode::Keyed(entries),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn playback(turns: Vec<PlaybackTurn>) -> Self {
        Self {
            mode: Mode::Playback {
                turns,
                cursor: Mutex::new(0),
            },
            calls: AtomicUsize::new(0),
        }
    }

    /// Load every `*.json` script in `dir` (sorted by file name) as keyed
    /// entries.
    pub fn from_dir(dir: &Path) -> Result<Self, GatewayError> {
        let read = std::fs::read_dir(dir)
            .map_err(|e| GatewayError::Config(format!("reading {}: {e}", dir.display())))?;
        let mut paths: Vec<_> = read
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut entries = Vec::new();
        for p in &paths {
            entries.extend(ScriptFile::load(p)?.keyed_entries());
        }
        Ok(Self::from_entries(entries))
    }

    /// Add a keyed entry (builder style).
    pub fn on(self, user: impl Into<String>, response: impl Into<String>) -> Self {
        self.push_entry(ScriptEntry {
            user: user.into(),
            response: response.into(),
            context: None,
            match_mode: MatchMode::Exact,
        })
    }

    /// Reply to any user message containing `fragment`.
    pub fn on_containing(self, fragment: impl Into<String>, response: impl Into<String>) -> Self {
        self.push_entry(ScriptEntry {
            user: fragment.into(),
            response: response.into(),
            context: None,
            match_mode: MatchMode::Contains,
        })
    }

    pub fn on_in_context(
        self,
        user: impl Into<String>,
        context: impl Into<String>,
        response: impl Into<String>,
    ) -> Self {
        self.push_entry(ScriptEntry {
            user: user.into(),
            response: response.into(),
            context: Some(context.into()),
            match_mode: MatchMode::Exact,
        })
    }

    fn push_entry(mut self, entry: ScriptEntry) -> Self {
        match &mut self.mode {
            Mode::Keyed(entries) => entries.push(entry),
            Mode::Playback { turns, .. } => turns.push(PlaybackTurn {
                user: Some(entry.user),
                assistant: entry.response,
            }),
        }
        self
    }

    /// Number of `complete` calls received, matched or not.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    /// Playback turns not yet consumed (always 0 in keyed mode).
    pub fn remaining(&self) -> usize {
        match &self.mode {
            Mode::Keyed(_) => 0,
            Mode::Playback { turns, cursor } => turns.len() - *cursor.lock().unwrap(),
        }
    }

    fn lookup(entries: &[ScriptEntry], conv: &Conversation, last_user: &str) -> Option<String> {
        let earlier = &conv.messages[..conv.messages.len().saturating_sub(1)];
        let in_context = |ctx: &str| earlier.iter().any(|m| m.content.contains(ctx));
        let pick = |mode: MatchMode| {
            let candidates = || {
                entries.iter().filter(move |e| {
                    e.match_mode == mode
                        && match mode {
                            MatchMode::Exact => e.user == last_user,
                            MatchMode::Contains => last_user.contains(&e.user),
                        }
                })
            };
            candidates()
                .find(|e| e.context.as_deref().is_some_and(in_context))
                .or_else(|| candidates().find(|e| e.context.is_none()))
                .map(|e| e.response.clone())
        };
        pick(MatchMode::Exact).or_else(|| pick(MatchMode::Contains))
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(
        &self,
        conv: &Conversation,
        _params: &GenerationParams,
    ) -> Result<ChatMessage, GatewayError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let last_user = conv
            .last_user()
            .map(|m| m.content.clone())
            .unwrap_or_default();
        let no_match = || GatewayError::NoScriptMatch {
            last_user: last_user.clone(),
        };
        match &self.mode {
            Mode::Keyed(entries) => Self::lookup(entries, conv, &last_user)
                .map(ChatMessage::assistant)
                .ok_or_else(no_match),
            Mode::Playback { turns, cursor } => {
                let mut pos = cursor.lock().unwrap();
                let turn = turns.get(*pos).ok_or_else(no_match)?;
                if turn.user.as_ref().is_some_and(|u| *u != last_user) {
                    return Err(no_match());
                }
                *pos += 1;
                Ok(ChatMessage::assistant(turn.assistant.clone()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conv_with(system: Option<&str>, user: &str) -> Conversation {
        let mut c = match system {
            Some(s) => Conversation::with_system(s),
            None => Conversation::new(),
        };
        c.push_user(user);
        c
    }

    #[test]
    fn exact_match() {
        let b = ScriptedBackend::keyed().on("ping", "pong");
        let reply = b
            .complete(&conv_with(None, "ping"), &GenerationParams::default())
            .unwrap();
        assert_eq!(reply.content, "pong");
        assert_eq!(reply.role, super::super::Role::Assistant);
    }

    #[test]
    fn unmatched_is_error() {
        let b = ScriptedBackend::keyed().on("ping", "pong");
        let err = b
            .complete(&conv_with(None, "PING"), &GenerationParams::default())
            .unwrap_err();
        assert!(matches!(err, GatewayError::NoScriptMatch { .. }));
        assert_eq!(b.calls(), 1);
    }

    #[test]
    fn context_entries_take_precedence() {
        let b = ScriptedBackend::keyed().on("q", "generic").on_in_context(
            "q",
            "Monroe",
            "monroe-specific",
        );
        let p = GenerationParams::default();
        assert_eq!(
            b.complete(&conv_with(Some("Monroe text"), "q"), &p)
                .unwrap()
                .content,
            "monroe-specific"
        );
        assert_eq!(
            b.complete(&conv_with(Some("Laramie text"), "q"), &p)
                .unwrap()
                .content,
            "generic"
        );
    }

    #[test]
    fn contains_entries_after_exact_in_order() {
        let b = ScriptedBackend::keyed()
            .on_containing("Section 7", "excerpt")
            .on_containing("Excerpt:", "fallback")
            .on("Excerpt: exact", "exact");
        let p = GenerationParams::default();
        assert_eq!(
            b.complete(&conv_with(None, "Excerpt: exact"), &p)
                .unwrap()
                .content,
            "exact"
        );
        assert_eq!(
            b.complete(&conv_with(None, "Excerpt: Section 7 ..."), &p)
                .unwrap()
                .content,
            "excerpt"
        );
        assert_eq!(
            b.complete(&conv_with(None, "Excerpt: other"), &p)
                .unwrap()
                .content,
            "fallback"
        );
        assert!(b.complete(&conv_with(None, "nothing"), &p).is_err());
        let e: ScriptEntry =
            serde_json::from_str(r#"{"user":"a","response":"b","match":"contains"}"#).unwrap();
        assert_eq!(e.match_mode, MatchMode::Contains);
    }

    #[test]
    fn context_only_entry_does_not_leak() {
        let b = ScriptedBackend::keyed().on_in_context("q", "Monroe", "x");
        let p = GenerationParams::default();
        assert!(b.complete(&conv_with(Some("Laramie"), "q"), &p).is_err());
    }

    #[test]
    fn playback_in_order_and_checked() {
        let b = ScriptedBackend::playback(vec![
            PlaybackTurn {
                user: Some("one".into()),
                assistant: "1".into(),
            },
            PlaybackTurn {
                user: None,
                assistant: "2".into(),
            },
        ]);
        let p = GenerationParams::default();
        assert!(b.complete(&conv_with(None, "wrong"), &p).is_err());
        assert_eq!(
            b.complete(&conv_with(None, "one"), &p).unwrap().content,
            "1"
        );
        assert_eq!(
            b.complete(&conv_with(None, "anything"), &p)
                .unwrap()
                .content,
            "2"
        );
        assert_eq!(b.remaining(), 0);
        assert!(b.complete(&conv_with(None, "more"), &p).is_err());
    }

    #[test]
    fn script_dir_loading() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("a.json"),
            r#"{"context": "Monroe", "turns": [{"user": "q", "assistant": "Yes"}]}"#,
        )
        .unwrap();
        std::fs::write(
            dir.path().join("b.json"),
            r#"{"entries": [{"user": "q", "response": "No"}]}"#,
        )
        .unwrap();
        std::fs::write(dir.path().join("ignored.txt"), "x").unwrap();
        let b = ScriptedBackend::from_dir(dir.path()).unwrap();
        let p = GenerationParams::default();
        assert_eq!(
            b.complete(&conv_with(Some("Monroe"), "q"), &p)
                .unwrap()
                .content,
            "Yes"
        );
        assert_eq!(
            b.complete(&conv_with(Some("Ottawa"), "q"), &p)
                .unwrap()
                .content,
            "No"
        );
    }
}
