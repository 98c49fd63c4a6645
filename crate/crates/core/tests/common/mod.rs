#![allow(dead_code)]

use std::path::{Path, PathBuf};

use serde::Deserialize;

use ordex::gateway::{Conversation, PlaybackTurn, ScriptedBackend};
use ordex::ingest::Jurisdiction;
use ordex::ordinance::{record_from_run, ExtractConfig, FeatureType, OrdinanceRecord};
use ordex::tree::{run, transcript};

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
}

#[derive(Debug, Deserialize)]
pub struct ReferenceTurn {
    /// The question as recorded, which abridges some prompts.
    pub user: String,
    pub assistant: String,
}

#[derive(Debug, Deserialize)]
pub struct ReferenceConversation {
    pub feature: FeatureType,
    pub turns: Vec<ReferenceTurn>,
}

pub struct Replay {
    pub reference: ReferenceConversation,
    pub transcript: Conversation,
    pub record: OrdinanceRecord,
    pub calls: usize,
}

/// Drive the built-in tree with the recorded replies in order.
pub fn golden_replay() -> Replay {
    let reference: ReferenceConversation = serde_json::from_str(
        &std::fs::read_to_string(fixture("golden/conversation.json")).unwrap(),
    )
    .unwrap();
    let text = std::fs::read_to_string(fixture("golden/monroe_distilled.txt")).unwrap();
    let backend = ScriptedBackend::playback(
        reference
            .turns
            .iter()
            .map(|t| PlaybackTurn {
                user: None,
                assistant: t.assistant.clone(),
            })
            .collect(),
    );
    let cfg = ExtractConfig::default();
    let graph = cfg.tree_for(reference.feature);
    let outcome = run(&graph, &text, reference.feature, &backend, &cfg.params);
    let transcript = transcript(outcome.as_ref().expect("run succeeds")).clone();
    let record = record_from_run(
        &Jurisdiction::new("Monroe", "WI").unwrap(),
        reference.feature,
        outcome,
        &text,
        &cfg,
    );
    Replay {
        reference,
        transcript,
        record,
        calls: backend.calls(),
    }
}

/// Every non-blank line of the recorded question appears in the prompt sent.
pub fn prompt_covers(sent: &str, shown: &str) -> bool {
    shown
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .all(|l| sent.contains(l))
}
