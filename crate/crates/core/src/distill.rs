//! Reduce a document to the passages about wind energy systems.
//!
//! Every chunk is sent to the model with a relevance prompt. The reply is
//! kept only if it is grounded in the chunk according to [`NgramCheck`].

use serde::{Deserialize, Serialize};

use crate::gateway::{ChatBackend, Conversation, GatewayError, GenerationParams};
use crate::ingest::{DocumentText, Jurisdiction};
use crate::par::map_bounded;
use crate::text::{split_overlapping, ChunkingConfig, NgramCheck, TextChunk};

/// Reply the model gives when a chunk has nothing relevant.
pub const NO_RELEVANT_TEXT: &str = "NO RELEVANT TEXT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistillConfig {
    pub chunking: ChunkingConfig,
    pub check: NgramCheck,
    pub params: GenerationParams,
    pub workers: usize,
}

impl Default for DistillConfig {
    fn default() -> Self {
        Self {
            chunking: ChunkingConfig::default(),
            check: NgramCheck::default(),
            params: GenerationParams::default(),
            workers: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectionReason {
    Hallucination,
    NegativeAnswer,
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Excerpt {
    pub chunk_index: usize,
    pub text: String,
    pub similarity: f64,
    pub accepted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rejection_reason: Option<RejectionReason>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistilledText {
    pub jurisdiction: Jurisdiction,
    /// Accepted excerpts in chunk order, adjacent duplicates removed.
    pub excerpts: Vec<Excerpt>,
    pub combined: String,
}

impl DistilledText {
    pub fn empty(jurisdiction: Jurisdiction) -> Self {
        Self {
            jurisdiction,
            excerpts: Vec::new(),
            combined: String::new(),
        }
    }

    /// Build from accepted excerpts already sorted by chunk index.
    pub fn from_excerpts(jurisdiction: Jurisdiction, accepted: Vec<Excerpt>) -> Self {
        let mut excerpts: Vec<Excerpt> = Vec::with_capacity(accepted.len());
        for e in accepted {
            if excerpts.last().is_some_and(|prev| prev.text == e.text) {
                continue;
            }
            excerpts.push(e);
        }
        let combined = excerpts
            .iter()
            .map(|e| e.text.as_str())
            .collect::<Vec<_>>()
            .join("\n\n");
        Self {
            jurisdiction,
            excerpts,
            combined,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.combined.trim().is_empty()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChunkFailure {
    pub chunk_index: usize,
    pub error: String,
}

/// Everything learned while distilling one document; the basis of the sidecar file.
#[derive(Debug, Clone, Serialize)]
pub struct Distillation {
    pub jurisdiction: Jurisdiction,
    pub chunk_count: usize,
    pub n: usize,
    pub threshold: f64,
    /// One entry per chunk that got a reply, accepted or not.
    pub excerpts: Vec<Excerpt>,
    pub failures: Vec<ChunkFailure>,
    #[serde(skip)]
    pub distilled: DistilledText,
}

#[derive(Debug, thiserror::Error)]
pub enum DistillError {
    #[error("{failed} of {total} chunks failed; first error: {first}")]
    TooManyFailures {
        failed: usize,
        total: usize,
        first: GatewayError,
    },
}

pub fn relevance_prompt(chunk_text: &str) -> String {
    format!(
        "Extract text related to the restrictions of wind energy systems from the excerpt below. \
Copy the relevant passages word for word. Do not paraphrase, summarize, explain, or add any \
words of your own. Also copy definitions of terms that those passages rely on, such as \
definitions of wind energy system types, tower or tip height, or participating property. \
Your reply must be no longer than the relevant passages themselves. If nothing in the excerpt \
relates to wind energy systems, reply with exactly: {NO_RELEVANT_TEXT}\n\n\
Excerpt:\n\"\"\"\n{chunk_text}\n\"\"\""
    )
}

fn is_sentinel(reply: &str) -> bool {
    let core = reply
        .trim()
        .trim_matches(|c: char| c == '"' || c == '\'' || c == '.' || c.is_whitespace());
    core.eq_ignore_ascii_case(NO_RELEVANT_TEXT)
}

/// Ask the model for the relevant part of one chunk and check that it is grounded.
pub fn extract_relevant(
    chunk: &TextChunk,
    backend: &dyn ChatBackend,
    cfg: &DistillConfig,
) -> Result<Excerpt, GatewayError> {
    let mut conv = Conversation::new();
    conv.push_user(relevance_prompt(&chunk.text));
    let reply = backend.complete(&conv, &cfg.params)?;
    let text = reply.content.trim().to_string();

    let (similarity, reason) = if text.is_empty() {
        (0.0, Some(RejectionReason::Empty))
    } else if is_sentinel(&text) {
        (0.0, Some(RejectionReason::NegativeAnswer))
    } else {
        let s = cfg.check.similarity(&text, &chunk.text);
        (
            s,
            (!cfg.check.accepts(s)).then_some(RejectionReason::Hallucination),
        )
    };
    Ok(Excerpt {
        chunk_index: chunk.index,
        text,
        similarity,
        accepted: reason.is_none(),
        rejection_reason: reason,
    })
}

/// Distill a whole document, keeping per-chunk detail.
///
/// Chunks run concurrently on `cfg.workers` threads. The document fails only
/// when more than half of its chunks fail.
pub fn distill_detailed(
    doc: &DocumentText,
    backend: &dyn ChatBackend,
    cfg: &DistillConfig,
) -> Result<Distillation, DistillError> {
    let text = doc.cleaned().joined();
    let chunks: Vec<TextChunk> = split_overlapping(&text, &cfg.chunking)
        .into_iter()
        .filter(|c| !c.text.trim().is_empty())
        .collect();
    let results = map_bounded(&chunks, cfg.workers, |c| extract_relevant(c, backend, cfg));

    let mut excerpts = Vec::new();
    let mut failures = Vec::new();
    let mut first_error = None;
    for (chunk, result) in chunks.iter().zip(results) {
        match result {
            Ok(e) => excerpts.push(e),
            Err(e) => {
                log::warn!("{}: chunk {} failed: {e}", doc.jurisdiction, chunk.index);
                failures.push(ChunkFailure {
                    chunk_index: chunk.index,
                    error: e.to_string(),
                });
                first_error.get_or_insert(e);
            }
        }
    }
    if failures.len() * 2 > chunks.len() {
        return Err(DistillError::TooManyFailures {
            failed: failures.len(),
            total: chunks.len(),
            first: first_error.expect("at least one failure"),
        });
    }

    let accepted = excerpts.iter().filter(|e| e.accepted).cloned().collect();
    Ok(Distillation {
        jurisdiction: doc.jurisdiction.clone(),
        chunk_count: chunks.len(),
        n: cfg.check.n,
        threshold: cfg.check.threshold,
        distilled: DistilledText::from_excerpts(doc.jurisdiction.clone(), accepted),
        excerpts,
        failures,
    })
}

pub fn distill_document(
    doc: &DocumentText,
    backend: &dyn ChatBackend,
    cfg: &DistillConfig,
) -> Result<DistilledText, DistillError> {
    distill_detailed(doc, backend, cfg).map(|d| d.distilled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{ChatMessage, ScriptedBackend};
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn jur() -> Jurisdiction {
        Jurisdiction::new("Monroe", "WI").unwrap()
    }

    fn chunk(index: usize, text: &str) -> TextChunk {
        TextChunk {
            index,
            start_offset: 0,
            end_offset: text.len(),
            text: text.into(),
        }
    }

    const CHUNK: &str = "Section 4. Wind energy systems shall be set back 1,250 feet from \
occupied community buildings. Towers shall be painted a neutral color. Signs are limited.";

    #[test]
    fn verbatim_subset_accepted() {
        let c = chunk(0, CHUNK);
        let reply = "Wind energy systems shall be set back 1,250 feet from occupied community \
buildings. Towers shall be painted a neutral color.";
        let b = ScriptedBackend::keyed().on(relevance_prompt(CHUNK), reply);
        let e = extract_relevant(&c, &b, &DistillConfig::default()).unwrap();
        assert!(e.accepted);
        assert_eq!(e.similarity, 1.0);
        assert_eq!(e.rejection_reason, None);
    }

    #[test]
    fn sentinel_and_empty_rejected() {
        let c = chunk(0, CHUNK);
        for (reply, reason) in [
            ("NO RELEVANT TEXT", RejectionReason::NegativeAnswer),
            ("\"No relevant text.\"", RejectionReason::NegativeAnswer),
            ("   ", RejectionReason::Empty),
        ] {
            let b = ScriptedBackend::keyed().on(relevance_prompt(CHUNK), reply);
            let e = extract_relevant(&c, &b, &DistillConfig::default()).unwrap();
            assert!(!e.accepted);
            assert_eq!(e.rejection_reason, Some(reason));
        }
    }

    #[test]
    fn fabricated_reply_rejected() {
        let c = chunk(0, CHUNK);
        let reply =
            "Turbines must stay two miles from every lake and cannot exceed forty decibels.";
        let b = ScriptedBackend::keyed().on(relevance_prompt(CHUNK), reply);
        let e = extract_relevant(&c, &b, &DistillConfig::default()).unwrap();
        assert!(e.similarity < 0.2);
        assert_eq!(e.rejection_reason, Some(RejectionReason::Hallucination));
    }

    #[test]
    fn adjacent_duplicates_dropped() {
        let ex = |i, t: &str| Excerpt {
            chunk_index: i,
            text: t.into(),
            similarity: 1.0,
            accepted: true,
            rejection_reason: None,
        };
        let d = DistilledText::from_excerpts(
            jur(),
            vec![ex(1, "a"), ex(2, "a"), ex(3, "b"), ex(4, "a")],
        );
        assert_eq!(d.combined, "a\n\nb\n\na");
        assert_eq!(d.excerpts.len(), 3);
    }

    /// Answers from a per-chunk table keyed by a marker word in the chunk.
    struct ByMarker {
        answers: Vec<(&'static str, &'static str)>,
        calls: AtomicUsize,
        fail: bool,
    }

    impl ChatBackend for ByMarker {
        fn complete(
            &self,
            conv: &Conversation,
            _: &GenerationParams,
        ) -> Result<ChatMessage, GatewayError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            if self.fail {
                return Err(GatewayError::Timeout("simulated".into()));
            }
            let prompt = &conv.last_user().unwrap().content;
            for (marker, answer) in &self.answers {
                if prompt.contains(marker) {
                    return Ok(ChatMessage::assistant(*answer));
                }
            }
            Ok(ChatMessage::assistant(NO_RELEVANT_TEXT))
        }
    }

    fn long_doc() -> DocumentText {
        let mut pages = Vec::new();
        for i in 0..10 {
            let marker = match i {
                3 => " alphaword setback one thousand feet.",
                7 => " omegaword noise forty five decibels.",
                _ => "",
            };
            pages.push(format!(
                "{}{marker}",
                "filler text about zoning. ".repeat(6)
            ));
        }
        DocumentText::from_pages(jur(), pages)
    }

    fn small_cfg(workers: usize) -> DistillConfig {
        DistillConfig {
            chunking: ChunkingConfig::new(40, 0).unwrap(),
            workers,
            ..DistillConfig::default()
        }
    }

    #[test]
    fn excerpts_in_chunk_order() {
        let b = ByMarker {
            answers: vec![
                ("omegaword", "omegaword noise forty five decibels."),
                ("alphaword", "alphaword setback one thousand feet."),
            ],
            calls: AtomicUsize::new(0),
            fail: false,
        };
        let one = distill_document(&long_doc(), &b, &small_cfg(1)).unwrap();
        let many = distill_document(&long_doc(), &b, &small_cfg(8)).unwrap();
        assert_eq!(one, many);
        let a = one.combined.find("alphaword").unwrap();
        let o = one.combined.find("omegaword").unwrap();
        assert!(a < o);
        assert!(one
            .excerpts
            .windows(2)
            .all(|w| w[0].chunk_index < w[1].chunk_index));
    }

    #[test]
    fn all_negative_gives_empty() {
        let b = ByMarker {
            answers: vec![],
            calls: AtomicUsize::new(0),
            fail: false,
        };
        let d = distill_document(&long_doc(), &b, &small_cfg(3)).unwrap();
        assert!(d.is_empty());
        assert!(b.calls.load(Ordering::SeqCst) > 1);
    }

    #[test]
    fn majority_failure_fails_document() {
        let b = ByMarker {
            answers: vec![],
            calls: AtomicUsize::new(0),
            fail: true,
        };
        let err = distill_document(&long_doc(), &b, &small_cfg(2)).unwrap_err();
        assert!(matches!(err, DistillError::TooManyFailures { .. }));
    }

    #[test]
    fn empty_document_needs_no_calls() {
        let b = ScriptedBackend::keyed();
        let d =
            distill_document(&DocumentText::from_pages(jur(), [""]), &b, &small_cfg(2)).unwrap();
        assert!(d.is_empty());
        assert_eq!(b.calls(), 0);
    }
}
