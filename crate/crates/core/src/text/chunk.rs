use serde::{Deserialize, Serialize};

use super::estimate_tokens;

/// Characters per estimated token, matching [`estimate_tokens`].
const CHARS_PER_TOKEN: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChunkingConfig {
    pub target_tokens: usize,
    pub overlap_tokens: usize,
}

impl Default for ChunkingConfig {
    fn default() -> Self {
        Self {
            target_tokens: 2000,
            overlap_tokens: 200,
        }
    }
}

impl ChunkingConfig {
    pub fn new(target_tokens: usize, overlap_tokens: usize) -> Result<Self, String> {
        let cfg = Self {
            target_tokens,
            overlap_tokens,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.target_tokens == 0 {
            return Err("target_tokens must be positive".into());
        }
        if self.overlap_tokens >= self.target_tokens {
            return Err(format!(
                "overlap_tokens ({}) must be smaller than target_tokens ({})",
                self.overlap_tokens, self.target_tokens
            ));
        }
        Ok(())
    }
}

/// A window of the source text. Offsets are byte offsets into the source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextChunk {
    pub index: usize,
    pub start_offset: usize,
    pub end_offset: usize,
    pub text: String,
}

/// Split `text` into overlapping windows of at most `target_tokens`
/// estimated tokens.
///
/// A window that does not reach the end of the text is cut just after the
/// last whitespace character found in the final tenth of the window, if any.
/// The next window starts `overlap_tokens` worth of characters before the
/// cut, moved forward to the next word start when one lies before the cut.
///
/// # Panics
///
/// If `cfg` is invalid (see [`ChunkingConfig::validate`]).
pub fn split_overlapping(text: &str, cfg: &ChunkingConfig) -> Vec<TextChunk> {
    if let Err(e) = cfg.validate() {
        panic!("invalid chunking config: {e}");
    }
    if text.is_empty() {
        return Vec::new();
    }
    if estimate_tokens(text) <= cfg.target_tokens {
        return vec![TextChunk {
            index: 0,
            start_offset: 0,
            end_offset: text.len(),
            text: text.to_string(),
        }];
    }

    let chars: Vec<char> = text.chars().collect();
    let offsets: Vec<usize> = text
        .char_indices()
        .map(|(b, _)| b)
        .chain(std::iter::once(text.len()))
        .collect();
    let n = chars.len();
    let budget = cfg.target_tokens * CHARS_PER_TOKEN;
    let overlap = cfg.overlap_tokens * CHARS_PER_TOKEN;
    let slack = budget.div_ceil(10);

    let mut chunks = Vec::new();
    let mut start = 0usize;
    loop {
        let mut end = (start + budget).min(n);
        if end < n {
            let lo = end.saturating_sub(slack).max(start);
            if let Some(p) = (lo..end).rev().find(|&i| chars[i].is_whitespace()) {
                end = p + 1;
            }
        }
        let (b0, b1) = (offsets[start], offsets[end]);
        chunks.push(TextChunk {
            index: chunks.len(),
            start_offset: b0,
            end_offset: b1,
            text: text[b0..b1].to_string(),
        });
        if end == n {
            break;
        }

        let mut next = end.saturating_sub(overlap).max(start + 1);
        if !chars[next - 1].is_whitespace() {
            if let Some(word_start) = (next + 1..end).find(|&i| chars[i - 1].is_whitespace()) {
                next = word_start;
            }
        }
        start = next;
    }
    chunks
}
