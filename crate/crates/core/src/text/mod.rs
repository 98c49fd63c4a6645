//! Token budgeting, overlapping chunking and the n-gram grounding check.

mod chunk;
mod ngram;

pub use chunk::{split_overlapping, ChunkingConfig, TextChunk};
pub use ngram::{ngram_similarity, tokenize, NgramCheck};

/// Rough token count: one token per four characters, rounded up.
pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn token_estimates() {
        assert_eq!(estimate_tokens(""), 0);
        assert_eq!(estimate_tokens(&"x".repeat(400)), 100);
        assert_eq!(estimate_tokens(&"x".repeat(401)), 101);
        // characters, not bytes
        assert_eq!(estimate_tokens("éééé"), 1);
    }
}
