use std::collections::HashSet;

use serde::{Deserialize, Serialize};

/// Parameters of the grounding check applied to model-extracted text.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NgramCheck {
    pub n: usize,
    pub threshold: f64,
}

impl Default for NgramCheck {
    fn default() -> Self {
        Self {
            n: 2,
            threshold: 0.8,
        }
    }
}

impl NgramCheck {
    pub fn similarity(&self, candidate: &str, source: &str) -> f64 {
        ngram_similarity(candidate, source, self.n)
    }

    pub fn accepts(&self, similarity: f64) -> bool {
        similarity >= self.threshold
    }
}

/// Lowercase, drop punctuation, split on whitespace.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| {
            w.chars()
                .filter(|c| c.is_alphanumeric())
                .flat_map(char::to_lowercase)
                .collect::<String>()
        })
        .filter(|w| !w.is_empty())
        .collect()
}

/// Fraction of the candidate's distinct word n-grams that also occur in the
/// source.
///
/// A candidate shorter than `n` tokens is treated as one n-gram made of all
/// its tokens. An empty candidate scores 1.0.
///
/// # Panics
///
/// If `n == 0`.
pub fn ngram_similarity(candidate: &str, source: &str, n: usize) -> f64 {
    assert!(n >= 1, "n-gram size must be at least 1");
    let cand = tokenize(candidate);
    if cand.is_empty() {
        return 1.0;
    }
    let src = tokenize(source);
    let size = n.min(cand.len());

    let wanted: HashSet<&[String]> = cand.windows(size).collect();
    let present: HashSet<&[String]> = src.windows(size).collect();
    let matched = wanted.iter().filter(|g| present.contains(*g)).count();
    matched as f64 / wanted.len() as f64
}
