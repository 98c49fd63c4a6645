use std::fmt;
use std::sync::Arc;

use regex::Regex;

use super::RunState;

pub type ConditionFn = Arc<dyn Fn(&str, &RunState) -> bool + Send + Sync>;

/// Test applied to a model reply to decide whether an edge is taken.
#[derive(Clone)]
pub enum Condition {
    /// Case-insensitive substring.
    Contains(String),
    /// A numbered option such as `#7.1`; `#7.1` does not match `#7.10`.
    NumberedOption(String),
    Regex(Regex),
    Always,
    /// Arbitrary predicate; graphs using it cannot be written to a file.
    Custom {
        name: String,
        test: ConditionFn,
    },
}

impl Condition {
    pub fn contains(keyword: impl Into<String>) -> Self {
        Condition::Contains(keyword.into())
    }

    pub fn option(number: impl AsRef<str>) -> Self {
        Condition::NumberedOption(number.as_ref().trim_start_matches('#').to_string())
    }

    pub fn regex(pattern: &str) -> Result<Self, regex::Error> {
        Regex::new(pattern).map(Condition::Regex)
    }

    pub fn custom(
        name: impl Into<String>,
        test: impl Fn(&str, &RunState) -> bool + Send + Sync + 'static,
    ) -> Self {
        Condition::Custom {
            name: name.into(),
            test: Arc::new(test),
        }
    }

    pub fn holds(&self, response: &str, state: &RunState) -> bool {
        match self {
            Condition::Contains(k) => response.to_lowercase().contains(&k.to_lowercase()),
            Condition::NumberedOption(n) => mentions_option(response, n),
            Condition::Regex(re) => re.is_match(response),
            Condition::Always => true,
            Condition::Custom { test, .. } => test(response, state),
        }
    }

    /// Short human-readable label.
    pub fn describe(&self) -> String {
        match self {
            Condition::Contains(k) => format!("contains {k:?}"),
            Condition::NumberedOption(n) => format!("option #{n}"),
            Condition::Regex(re) => format!("matches /{}/", re.as_str()),
            Condition::Always => "always".into(),
            Condition::Custom { name, .. } => format!("custom {name}"),
        }
    }
}

fn mentions_option(response: &str, number: &str) -> bool {
    let needle = format!("#{number}");
    response.match_indices(&needle).any(|(at, _)| {
        let mut rest = response[at + needle.len()..].chars();
        match rest.next() {
            None => true,
            Some(c) if c.is_ascii_digit() => false,
            Some('.') => !rest.next().is_some_and(|c| c.is_ascii_digit()),
            Some(_) => true,
        }
    })
}

impl fmt::Debug for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

impl PartialEq for Condition {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Condition::Contains(a), Condition::Contains(b)) => a == b,
            (Condition::NumberedOption(a), Condition::NumberedOption(b)) => a == b,
            (Condition::Regex(a), Condition::Regex(b)) => a.as_str() == b.as_str(),
            (Condition::Always, Condition::Always) => true,
            (Condition::Custom { test: a, .. }, Condition::Custom { test: b, .. }) => {
                Arc::ptr_eq(a, b)
            }
            _ => false,
        }
    }
}
