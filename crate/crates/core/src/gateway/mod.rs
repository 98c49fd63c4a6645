//! Chat-completion gateway.
//!
//! Every model call in the pipeline goes through [`ChatBackend::complete`].
//! Concrete backends are the HTTP [`LiveBackend`] and the deterministic
//! [`ScriptedBackend`]; [`Gateway`] wraps either with caching, rate limiting,
//! retries and the audit journal.

mod cache;
mod clock;
mod journal;
mod live;
mod message;
mod rate_limit;
mod retry;
mod scripted;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

pub use cache::{cache_key, ResponseCache};
pub use clock::{Clock, ManualClock, SystemClock};
pub use journal::{Journal, JournalEntry};
pub use live::{LiveBackend, LiveConfig};
pub use message::{ChatMessage, Conversation, GenerationParams, Role};
pub use rate_limit::{RateLimit, RateLimiter, RateWindow, WINDOW};
pub use retry::{RetryPolicy, RetryingBackend};
pub use scripted::{PlaybackTurn, ScriptEntry, ScriptFile, ScriptedBackend};

use crate::text::estimate_tokens;

#[derive(Debug, Clone, thiserror::Error)]
pub enum GatewayError {
    #[error("no scripted response for user message {last_user:?}")]
    NoScriptMatch { last_user: String },
    #[error("backend failed after {attempts} attempts: {last}")]
    BackendExhausted {
        attempts: u32,
        last: Box<GatewayError>,
    },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("http status {status}: {body}")]
    Http { status: u16, body: String },
    #[error("request timed out: {0}")]
    Timeout(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("invalid conversation: {0}")]
    InvalidConversation(String),
    #[error("backend configuration: {0}")]
    Config(String),
}

impl GatewayError {
    /// Rate limiting, server errors, timeouts and connection failures.
    pub fn is_transient(&self) -> bool {
        match self {
            GatewayError::Http { status, .. } => *status == 429 || (500..600).contains(status),
            GatewayError::Timeout(_) | GatewayError::Transport(_) => true,
            _ => false,
        }
    }
}

pub trait ChatBackend: Send + Sync {
    /// Produce the assistant reply to `conv`.
    fn complete(
        &self,
        conv: &Conversation,
        params: &GenerationParams,
    ) -> Result<ChatMessage, GatewayError>;
}

impl<T: ChatBackend + ?Sized> ChatBackend for Arc<T> {
    fn complete(
        &self,
        conv: &Conversation,
        params: &GenerationParams,
    ) -> Result<ChatMessage, GatewayError> {
        (**self).complete(conv, params)
    }
}

/// Look up `(conv, params)` in `cache`, calling `backend` only on a miss.
pub fn cached_complete(
    backend: &dyn ChatBackend,
    conv: &Conversation,
    params: &GenerationParams,
    cache: &ResponseCache,
) -> Result<ChatMessage, GatewayError> {
    let key = cache_key(conv, params);
    let lock = cache.key_lock(&key);
    let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
    if let Some(hit) = cache.get(&key) {
        return Ok(hit);
    }
    let reply = backend.complete(conv, params)?;
    cache.put(&key, &reply);
    Ok(reply)
}

/// A backend stack: cache, then rate limit and retry around the inner
/// backend, with every exchange appended to the journal.
pub struct Gateway {
    backend: Arc<dyn ChatBackend>,
    retry: RetryPolicy,
    limiter: Option<Arc<RateLimiter>>,
    cache: Option<Arc<ResponseCache>>,
    journal: Option<Arc<Journal>>,
    clock: Arc<dyn Clock>,
    backend_calls: AtomicU64,
    cache_hits: AtomicU64,
}

impl Gateway {
    pub fn new(backend: Arc<dyn ChatBackend>) -> Self {
        Self {
            backend,
            retry: RetryPolicy::default(),
            limiter: None,
            cache: None,
            journal: None,
            clock: Arc::new(SystemClock::new()),
            backend_calls: AtomicU64::new(0),
            cache_hits: AtomicU64::new(0),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_rate_limiter(mut self, limiter: Arc<RateLimiter>) -> Self {
        self.limiter = Some(limiter);
        self
    }

    pub fn with_cache(mut self, cache: Arc<ResponseCache>) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn with_journal(mut self, journal: Arc<Journal>) -> Self {
        self.journal = Some(journal);
        self
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    /// Requests that reached the wrapped backend, retries included.
    pub fn backend_calls(&self) -> u64 {
        self.backend_calls.load(Ordering::SeqCst)
    }

    pub fn cache_hits(&self) -> u64 {
        self.cache_hits.load(Ordering::SeqCst)
    }

    fn call_backend(
        &self,
        conv: &Conversation,
        params: &GenerationParams,
    ) -> Result<ChatMessage, GatewayError> {
        let tokens = conv
            .messages
            .iter()
            .map(|m| estimate_tokens(&m.content) as u64)
            .sum::<u64>()
            + u64::from(params.max_output_tokens);
        let (result, _) = self.retry.run(self.clock.as_ref(), |_| {
            if let Some(limiter) = &self.limiter {
                limiter.acquire(tokens);
            }
            self.backend_calls.fetch_add(1, Ordering::SeqCst);
            self.backend.complete(conv, params)
        });
        result
    }

    fn journal(&self, key: &str, conv: &Conversation, reply: &ChatMessage, cached: bool) {
        if let Some(journal) = &self.journal {
            journal.append(&JournalEntry::now(key, conv, reply, cached));
        }
    }
}

impl ChatBackend for Gateway {
    fn complete(
        &self,
        conv: &Conversation,
        params: &GenerationParams,
    ) -> Result<ChatMessage, GatewayError> {
        conv.validate()?;
        params.validate()?;
        let key = cache_key(conv, params);
        let Some(cache) = &self.cache else {
            let reply = self.call_backend(conv, params)?;
            self.journal(&key, conv, &reply, false);
            return Ok(reply);
        };

        let lock = cache.key_lock(&key);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(hit) = cache.get(&key) {
            self.cache_hits.fetch_add(1, Ordering::SeqCst);
            self.journal(&key, conv, &hit, true);
            return Ok(hit);
        }
        let reply = self.call_backend(conv, params)?;
        cache.put(&key, &reply);
        self.journal(&key, conv, &reply, false);
        Ok(reply)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicU32;
    use std::time::Duration;

    fn ping() -> Conversation {
        let mut conv = Conversation::new();
        conv.push_user("ping");
        conv
    }

    fn scripted() -> Arc<ScriptedBackend> {
        Arc::new(ScriptedBackend::keyed().on("ping", "pong"))
    }

    #[test]
    fn transient_classification() {
        let http = |status| GatewayError::Http {
            status,
            body: String::new(),
        };
        assert!(http(429).is_transient());
        assert!(http(503).is_transient());
        assert!(!http(400).is_transient());
        assert!(!http(401).is_transient());
        assert!(GatewayError::Timeout("t".into()).is_transient());
        assert!(!GatewayError::MalformedResponse("m".into()).is_transient());
    }

    #[test]
    fn cached_complete_hits_backend_once() {
        let backend = scripted();
        let cache = ResponseCache::in_memory();
        let params = GenerationParams::default();
        for _ in 0..2 {
            let reply = cached_complete(backend.as_ref(), &ping(), &params, &cache).unwrap();
            assert_eq!(reply.content, "pong");
        }
        assert_eq!(backend.calls(), 1);
    }

    #[test]
    fn cache_key_includes_params() {
        let backend = scripted();
        let cache = ResponseCache::in_memory();
        let cold = GenerationParams::default();
        let warm = GenerationParams {
            temperature: 0.7,
            ..GenerationParams::default()
        };
        cached_complete(backend.as_ref(), &ping(), &cold, &cache).unwrap();
        cached_complete(backend.as_ref(), &ping(), &warm, &cache).unwrap();
        assert_eq!(backend.calls(), 2);
    }

    #[test]
    fn gateway_without_cache_calls_every_time() {
        let backend = scripted();
        let gw = Gateway::new(backend.clone());
        let params = GenerationParams::default();
        gw.complete(&ping(), &params).unwrap();
        gw.complete(&ping(), &params).unwrap();
        assert_eq!(backend.calls(), 2);
        assert_eq!(gw.backend_calls(), 2);
    }

    #[test]
    fn gateway_cache_persists_across_instances() {
        let dir = tempfile::tempdir().unwrap();
        let params = GenerationParams::default();
        let first = scripted();
        let gw = Gateway::new(first.clone())
            .with_cache(Arc::new(ResponseCache::on_disk(dir.path()).unwrap()));
        gw.complete(&ping(), &params).unwrap();
        assert_eq!(first.calls(), 1);

        let second = scripted();
        let gw = Gateway::new(second.clone())
            .with_cache(Arc::new(ResponseCache::on_disk(dir.path()).unwrap()));
        assert_eq!(gw.complete(&ping(), &params).unwrap().content, "pong");
        assert_eq!(second.calls(), 0);
        assert_eq!(gw.cache_hits(), 1);
    }

    #[test]
    fn gateway_rejects_invalid_conversation() {
        let gw = Gateway::new(scripted());
        let mut conv = Conversation::new();
        conv.push_assistant("hello");
        assert!(matches!(
            gw.complete(&conv, &GenerationParams::default()),
            Err(GatewayError::InvalidConversation(_))
        ));
    }

    struct Flaky {
        failures: u32,
        seen: AtomicU32,
        error: GatewayError,
    }

    impl ChatBackend for Flaky {
        fn complete(
            &self,
            _: &Conversation,
            _: &GenerationParams,
        ) -> Result<ChatMessage, GatewayError> {
            let n = self.seen.fetch_add(1, Ordering::SeqCst);
            if n < self.failures {
                Err(self.error.clone())
            } else {
                Ok(ChatMessage::assistant("ok"))
            }
        }
    }

    #[test]
    fn gateway_retries_transient_failures_under_rate_limit() {
        let flaky = Arc::new(Flaky {
            failures: 2,
            seen: AtomicU32::new(0),
            error: GatewayError::Http {
                status: 503,
                body: "busy".into(),
            },
        });
        let clock = Arc::new(ManualClock::new());
        let limiter = Arc::new(RateLimiter::new(
            RateLimit::per_minute(Some(2), None),
            clock.clone(),
        ));
        let gw = Gateway::new(flaky.clone())
            .with_clock(clock.clone())
            .with_rate_limiter(limiter)
            .with_retry(RetryPolicy {
                max_attempts: 5,
                base_delay: Duration::from_secs(1),
                max_delay: Duration::from_secs(8),
                multiplier: 2.0,
            });
        let reply = gw.complete(&ping(), &GenerationParams::default()).unwrap();
        assert_eq!(reply.content, "ok");
        assert_eq!(flaky.seen.load(Ordering::SeqCst), 3);
        assert_eq!(gw.backend_calls(), 3);
        // third attempt had to wait for the per-minute window to reopen
        assert!(clock.now() >= Duration::from_secs(60));
    }

    #[test]
    fn journal_records_each_exchange() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("journal.jsonl");
        let journal = Arc::new(Journal::open(&path).unwrap());
        let gw = Gateway::new(scripted())
            .with_cache(Arc::new(ResponseCache::in_memory()))
            .with_journal(journal);
        let params = GenerationParams::default();
        gw.complete(&ping(), &params).unwrap();
        gw.complete(&ping(), &params).unwrap();
        let lines: Vec<JournalEntry> = std::fs::read_to_string(&path)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(lines.len(), 2);
        assert!(!lines[0].cached);
        assert!(lines[1].cached);
        assert_eq!(lines[0].response.content, "pong");
        assert_eq!(lines[0].digest, cache_key(&ping(), &params));
    }
}
