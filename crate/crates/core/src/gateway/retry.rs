use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{ChatBackend, ChatMessage, Clock, Conversation, GatewayError, GenerationParams};

/// Exponential backoff for transient backend failures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    #[serde(with = "secs_f64")]
    pub base_delay: Duration,
    #[serde(with = "secs_f64")]
    pub max_delay: Duration,
    pub multiplier: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 5,
            base_delay: Duration::from_secs(2),
            max_delay: Duration::from_secs(60),
            multiplier: 2.0,
        }
    }
}

impl RetryPolicy {
    pub fn no_retry() -> Self {
        Self {
            max_attempts: 1,
            ..Self::default()
        }
    }

    /// Delay before attempt `attempt + 1`, where `attempt` is 1-based.
    pub fn delay_after(&self, attempt: u32) -> Duration {
        let factor = self.multiplier.powi(attempt.saturating_sub(1) as i32);
        let secs = self.base_delay.as_secs_f64() * factor;
        Duration::from_secs_f64(secs.min(self.max_delay.as_secs_f64()))
    }

    /// Call `op` until it succeeds, fails permanently, or the attempt cap is
    /// hit. Returns the result and the number of attempts made.
    pub fn run<T>(
        &self,
        clock: &dyn Clock,
        mut op: impl FnMut(u32) -> Result<T, GatewayError>,
    ) -> (Result<T, GatewayError>, u32) {
        let cap = self.max_attempts.max(1);
        let mut attempt = 1;
        loop {
            match op(attempt) {
                Ok(v) => return (Ok(v), attempt),
                Err(e) if !e.is_transient() => return (Err(e), attempt),
                Err(e) if attempt >= cap => {
                    return (
                        Err(GatewayError::BackendExhausted {
                            attempts: attempt,
                            last: Box::new(e),
                        }),
                        attempt,
                    )
                }
                Err(e) => {
                    log::warn!("attempt {attempt} failed ({e}); retrying");
                    clock.sleep(self.delay_after(attempt));
                    attempt += 1;
                }
            }
        }
    }
}

/// Wraps a backend with [`RetryPolicy`] and counts attempts.
pub struct RetryingBackend<B> {
    inner: B,
    policy: RetryPolicy,
    clock: Arc<dyn Clock>,
    attempts: AtomicU32,
}

impl<B: ChatBackend> RetryingBackend<B> {
    pub fn new(inner: B, policy: RetryPolicy, clock: Arc<dyn Clock>) -> Self {
        Self {
            inner,
            policy,
            clock,
            attempts: AtomicU32::new(0),
        }
    }

    /// Total attempts across all calls.
    pub fn attempts(&self) -> u32 {
        self.attempts.load(Ordering::SeqCst)
    }
}

impl<B: ChatBackend> ChatBackend for RetryingBackend<B> {
    fn complete(
        &self,
        conv: &Conversation,
        params: &GenerationParams,
    ) -> Result<ChatMessage, GatewayError> {
        let (result, _) = self.policy.run(self.clock.as_ref(), |_| {
            self.attempts.fetch_add(1, Ordering::SeqCst);
            self.inner.complete(conv, params)
        });
        result
    }
}

mod secs_f64 {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Duration::try_from_secs_f64(secs).map_err(serde::de::Error::custom)
    }
}
