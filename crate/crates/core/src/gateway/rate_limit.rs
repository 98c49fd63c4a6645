use std::collections::VecDeque;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::Clock;

/// Length of the sliding window the limits apply to.
pub const WINDOW: Duration = Duration::from_secs(60);

/// Per-minute request and token bounds; `None` means unbounded.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateLimit {
    pub max_requests_per_minute: Option<u32>,
    pub max_tokens_per_minute: Option<u64>,
}

impl RateLimit {
    pub fn unlimited() -> Self {
        Self::default()
    }

    pub fn per_minute(requests: Option<u32>, tokens: Option<u64>) -> Self {
        Self {
            max_requests_per_minute: requests,
            max_tokens_per_minute: tokens,
        }
    }

    pub fn is_unlimited(&self) -> bool {
        self.max_requests_per_minute.is_none() && self.max_tokens_per_minute.is_none()
    }
}

/// Sliding-window log of granted requests.
///
/// A grant at time `g` occupies the half-open window `[g, g + 60s)`.
#[derive(Debug, Clone)]
pub struct RateWindow {
    limit: RateLimit,
    grants: VecDeque<(Duration, u64)>,
    tokens: u64,
}

impl RateWindow {
    pub fn new(limit: RateLimit) -> Self {
        Self {
            limit,
            grants: VecDeque::new(),
            tokens: 0,
        }
    }

    pub fn limit(&self) -> RateLimit {
        self.limit
    }

    pub fn in_flight(&self) -> usize {
        self.grants.len()
    }

    fn expire(&mut self, now: Duration) {
        while let Some(&(t, tokens)) = self.grants.front() {
            if t + WINDOW > now {
                break;
            }
            self.grants.pop_front();
            self.tokens -= tokens;
        }
    }

    /// Grant a slot at `now`, or return the earliest time worth retrying.
    ///
    /// A request estimated above the whole token budget is charged as the
    /// full budget, so it is granted once the window is otherwise empty.
    pub fn try_acquire(&mut self, now: Duration, estimated_tokens: u64) -> Result<(), Duration> {
        if self.limit.is_unlimited() {
            return Ok(());
        }
        self.expire(now);
        let charged = match self.limit.max_tokens_per_minute {
            Some(max) => estimated_tokens.min(max),
            None => estimated_tokens,
        };
        let requests_ok = self
            .limit
            .max_requests_per_minute
            .is_none_or(|max| self.grants.len() < max as usize);
        let tokens_ok = self
            .limit
            .max_tokens_per_minute
            .is_none_or(|max| self.tokens + charged <= max);
        if requests_ok && tokens_ok {
            self.grants.push_back((now, charged));
            self.tokens += charged;
            Ok(())
        } else {
            let oldest = self.grants.front().map(|&(t, _)| t).unwrap_or(now);
            Err(oldest + WINDOW)
        }
    }
}

/// Blocking limiter shared across concurrent callers.
pub struct RateLimiter {
    window: Mutex<RateWindow>,
    clock: Arc<dyn Clock>,
}

impl RateLimiter {
    pub fn new(limit: RateLimit, clock: Arc<dyn Clock>) -> Self {
        Self {
            window: Mutex::new(RateWindow::new(limit)),
            clock,
        }
    }

    /// Wait until a slot is available and take it. Returns the time waited.
    pub fn acquire(&self, estimated_tokens: u64) -> Duration {
        let started = self.clock.now();
        loop {
            let now = self.clock.now();
            let retry_at = match self
                .window
                .lock()
                .unwrap()
                .try_acquire(now, estimated_tokens)
            {
                Ok(()) => return now - started,
                Err(at) => at,
            };
            self.clock
                .sleep(retry_at.saturating_sub(now).max(Duration::from_millis(1)));
        }
    }
}
