//! Retry with exponential backoff, and the in-flight request limit.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use rand::Rng;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("transport failed after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("endpoint returned {status} after {attempts} attempt(s): {body}")]
    Endpoint { status: u16, body: String, attempts: u32 },
    #[error("unexpected response body: {0}")]
    Decode(String),
    #[error("mock script exhausted after {calls} call(s)")]
    ScriptExhausted { calls: usize },
}

/// Why one attempt failed.
#[derive(Debug)]
pub enum Failure {
    Transport(String),
    Status {
        status: u16,
        body: String,
    },
    /// Not worth retrying.
    Fatal(BackendError),
}

impl Failure {
    fn retryable(&self) -> bool {
        match self {
            Failure::Transport(_) => true,
            Failure::Status { status, .. } => *status == 429 || (500..600).contains(status),
            Failure::Fatal(_) => false,
        }
    }

    fn into_error(self, attempts: u32) -> BackendError {
        match self {
            Failure::Transport(message) => BackendError::Transport { attempts, message },
            Failure::Status { status, body } => BackendError::Endpoint {
                status,
                body: excerpt(&body),
                attempts,
            },
            Failure::Fatal(e) => e,
        }
    }
}

const EXCERPT_CHARS: usize = 512;

pub(crate) fn excerpt(body: &str) -> String {
    let mut chars = body.chars();
    let head: String = chars.by_ref().take(EXCERPT_CHARS).collect();
    if chars.next().is_some() {
        format!("{head}...")
    } else {
        head
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_ms: u64,
    pub cap_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_ms: 1000,
            cap_ms: 30_000,
        }
    }
}

impl RetryPolicy {
    /// Upper bound of the wait before retry number `retry` (1-based).
    pub fn ceiling(&self, retry: u32) -> Duration {
        let exp = self.base_ms.saturating_mul(1u64 << (retry - 1).min(32));
        Duration::from_millis(exp.min(self.cap_ms))
    }

    /// Wait drawn uniformly from the upper half of the ceiling.
    pub fn delay<R: Rng + ?Sized>(&self, retry: u32, rng: &mut R) -> Duration {
        let ceiling = self.ceiling(retry).as_millis() as u64;
        if ceiling == 0 {
            return Duration::ZERO;
        }
        Duration::from_millis(rng.gen_range(ceiling / 2..=ceiling))
    }

    /// Runs `attempt` until it succeeds, fails fatally, or the retries run
    /// out. Returns the value and the number of attempts made.
    pub fn run<T>(&self, mut attempt: impl FnMut(u32) -> Result<T, Failure>) -> Result<(T, u32), BackendError> {
        let mut rng = rand::thread_rng();
        let mut n = 1;
        loop {
            match attempt(n) {
                Ok(v) => return Ok((v, n)),
                Err(f) if f.retryable() && n <= self.max_retries => {
                    let wait = self.delay(n, &mut rng);
                    log::warn!("attempt {n} failed ({f:?}); retrying in {wait:?}");
                    std::thread::sleep(wait);
                    n += 1;
                }
                Err(f) => return Err(f.into_error(n)),
            }
        }
    }
}

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
pub struct InFlight {
    max: usize,
    active: Mutex<usize>,
    freed: Condvar,
}

pub struct Permit<'a>(&'a InFlight);

impl InFlight {
    pub fn new(max: usize) -> Self {
        InFlight {
            max: max.max(1),
            active: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut active = self.active.lock().unwrap();
        while *active >= self.max {
            active = self.freed.wait(active).unwrap();
        }
        *active += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.active.lock().unwrap() -= 1;
        self.0.freed.notify_one();
    }
}
