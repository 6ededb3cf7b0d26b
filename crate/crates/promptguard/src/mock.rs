//! Deterministic test double for the backend contract.

use std::sync::Mutex;

use promptguard_core::backend::{Backend, RawResponse};
use promptguard_core::keywords::{tokenize, KeywordConfig};
use promptguard_core::prompt::RenderedPrompt;
use promptguard_core::Category;

use crate::retry::{BackendError, Failure, RetryPolicy};

/// One scripted attempt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reply {
    Text(String),
    /// A transient transport failure, retried like a real one.
    Fail,
}

impl Reply {
    pub fn label(category: Category) -> Reply {
        Reply::Text(format!("<classification>{category}</classification>"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OnExhausted {
    Cycle,
    Error,
}

type ReplyFn = Box<dyn Fn(&RenderedPrompt) -> Reply + Send + Sync>;

enum Script {
    Sequence {
        replies: Vec<Reply>,
        on_exhausted: OnExhausted,
        cursor: Mutex<usize>,
    },
    Function(ReplyFn),
}

pub struct MockBackend {
    script: Script,
    retry: RetryPolicy,
    prompts: Mutex<Vec<RenderedPrompt>>,
}

impl MockBackend {
    /// Replies in order, one per attempt.
    ///
    /// # Panics
    /// If `replies` is empty.
    pub fn scripted(replies: Vec<Reply>, on_exhausted: OnExhausted) -> Self {
        assert!(!replies.is_empty(), "mock script must not be empty");
        Self::with_script(Script::Sequence {
            replies,
            on_exhausted,
            cursor: Mutex::new(0),
        })
    }

    pub fn from_fn(f: impl Fn(&RenderedPrompt) -> Reply + Send + Sync + 'static) -> Self {
        Self::with_script(Script::Function(Box::new(f)))
    }

    pub fn constant(label: Category) -> Self {
        Self::scripted(vec![Reply::label(label)], OnExhausted::Cycle)
    }

    /// Votes for the category of the first input token that is one of the
    /// configured keywords; `none` when no token matches.
    pub fn keyword_echo(keywords: KeywordConfig) -> Self {
        Self::from_fn(move |p| {
            let label = keywords.first_match(tokenize(&p.input_text)).unwrap_or(Category::None);
            Reply::label(label)
        })
    }

    fn with_script(script: Script) -> Self {
        MockBackend {
            script,
            retry: RetryPolicy {
                max_retries: 0,
                base_ms: 0,
                cap_ms: 0,
            },
            prompts: Mutex::new(Vec::new()),
        }
    }

    pub fn with_retries(mut self, max_retries: u32) -> Self {
        self.retry.max_retries = max_retries;
        self
    }

    /// Every prompt passed to `classify`, in call order.
    pub fn prompts(&self) -> Vec<RenderedPrompt> {
        self.prompts.lock().unwrap().clone()
    }

    pub fn calls(&self) -> usize {
        self.prompts.lock().unwrap().len()
    }

    fn next_reply(&self, prompt: &RenderedPrompt) -> Result<Reply, BackendError> {
        match &self.script {
            Script::Function(f) => Ok(f(prompt)),
            Script::Sequence {
                replies,
                on_exhausted,
                cursor,
            } => {
                let mut i = cursor.lock().unwrap();
                if *i >= replies.len() && *on_exhausted == OnExhausted::Error {
                    return Err(BackendError::ScriptExhausted { calls: *i });
                }
                let reply = replies[*i % replies.len()].clone();
                *i += 1;
                Ok(reply)
            }
        }
    }
}

impl Backend for MockBackend {
    type Error = BackendError;

    fn classify(&self, prompt: &RenderedPrompt) -> Result<RawResponse, BackendError> {
        self.prompts.lock().unwrap().push(prompt.clone());
        let (text, attempts) = self.retry.run(|_| match self.next_reply(prompt) {
            Ok(Reply::Text(t)) => Ok(t),
            Ok(Reply::Fail) => Err(Failure::Transport("scripted failure".into())),
            Err(e) => Err(Failure::Fatal(e)),
        })?;
        Ok(RawResponse {
            text,
            latency_ms: 0,
            attempts,
        })
    }
}
