//! The one-attempt classification contract and response parsing.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::prompt::RenderedPrompt;
use crate::Category;

const OPEN_TAG: &str = "<classification>";
const CLOSE_TAG: &str = "</classification>";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawResponse {
    pub text: String,
    pub latency_ms: u64,
    /// Attempts spent on this response, including the successful one.
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParsedVote {
    Vote(Category),
    ParseFailure(String),
}

impl ParsedVote {
    pub fn category(&self) -> Option<Category> {
        match self {
            ParsedVote::Vote(c) => Some(*c),
            ParsedVote::ParseFailure(_) => None,
        }
    }
}

fn normalize(label: &str) -> String {
    label.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Reads the content of the last `<classification>...</classification>` pair.
pub fn parse_classification(text: &str) -> ParsedVote {
    let failure = || ParsedVote::ParseFailure(String::from(text));
    let Some(close) = text.rfind(CLOSE_TAG) else {
        return failure();
    };
    let Some(open) = text[..close].rfind(OPEN_TAG) else {
        return failure();
    };
    let inner = &text[open + OPEN_TAG.len()..close];
    match normalize(inner).parse::<Category>() {
        Ok(c) => ParsedVote::Vote(c),
        Err(_) => failure(),
    }
}

impl RawResponse {
    pub fn parse(&self) -> ParsedVote {
        parse_classification(&self.text)
    }
}

/// Something that answers one rendered prompt with raw model text.
pub trait Backend {
    type Error;

    fn classify(&self, prompt: &RenderedPrompt) -> Result<RawResponse, Self::Error>;

    /// Answers independent prompts, results in input order. Implementations
    /// may run the calls concurrently.
    fn classify_many(&self, prompts: &[RenderedPrompt]) -> Vec<Result<RawResponse, Self::Error>> {
        prompts.iter().map(|p| self.classify(p)).collect()
    }
}

impl<B: Backend + ?Sized> Backend for &B {
    type Error = B::Error;

    fn classify(&self, prompt: &RenderedPrompt) -> Result<RawResponse, Self::Error> {
        (**self).classify(prompt)
    }

    fn classify_many(&self, prompts: &[RenderedPrompt]) -> Vec<Result<RawResponse, Self::Error>> {
        (**self).classify_many(prompts)
    }
}
