//! Prompt rendering.
//!
//! Templates carry `{{EXAMPLES}}`, `{{INPUT_SENTENCE}}` and, for the keyword
//! variant, `{{CATEGORY_KEYWORDS}}`. Substitution is a single left-to-right
//! pass over the template: substituted text is never rescanned, so an input
//! sentence containing `{{EXAMPLES}}` comes out unchanged.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{ExampleSet, Provenance};
use crate::keywords::KeywordConfig;
use crate::Category;

pub const WITH_KEYWORDS_TEMPLATE: &str = include_str!("../templates/prompt_with_keywords.txt");
pub const BASIC_TEMPLATE: &str = include_str!("../templates/prompt_basic.txt");

pub const CLASSIFICATION_INSTRUCTION: &str = "Provide your classification inside <classification> tags.";

const EXAMPLES: &str = "EXAMPLES";
const INPUT_SENTENCE: &str = "INPUT_SENTENCE";
const CATEGORY_KEYWORDS: &str = "CATEGORY_KEYWORDS";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("the keyword prompt needs a keyword config")]
    MissingKeywords,
    #[error("template placeholder {{{{{name}}}}} appears {count} times, expected {expected}")]
    PlaceholderCount {
        name: &'static str,
        count: usize,
        expected: usize,
    },
    #[error("template has unknown placeholder {{{{{0}}}}}")]
    UnknownPlaceholder(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptVariant {
    WithKeywords,
    Basic,
}

impl PromptVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            PromptVariant::WithKeywords => "with-keywords",
            PromptVariant::Basic => "basic",
        }
    }
}

impl fmt::Display for PromptVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "with-keywords" | "with_keywords" => Ok(PromptVariant::WithKeywords),
            "basic" => Ok(PromptVariant::Basic),
            other => Err(alloc::format!("unknown prompt variant {other:?}")),
        }
    }
}

/// Splits a template into literal text and placeholder names.
fn segments(template: &str) -> Vec<Segment<'_>> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find("{{") {
        match rest[open + 2..].find("}}") {
            Some(close) => {
                out.push(Segment::Text(&rest[..open]));
                out.push(Segment::Slot(&rest[open + 2..open + 2 + close]));
                rest = &rest[open + 2 + close + 2..];
            }
            None => break,
        }
    }
    out.push(Segment::Text(rest));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Segment<'a> {
    Text(&'a str),
    Slot(&'a str),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    variant: PromptVariant,
    text: String,
}

impl PromptTemplate {
    pub fn new(variant: PromptVariant, text: impl Into<String>) -> Result<Self, PromptError> {
        let text = text.into();
        let slots: Vec<&str> = segments(&text)
            .into_iter()
            .filter_map(|s| match s {
                Segment::Slot(name) => Some(name),
                Segment::Text(_) => None,
            })
            .collect();
        if let Some(unknown) = slots
            .iter()
            .find(|s| ![EXAMPLES, INPUT_SENTENCE, CATEGORY_KEYWORDS].contains(s))
        {
            return Err(PromptError::UnknownPlaceholder(String::from(*unknown)));
        }
        let keyword_slots = usize::from(variant == PromptVariant::WithKeywords);
        for (name, expected) in [(EXAMPLES, 1), (INPUT_SENTENCE, 1), (CATEGORY_KEYWORDS, keyword_slots)] {
            let count = slots.iter().filter(|s| **s == name).count();
            if count != expected {
                return Err(PromptError::PlaceholderCount { name, count, expected });
            }
        }
        Ok(PromptTemplate { variant, text })
    }

    pub fn builtin(variant: PromptVariant) -> Self {
        let text = match variant {
            PromptVariant::WithKeywords => WITH_KEYWORDS_TEMPLATE,
            PromptVariant::Basic => BASIC_TEMPLATE,
        };
        PromptTemplate::new(variant, text).expect("built-in templates are valid")
    }

    pub fn variant(&self) -> PromptVariant {
        self.variant
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub text: String,
    pub variant: PromptVariant,
    pub provenance: Provenance,
    pub input_id: String,
    /// The raw sentence, also embedded in `text`.
    pub input_text: String,
}

/// One `<category>: <text>` line per example, categories in canonical order.
pub fn render_examples(set: &ExampleSet) -> String {
    let mut lines = Vec::with_capacity(set.shots() * Category::COUNT);
    for category in Category::ALL {
        for ex in set.category(category) {
            lines.push(alloc::format!("{category}: {}", ex.text));
        }
    }
    lines.join("\n")
}

pub fn render_keywords(config: &KeywordConfig) -> String {
    let mut out = String::from("<category_keywords>\n");
    for category in Category::KEYWORD_ORDER {
        out.push_str(category.as_str());
        out.push_str(": ");
        out.push_str(&config.keywords(category).join(", "));
        out.push('\n');
    }
    out.push_str("</category_keywords>");
    out
}

pub fn render_prompt(
    template: &PromptTemplate,
    examples: &ExampleSet,
    keywords: Option<&KeywordConfig>,
    input_id: &str,
    input_text: &str,
) -> Result<RenderedPrompt, PromptError> {
    let keyword_block = match (template.variant, keywords) {
        (PromptVariant::WithKeywords, None) => return Err(PromptError::MissingKeywords),
        (PromptVariant::WithKeywords, Some(config)) => render_keywords(config),
        (PromptVariant::Basic, _) => String::new(),
    };
    let example_block = render_examples(examples);

    let mut text = String::with_capacity(template.text.len() + example_block.len() + input_text.len());
    for segment in segments(&template.text) {
        match segment {
            Segment::Text(t) => text.push_str(t),
            Segment::Slot(EXAMPLES) => text.push_str(&example_block),
            Segment::Slot(INPUT_SENTENCE) => text.push_str(input_text),
            Segment::Slot(CATEGORY_KEYWORDS) => text.push_str(&keyword_block),
            Segment::Slot(other) => return Err(PromptError::UnknownPlaceholder(String::from(other))),
        }
    }
    Ok(RenderedPrompt {
        text,
        variant: template.variant,
        provenance: examples.provenance(),
        input_id: String::from(input_id),
        input_text: String::from(input_text),
    })
}
