//! The closed set of six labels.

use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

/// One of the six hate speech categories.
///
/// The declaration order is the canonical order used for confusion matrix
/// rows/columns, example rendering, and every deterministic tie rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "none")]
    None,
    #[serde(rename = "sexism")]
    Sexism,
    #[serde(rename = "abusive")]
    Abusive,
    #[serde(rename = "profane")]
    Profane,
    #[serde(rename = "religious hate")]
    ReligiousHate,
    #[serde(rename = "political hate")]
    PoliticalHate,
}

impl Category {
    pub const COUNT: usize = 6;

    pub const ALL: [Category; Category::COUNT] = [
        Category::None,
        Category::Sexism,
        Category::Abusive,
        Category::Profane,
        Category::ReligiousHate,
        Category::PoliticalHate,
    ];

    /// The five hate categories in the order the keyword block lists them.
    pub const KEYWORD_ORDER: [Category; 5] = [
        Category::Abusive,
        Category::Profane,
        Category::ReligiousHate,
        Category::PoliticalHate,
        Category::Sexism,
    ];

    pub const fn as_str(self) -> &'static str {
        match self {
            Category::None => "none",
            Category::Sexism => "sexism",
            Category::Abusive => "abusive",
            Category::Profane => "profane",
            Category::ReligiousHate => "religious hate",
            Category::PoliticalHate => "political hate",
        }
    }

    /// Position in the canonical order.
    pub const fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Category> {
        Category::ALL.get(index).copied()
    }

    pub fn is_hate(self) -> bool {
        self != Category::None
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A label string outside the closed set.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown label {value:?}; expected one of: none, sexism, abusive, profane, religious hate, political hate")]
pub struct UnknownLabel {
    pub value: alloc::string::String,
}

impl FromStr for Category {
    type Err = UnknownLabel;

    /// Exact match against the canonical names. Normalisation of model
    /// output happens in the response parser, not here.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| UnknownLabel { value: s.into() })
    }
}
