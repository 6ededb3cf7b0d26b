//! Keyword config files: the five hate-category lists plus an optional
//! `overrides` object used as the refinement overlay.

use std::collections::BTreeMap;
use std::path::Path;

use promptguard_core::keywords::{KeywordConfig, KeywordError, Refinement};
use promptguard_core::Category;
use serde_json::{Map, Value};

use crate::io::{self, FormatError};

pub const BUILTIN: &str = include_str!("../assets/keywords.json");

const OVERRIDES: &str = "overrides";
const RUN_CONFIG: &str = "run_config";

#[derive(Debug, thiserror::Error)]
pub enum KeywordFileError {
    #[error("keyword file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("keyword file: {0}")]
    Keywords(#[from] KeywordError),
    #[error(transparent)]
    Format(#[from] FormatError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordFile {
    pub keywords: KeywordConfig,
    pub overrides: Option<Refinement>,
}

impl KeywordFile {
    /// The shipped file: curated lists, and overrides that reproduce them.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("shipped keyword file is valid")
    }

    pub fn parse(text: &str) -> Result<Self, KeywordFileError> {
        let mut map: Map<String, Value> = serde_json::from_str(text)?;
        let overrides = map
            .remove(OVERRIDES)
            .map(serde_json::from_value::<Refinement>)
            .transpose()?;
        map.remove(RUN_CONFIG);
        let lists: BTreeMap<Category, Vec<String>> = serde_json::from_value(Value::Object(map))?;
        Ok(KeywordFile {
            keywords: KeywordConfig::new(lists)?,
            overrides,
        })
    }

    pub fn load(path: &Path) -> Result<Self, KeywordFileError> {
        Self::parse(&io::read_to_string(path)?)
    }

    /// JSON form; `run_config` is echoed alongside and ignored on load.
    pub fn to_json(&self, run_config: Option<Value>) -> Value {
        let mut map = Map::new();
        for c in Category::KEYWORD_ORDER {
            map.insert(c.to_string(), Value::from(self.keywords.keywords(c).to_vec()));
        }
        if let Some(o) = &self.overrides {
            map.insert(OVERRIDES.into(), serde_json::to_value(o).expect("overrides serialize"));
        }
        if let Some(rc) = run_config {
            map.insert(RUN_CONFIG.into(), rc);
        }
        Value::Object(map)
    }
}
