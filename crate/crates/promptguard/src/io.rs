//! Dataset and prediction file formats.
//!
//! Datasets are JSONL (`{"id", "text", "label"}` per line, `id` optional) or
//! TSV with a header naming the `id`, `text` and `label` columns. Missing ids
//! become `row-<line number>`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use promptguard_core::corpus::{CorpusError, Dataset, LabeledExample};
use promptguard_core::voting::{Tally, Termination, VotingOutcome};
use promptguard_core::Category;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: unknown label {value:?}; expected one of: none, sexism, abusive, profane, religious hate, political hate")]
    UnknownLabel { line: usize, value: String },
    #[error("line {line}: missing label")]
    MissingLabel { line: usize },
    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> FormatError + '_ {
    move |source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Jsonl,
    Tsv,
}

impl DataFormat {
    /// `.tsv` files are TSV, everything else JSONL.
    pub fn from_path(path: &Path) -> DataFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") => DataFormat::Tsv,
            _ => DataFormat::Jsonl,
        }
    }
}

/// One input row; the label is optional so unlabeled inputs share the reader.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputItem {
    pub line: usize,
    pub id: String,
    pub text: String,
    pub label: Option<Category>,
}

#[derive(Deserialize)]
struct JsonRow {
    #[serde(default)]
    id: Option<serde_json::Value>,
    text: String,
    #[serde(default)]
    label: Option<String>,
}

fn parse_label(line: usize, raw: &str) -> Result<Category, FormatError> {
    Category::from_str(raw).map_err(|_| FormatError::UnknownLabel {
        line,
        value: raw.to_string(),
    })
}

fn synthesize_id(line: usize) -> String {
    format!("row-{line}")
}

fn check_text(line: usize, text: &str) -> Result<(), FormatError> {
    if text.trim().is_empty() {
        return Err(FormatError::Malformed {
            line,
            message: "empty text".into(),
        });
    }
    Ok(())
}

pub fn parse_jsonl(content: &str) -> Result<Vec<InputItem>, FormatError> {
    let mut items = Vec::new();
    for (i, raw) in content.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let row: JsonRow = serde_json::from_str(raw).map_err(|e| FormatError::Malformed {
            line,
            message: e.to_string(),
        })?;
        let id = match row.id {
            None | Some(serde_json::Value::Null) => synthesize_id(line),
            Some(serde_json::Value::String(s)) => s,
            Some(serde_json::Value::Number(n)) => n.to_string(),
            Some(other) => {
                return Err(FormatError::Malformed {
                    line,
                    message: format!("id must be a string, got {other}"),
                })
            }
        };
        check_text(line, &row.text)?;
        let label = row.label.as_deref().map(|l| parse_label(line, l)).transpose()?;
        items.push(InputItem {
            line,
            id,
            text: row.text,
            label,
        });
    }
    Ok(items)
}

pub fn parse_tsv(content: &str) -> Result<Vec<InputItem>, FormatError> {
    let mut lines = content.lines().enumerate();
    let header: Vec<&str> = match lines.next() {
        Some((_, h)) => h.trim_end_matches('\r').split('\t').collect(),
        None => return Ok(Vec::new()),
    };
    let column = |name: &str| header.iter().position(|h| h.trim() == name);
    let text_col = column("text").ok_or_else(|| FormatError::Malformed {
        line: 1,
        message: "header has no `text` column".into(),
    })?;
    let id_col = column("id");
    let label_col = column("label");

    let mut items = Vec::new();
    for (i, raw) in lines {
        let line = i + 1;
        let raw = raw.trim_end_matches('\r');
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() != header.len() {
            return Err(FormatError::Malformed {
                line,
                message: format!("expected {} fields, found {}", header.len(), fields.len()),
            });
        }
        let text = fields[text_col].to_string();
        check_text(line, &text)?;
        let id = match id_col.map(|c| fields[c].trim()) {
            Some(id) if !id.is_empty() => id.to_string(),
            _ => synthesize_id(line),
        };
        let label = label_col.map(|c| parse_label(line, fields[c].trim())).transpose()?;
        items.push(InputItem { line, id, text, label });
    }
    Ok(items)
}

pub fn parse_items(content: &str, format: DataFormat) -> Result<Vec<InputItem>, FormatError> {
    let items = match format {
        DataFormat::Jsonl => parse_jsonl(content)?,
        DataFormat::Tsv => parse_tsv(content)?,
    };
    let mut seen = BTreeSet::new();
    for item in &items {
        if !seen.insert(item.id.as_str()) {
            return Err(FormatError::DuplicateId {
                line: item.line,
                id: item.id.clone(),
            });
        }
    }
    Ok(items)
}

pub fn items_to_dataset(items: Vec<InputItem>) -> Result<Dataset, FormatError> {
    let examples = items
        .into_iter()
        .map(|item| match item.label {
            Some(label) => Ok(LabeledExample {
                id: item.id,
                text: item.text,
                label,
            }),
            None => Err(FormatError::MissingLabel { line: item.line }),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Dataset::new(examples)?)
}

pub fn parse_dataset(content: &str, format: DataFormat) -> Result<Dataset, FormatError> {
    items_to_dataset(parse_items(content, format)?)
}

pub fn read_items(path: &Path, format: DataFormat) -> Result<Vec<InputItem>, FormatError> {
    let content = fs::read_to_string(path).map_err(io_err(path))?;
    parse_items(&content, format)
}

pub fn load_dataset(path: &Path, format: DataFormat) -> Result<Dataset, FormatError> {
    let content = fs::read_to_string(path).map_err(io_err(path))?;
    parse_dataset(&content, format)
}

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<Category>,
    pub label: Category,
    /// Absent for baseline predictions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turns_used: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tally: Option<Tally>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub termination: Option<Termination>,
}

impl PredictionRecord {
    pub fn from_outcome(id: &str, gold: Option<Category>, outcome: &VotingOutcome) -> Self {
        PredictionRecord {
            id: id.to_string(),
            gold,
            label: outcome.label,
            turns_used: Some(outcome.turns_used),
            tally: Some(outcome.tally),
            termination: Some(outcome.termination),
        }
    }

    pub fn to_line(&self) -> String {
        let mut line = serde_json::to_string(self).expect("records serialize");
        line.push('\n');
        line
    }
}

pub fn parse_predictions(content: &str) -> Result<Vec<PredictionRecord>, FormatError> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, raw) in content.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let record: PredictionRecord = serde_json::from_str(raw).map_err(|e| FormatError::Malformed {
            line,
            message: e.to_string(),
        })?;
        if !seen.insert(record.id.clone()) {
            return Err(FormatError::DuplicateId { line, id: record.id });
        }
        out.push(record);
    }
    Ok(out)
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>, FormatError> {
    let content = fs::read_to_string(path).map_err(io_err(path))?;
    parse_predictions(&content)
}

/// Ids of complete lines in an existing predictions file. A trailing line
/// without a newline (an interrupted write) is cut off the file.
pub fn recover_predictions(path: &Path) -> Result<BTreeSet<String>, FormatError> {
    let content = match fs::read_to_string(path) {
        Ok(c) => c,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(BTreeSet::new()),
        Err(e) => return Err(io_err(path)(e)),
    };
    let complete = match content.rfind('\n') {
        Some(end) => &content[..=end],
        None => "",
    };
    if complete.len() != content.len() {
        log::warn!("{}: dropping incomplete trailing line", path.display());
        fs::write(path, complete).map_err(io_err(path))?;
    }
    Ok(parse_predictions(complete)?.into_iter().map(|r| r.id).collect())
}

pub fn write_predictions(path: &Path, records: &[PredictionRecord]) -> Result<(), FormatError> {
    let mut f = io::BufWriter::new(fs::File::create(path).map_err(io_err(path))?);
    for r in records {
        f.write_all(r.to_line().as_bytes()).map_err(io_err(path))?;
    }
    f.flush().map_err(io_err(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), FormatError> {
    let mut text = serde_json::to_string_pretty(value).expect("artifacts serialize");
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_to_string(path: &Path) -> Result<String, FormatError> {
    fs::read_to_string(path).map_err(io_err(path))
}

/// Ids present on one side of a join but not the other.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMismatch {
    pub missing: Vec<String>,
    pub extra: Vec<String>,
}

pub fn compare_ids<'a>(
    expected: impl IntoIterator<Item = &'a str>,
    actual: impl IntoIterator<Item = &'a str>,
) -> IdMismatch {
    let expected: BTreeSet<&str> = expected.into_iter().collect();
    let actual: BTreeSet<&str> = actual.into_iter().collect();
    IdMismatch {
        missing: expected.difference(&actual).map(|s| s.to_string()).collect(),
        extra: actual.difference(&expected).map(|s| s.to_string()).collect(),
    }
}

/// Gold labels by id.
pub fn gold_index(dataset: &Dataset) -> BTreeMap<&str, Category> {
    dataset.examples().iter().map(|e| (e.id.as_str(), e.label)).collect()
}
