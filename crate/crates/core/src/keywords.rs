//! Chi-square keyword extraction.
//!
//! Pipeline: [`tokenize`] each document, build a [`DocumentFrequencyTable`],
//! keep terms inside the document-frequency band ([`filter_vocabulary`]),
//! score every (term, category) pair with the 2x2 Pearson statistic over
//! binary presence and one-vs-rest membership ([`chi_square`]), rank, and
//! finally overlay the curated refinement lists ([`apply_refinement`]).

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::Dataset;
use crate::default_keywords;
use crate::Category;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KeywordError {
    #[error("cannot compute document frequencies of an empty dataset")]
    EmptyDataset,
    #[error("min_df must be at least 1")]
    InvalidMinDf,
    #[error("max_df_ratio must lie in (0, 1], got {0}")]
    InvalidMaxDfRatio(f64),
    #[error("keyword list for {0} is empty")]
    EmptyList(Category),
    #[error("no keyword list may be given for `none`")]
    NoneList,
    #[error("missing keyword list for {0}")]
    MissingList(Category),
    #[error("override term for {0} is blank")]
    BlankTerm(Category),
}

pub const BENGALI_BLOCK: core::ops::RangeInclusive<char> = '\u{0980}'..='\u{09FF}';

fn is_bengali(c: char) -> bool {
    BENGALI_BLOCK.contains(&c)
}

/// Splits on whitespace and punctuation, then keeps only tokens made
/// entirely of Bengali-block code points.
///
/// A separator is whitespace or any character that is neither alphanumeric
/// nor inside the Bengali block (so vowel signs and the virama never split
/// a word, while dandas and ASCII punctuation do).
pub fn tokenize(text: &str) -> Vec<&str> {
    text.split(|c: char| c.is_whitespace() || (!c.is_alphanumeric() && !is_bengali(c)))
        .filter(|tok| !tok.is_empty() && tok.chars().all(is_bengali))
        .collect()
}

fn distinct_tokens(text: &str) -> BTreeSet<&str> {
    tokenize(text).into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentFrequencyTable {
    df: BTreeMap<String, usize>,
    n_docs: usize,
}

impl DocumentFrequencyTable {
    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    /// Zero for terms never seen.
    pub fn df(&self, term: &str) -> usize {
        self.df.get(term).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.df.iter().map(|(t, &n)| (t.as_str(), n))
    }

    pub fn len(&self) -> usize {
        self.df.len()
    }

    pub fn is_empty(&self) -> bool {
        self.df.is_empty()
    }
}

pub fn document_frequency(dataset: &Dataset) -> Result<DocumentFrequencyTable, KeywordError> {
    if dataset.is_empty() {
        return Err(KeywordError::EmptyDataset);
    }
    let mut df = BTreeMap::new();
    for ex in dataset.examples() {
        for tok in distinct_tokens(&ex.text) {
            *df.entry(String::from(tok)).or_insert(0) += 1;
        }
    }
    Ok(DocumentFrequencyTable {
        df,
        n_docs: dataset.len(),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary(BTreeSet<String>);

impl Vocabulary {
    pub fn contains(&self, term: &str) -> bool {
        self.0.contains(term)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

impl FromIterator<String> for Vocabulary {
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        Vocabulary(iter.into_iter().collect())
    }
}

/// Keeps `term` iff `min_df <= df(term)` and `df(term) / n_docs <= max_df_ratio`.
/// Both bounds are inclusive.
pub fn filter_vocabulary(
    table: &DocumentFrequencyTable,
    min_df: usize,
    max_df_ratio: f64,
) -> Result<Vocabulary, KeywordError> {
    if min_df == 0 {
        return Err(KeywordError::InvalidMinDf);
    }
    if !(max_df_ratio > 0.0 && max_df_ratio <= 1.0) {
        return Err(KeywordError::InvalidMaxDfRatio(max_df_ratio));
    }
    let n = table.n_docs as f64;
    if min_df as f64 / n > max_df_ratio {
        log::warn!(
            "min_df {min_df} over {} documents exceeds max_df_ratio {max_df_ratio}; vocabulary will be empty",
            table.n_docs
        );
    }
    Ok(table
        .iter()
        .filter(|&(_, df)| df >= min_df && df as f64 / n <= max_df_ratio)
        .map(|(t, _)| String::from(t))
        .collect())
}

/// The 2x2 table of term presence against one-vs-rest category membership.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyCounts {
    /// In category, term present.
    pub in_with_term: u64,
    /// Outside category, term present.
    pub out_with_term: u64,
    /// In category, term absent.
    pub in_without_term: u64,
    /// Outside category, term absent.
    pub out_without_term: u64,
}

impl ContingencyCounts {
    pub fn total(&self) -> u64 {
        self.in_with_term + self.out_with_term + self.in_without_term + self.out_without_term
    }

    /// Pearson chi-square without continuity correction:
    /// `N (AD - BC)^2 / ((A+B)(C+D)(A+C)(B+D))`, and 0 when any marginal is 0.
    pub fn chi_square(&self) -> f64 {
        let (a, b, c, d) = (
            u128::from(self.in_with_term),
            u128::from(self.out_with_term),
            u128::from(self.in_without_term),
            u128::from(self.out_without_term),
        );
        let denominator = (a + b) * (c + d) * (a + c) * (b + d);
        if denominator == 0 {
            return 0.0;
        }
        let diff = (a * d).abs_diff(b * c);
        let numerator = (a + b + c + d) * diff * diff;
        // One rounding step, so equal rationals give equal floats.
        numerator as f64 / denominator as f64
    }
}

/// Score of `term` for `category` over `dataset`, by direct scan.
pub fn chi_square(term: &str, category: Category, dataset: &Dataset) -> (f64, ContingencyCounts) {
    let mut counts = ContingencyCounts::default();
    for ex in dataset.examples() {
        let present = tokenize(&ex.text).contains(&term);
        let inside = ex.label == category;
        match (inside, present) {
            (true, true) => counts.in_with_term += 1,
            (false, true) => counts.out_with_term += 1,
            (true, false) => counts.in_without_term += 1,
            (false, false) => counts.out_without_term += 1,
        }
    }
    (counts.chi_square(), counts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredTerm {
    pub term: String,
    pub score: f64,
    pub counts: ContingencyCounts,
}

/// Per-category keywords, descending by score, ties ordered by term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordTable {
    categories: BTreeMap<Category, Vec<ScoredTerm>>,
}

impl KeywordTable {
    pub fn terms(&self, category: Category) -> &[ScoredTerm] {
        self.categories.get(&category).map(Vec::as_slice).unwrap_or(&[])
    }
}

pub fn rank_keywords(dataset: &Dataset, vocab: &Vocabulary, top_k: usize) -> KeywordTable {
    let n_docs = dataset.len() as u64;
    let class_sizes = dataset.counts();

    // presence[term][category] = documents of that category containing term
    let mut presence: BTreeMap<&str, [u64; Category::COUNT]> =
        vocab.iter().map(|t| (t, [0; Category::COUNT])).collect();
    for ex in dataset.examples() {
        for tok in distinct_tokens(&ex.text) {
            if let Some(row) = presence.get_mut(tok) {
                row[ex.label.index()] += 1;
            }
        }
    }

    let categories = Category::ALL
        .into_iter()
        .map(|category| {
            let in_class = class_sizes[category.index()] as u64;
            let mut scored: Vec<ScoredTerm> = presence
                .iter()
                .map(|(&term, row)| {
                    let df: u64 = row.iter().sum();
                    let a = row[category.index()];
                    let counts = ContingencyCounts {
                        in_with_term: a,
                        out_with_term: df - a,
                        in_without_term: in_class - a,
                        out_without_term: n_docs - in_class - (df - a),
                    };
                    ScoredTerm {
                        term: String::from(term),
                        score: counts.chi_square(),
                        counts,
                    }
                })
                .collect();
            scored.sort_by(|x, y| y.score.total_cmp(&x.score).then_with(|| x.term.cmp(&y.term)));
            scored.truncate(top_k);
            (category, scored)
        })
        .collect();
    KeywordTable { categories }
}

/// Ordered keyword lists for the five hate categories.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<Category, Vec<String>>")]
pub struct KeywordConfig {
    #[serde(flatten)]
    lists: BTreeMap<Category, Vec<String>>,
}

impl TryFrom<BTreeMap<Category, Vec<String>>> for KeywordConfig {
    type Error = KeywordError;

    fn try_from(lists: BTreeMap<Category, Vec<String>>) -> Result<Self, Self::Error> {
        if lists.contains_key(&Category::None) {
            return Err(KeywordError::NoneList);
        }
        for category in Category::KEYWORD_ORDER {
            match lists.get(&category) {
                None => return Err(KeywordError::MissingList(category)),
                Some(list) if list.is_empty() => return Err(KeywordError::EmptyList(category)),
                Some(_) => {}
            }
        }
        Ok(KeywordConfig { lists })
    }
}

impl KeywordConfig {
    pub fn new(lists: BTreeMap<Category, Vec<String>>) -> Result<Self, KeywordError> {
        Self::try_from(lists)
    }

    pub fn keywords(&self, category: Category) -> &[String] {
        self.lists.get(&category).map(Vec::as_slice).unwrap_or(&[])
    }

    /// The curated lists the default prompt ships with.
    pub fn curated() -> Self {
        let lists = [
            (Category::Abusive, default_keywords::ABUSIVE),
            (Category::Profane, default_keywords::PROFANE),
            (Category::ReligiousHate, default_keywords::RELIGIOUS_HATE),
            (Category::PoliticalHate, default_keywords::POLITICAL_HATE),
            (Category::Sexism, default_keywords::SEXISM),
        ]
        .into_iter()
        .map(|(c, words)| (c, words.iter().map(|&w| String::from(w)).collect()))
        .collect();
        KeywordConfig { lists }
    }

    /// First hate category (in keyword-block order) with a keyword among `tokens`.
    pub fn first_match<'a>(&self, tokens: impl IntoIterator<Item = &'a str>) -> Option<Category> {
        tokens.into_iter().find_map(|tok| {
            Category::KEYWORD_ORDER
                .into_iter()
                .find(|c| self.keywords(*c).iter().any(|k| k == tok))
        })
    }
}

/// Manual edits applied to one category's ranked terms.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CategoryOverride {
    /// Discard the ranked terms entirely before adding.
    pub replace: bool,
    pub remove: Vec<String>,
    pub add: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Refinement(pub BTreeMap<Category, CategoryOverride>);

impl Refinement {
    /// Replaces every ranked list with the curated lists.
    pub fn curated() -> Self {
        let config = KeywordConfig::curated();
        Refinement(
            Category::KEYWORD_ORDER
                .into_iter()
                .map(|c| {
                    (
                        c,
                        CategoryOverride {
                            replace: true,
                            remove: Vec::new(),
                            add: config.keywords(c).to_vec(),
                        },
                    )
                })
                .collect(),
        )
    }
}

/// Ranked terms with removals applied, then additions appended in order
/// (skipping terms already present).
pub fn apply_refinement(table: &KeywordTable, refinement: &Refinement) -> Result<KeywordConfig, KeywordError> {
    if refinement.0.contains_key(&Category::None) {
        return Err(KeywordError::NoneList);
    }
    let empty = CategoryOverride::default();
    let mut lists = BTreeMap::new();
    for category in Category::KEYWORD_ORDER {
        let edit = refinement.0.get(&category).unwrap_or(&empty);
        if edit.add.iter().chain(&edit.remove).any(|t| t.trim().is_empty()) {
            return Err(KeywordError::BlankTerm(category));
        }
        let mut terms: Vec<String> = if edit.replace {
            Vec::new()
        } else {
            table.terms(category).iter().map(|s| s.term.clone()).collect()
        };
        terms.retain(|t| !edit.remove.contains(t));
        for term in &edit.add {
            if !terms.contains(term) {
                terms.push(term.clone());
            }
        }
        if terms.is_empty() {
            return Err(KeywordError::EmptyList(category));
        }
        lists.insert(category, terms);
    }
    Ok(KeywordConfig { lists })
}
