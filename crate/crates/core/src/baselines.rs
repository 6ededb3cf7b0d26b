//! Reference baselines: uniform random, majority class, and a character
//! n-gram multinomial Naive Bayes.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Dataset;
use crate::eval::{Prediction, PredictionSet};
use crate::seed;
use crate::Category;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BaselineError {
    #[error("training set is empty")]
    EmptyTrain,
    #[error("training set has no examples of {0}")]
    MissingClass(Category),
    #[error("invalid n-gram range {0}..={1}")]
    InvalidRange(usize, usize),
    #[error("smoothing must be positive and finite, got {0}")]
    InvalidSmoothing(f64),
}

fn predictions(test: &Dataset, mut label: impl FnMut(&str) -> Category) -> PredictionSet {
    let items = test
        .examples()
        .iter()
        .map(|ex| Prediction {
            id: ex.id.clone(),
            gold: ex.label,
            predicted: label(&ex.text),
        })
        .collect();
    PredictionSet::new(items).expect("dataset ids are unique")
}

pub fn random_baseline(test: &Dataset, seed: u64) -> PredictionSet {
    let mut rng = seed::rng(seed);
    predictions(test, |_| Category::ALL[rng.gen_range(0..Category::COUNT)])
}

/// Most frequent training label; ties go to the earliest canonical label.
pub fn majority_label(train: &Dataset) -> Result<Category, BaselineError> {
    if train.is_empty() {
        return Err(BaselineError::EmptyTrain);
    }
    let counts = train.counts();
    let mut best = Category::None;
    for c in Category::ALL {
        if counts[c.index()] > counts[best.index()] {
            best = c;
        }
    }
    Ok(best)
}

pub fn majority_baseline(train: &Dataset, test: &Dataset) -> Result<PredictionSet, BaselineError> {
    let label = majority_label(train)?;
    Ok(predictions(test, |_| label))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NGramConfig {
    pub min_n: usize,
    pub max_n: usize,
    pub smoothing: f64,
    /// Reject training sets that lack any of the six labels.
    pub require_all_classes: bool,
}

impl Default for NGramConfig {
    fn default() -> Self {
        NGramConfig {
            min_n: 1,
            max_n: 3,
            smoothing: 1.0,
            require_all_classes: true,
        }
    }
}

/// Character n-grams of `text` for every n in `min_n..=max_n`, with repeats.
pub fn char_ngrams(text: &str, min_n: usize, max_n: usize) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    (min_n..=max_n)
        .flat_map(|n| {
            chars
                .windows(n)
                .map(|w| w.iter().collect::<String>())
                .collect::<Vec<_>>()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NGramModel {
    config: NGramConfig,
    /// Labels seen in training, canonical order.
    classes: Vec<Category>,
    log_prior: [f64; Category::COUNT],
    log_likelihood: BTreeMap<String, [f64; Category::COUNT]>,
    /// Log-likelihood of a gram never seen in training.
    unseen: [f64; Category::COUNT],
}

pub fn ngram_train(train: &Dataset, config: NGramConfig) -> Result<NGramModel, BaselineError> {
    if train.is_empty() {
        return Err(BaselineError::EmptyTrain);
    }
    if config.min_n == 0 || config.min_n > config.max_n {
        return Err(BaselineError::InvalidRange(config.min_n, config.max_n));
    }
    if !(config.smoothing > 0.0 && config.smoothing.is_finite()) {
        return Err(BaselineError::InvalidSmoothing(config.smoothing));
    }
    let class_docs = train.counts();
    if config.require_all_classes {
        if let Some(c) = Category::ALL.into_iter().find(|c| class_docs[c.index()] == 0) {
            return Err(BaselineError::MissingClass(c));
        }
    }
    let classes: Vec<Category> = Category::ALL
        .into_iter()
        .filter(|c| class_docs[c.index()] > 0)
        .collect();

    let mut counts: BTreeMap<String, [u64; Category::COUNT]> = BTreeMap::new();
    let mut totals = [0u64; Category::COUNT];
    for ex in train.examples() {
        for gram in char_ngrams(&ex.text, config.min_n, config.max_n) {
            counts.entry(gram).or_default()[ex.label.index()] += 1;
            totals[ex.label.index()] += 1;
        }
    }

    let n_docs = train.len() as f64;
    let vocab = counts.len() as f64;
    let alpha = config.smoothing;
    let mut log_prior = [f64::NEG_INFINITY; Category::COUNT];
    let mut denominators = [0.0; Category::COUNT];
    for c in &classes {
        let i = c.index();
        log_prior[i] = libm::log(class_docs[i] as f64 / n_docs);
        denominators[i] = totals[i] as f64 + alpha * vocab;
    }
    let unseen = core::array::from_fn(|i| libm::log(alpha / denominators[i]));
    let log_likelihood = counts
        .into_iter()
        .map(|(gram, row)| {
            let ll = core::array::from_fn(|i| libm::log((row[i] as f64 + alpha) / denominators[i]));
            (gram, ll)
        })
        .collect();

    Ok(NGramModel {
        config,
        classes,
        log_prior,
        log_likelihood,
        unseen,
    })
}

impl NGramModel {
    pub fn classes(&self) -> &[Category] {
        &self.classes
    }

    pub fn log_prior(&self, class: Category) -> f64 {
        self.log_prior[class.index()]
    }

    pub fn log_likelihood(&self, class: Category, gram: &str) -> f64 {
        self.log_likelihood
            .get(gram)
            .map_or(self.unseen[class.index()], |row| row[class.index()])
    }

    /// Unnormalised log joint `log P(c) + sum log P(gram | c)` per trained class.
    pub fn joint_log_scores(&self, text: &str) -> Vec<(Category, f64)> {
        let grams = char_ngrams(text, self.config.min_n, self.config.max_n);
        self.classes
            .iter()
            .map(|&c| {
                let ll: f64 = grams.iter().map(|g| self.log_likelihood(c, g)).sum();
                (c, self.log_prior(c) + ll)
            })
            .collect()
    }

    /// Posterior probabilities per trained class.
    pub fn posterior(&self, text: &str) -> Vec<(Category, f64)> {
        let scores = self.joint_log_scores(text);
        let max = scores.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
        let norm: f64 = scores.iter().map(|s| libm::exp(s.1 - max)).sum();
        scores
            .into_iter()
            .map(|(c, s)| (c, libm::exp(s - max) / norm))
            .collect()
    }

    /// Highest joint score; ties to the earliest canonical label.
    pub fn predict(&self, text: &str) -> Category {
        let mut best: Option<(Category, f64)> = None;
        for (c, s) in self.joint_log_scores(text) {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((c, s));
            }
        }
        best.map(|b| b.0).expect("a trained model has at least one class")
    }
}

pub fn ngram_predict(model: &NGramModel, test: &Dataset) -> PredictionSet {
    predictions(test, |text| model.predict(text))
}
