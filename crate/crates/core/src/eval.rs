//! Micro-F1, per-class scores, and the confusion matrix.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::{self, CorpusError, Dataset, Shortfall};
use crate::Category;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("no predictions to evaluate")]
    Empty,
    #[error("prediction id {0:?} appears more than once")]
    DuplicateId(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub gold: Category,
    pub predicted: Category,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PredictionSet {
    items: Vec<Prediction>,
}

impl PredictionSet {
    pub fn new(items: Vec<Prediction>) -> Result<Self, EvalError> {
        let mut seen = BTreeSet::new();
        if let Some(dup) = items.iter().find(|p| !seen.insert(p.id.as_str())) {
            return Err(EvalError::DuplicateId(dup.id.clone()));
        }
        Ok(PredictionSet { items })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Prediction> {
        self.items.iter()
    }

    fn non_empty(&self) -> Result<&Self, EvalError> {
        if self.items.is_empty() {
            Err(EvalError::Empty)
        } else {
            Ok(self)
        }
    }
}

/// Rows are gold labels, columns predictions, both in canonical order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix(pub [[u64; Category::COUNT]; Category::COUNT]);

impl ConfusionMatrix {
    pub fn get(&self, gold: Category, predicted: Category) -> u64 {
        self.0[gold.index()][predicted.index()]
    }

    pub fn total(&self) -> u64 {
        self.0.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..Category::COUNT).map(|i| self.0[i][i]).sum()
    }

    pub fn row_sum(&self, gold: Category) -> u64 {
        self.0[gold.index()].iter().sum()
    }

    pub fn column_sum(&self, predicted: Category) -> u64 {
        self.0.iter().map(|row| row[predicted.index()]).sum()
    }
}

pub fn confusion_matrix(preds: &PredictionSet) -> Result<ConfusionMatrix, EvalError> {
    let mut m = ConfusionMatrix::default();
    for p in &preds.non_empty()?.items {
        m.0[p.gold.index()][p.predicted.index()] += 1;
    }
    Ok(m)
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// F1 of the true/false positive and false negative counts summed over classes.
pub fn micro_f1(preds: &PredictionSet) -> Result<f64, EvalError> {
    let m = confusion_matrix(preds)?;
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for c in Category::ALL {
        let hit = m.get(c, c);
        tp += hit;
        fp += m.column_sum(c) - hit;
        fn_ += m.row_sum(c) - hit;
    }
    Ok(f1(ratio(tp, tp + fp), ratio(tp, tp + fn_)))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
    pub support: u64,
}

/// One-vs-rest scores per class. A ratio with a zero denominator is 0.
pub fn per_class_report(preds: &PredictionSet) -> Result<[ClassMetrics; Category::COUNT], EvalError> {
    let m = confusion_matrix(preds)?;
    Ok(Category::ALL.map(|c| {
        let tp = m.get(c, c);
        let fp = m.column_sum(c) - tp;
        let fn_ = m.row_sum(c) - tp;
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        ClassMetrics {
            precision,
            recall,
            f1: f1(precision, recall),
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_,
            support: tp + fn_,
        }
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub n: u64,
    pub micro_f1: f64,
    pub labels: Vec<Category>,
    pub per_class: BTreeMap<Category, ClassMetrics>,
    pub confusion_matrix: Vec<Vec<u64>>,
    /// How undefined precision/recall values are reported.
    pub zero_division: String,
}

pub fn evaluate(preds: &PredictionSet) -> Result<EvaluationReport, EvalError> {
    let m = confusion_matrix(preds)?;
    let per_class = per_class_report(preds)?;
    Ok(EvaluationReport {
        n: m.total(),
        micro_f1: micro_f1(preds)?,
        labels: Category::ALL.to_vec(),
        per_class: Category::ALL.into_iter().zip(per_class).collect(),
        confusion_matrix: m.0.iter().map(|row| row.to_vec()).collect(),
        zero_division: String::from("0"),
    })
}

/// `per_label` examples of every label, uniformly without replacement.
pub fn balanced_test_subset(dataset: &Dataset, per_label: usize, seed: u64) -> Result<Dataset, CorpusError> {
    let lists = corpus::sample_per_category(dataset, per_label, seed, Shortfall::Reject)?;
    Dataset::new(lists.into_iter().flatten().collect())
}
