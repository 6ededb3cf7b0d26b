//! Labeled corpora, the balanced training pool, and per-turn example sets.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::array;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::seed;
use crate::Category;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("duplicate example id {0:?}")]
    DuplicateId(String),
    #[error("example {id:?} has empty text")]
    EmptyText { id: String },
    #[error("category {category} has {available} examples, {required} required")]
    Insufficient {
        category: Category,
        available: usize,
        required: usize,
    },
    #[error("shots per category must be positive")]
    ZeroShots,
    #[error("sample size per category must be positive")]
    ZeroSampleSize,
    #[error("turn index is 1-based, got 0")]
    ZeroTurnIndex,
    #[error("{shots} shots requested but the pool holds {available} per category")]
    ShotsExceedPool { shots: usize, available: usize },
    #[error("example set for {category} has {found} examples, expected {expected}")]
    UnbalancedSet {
        category: Category,
        found: usize,
        expected: usize,
    },
    #[error("example set repeats id {0:?}")]
    RepeatedInSet(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub id: String,
    pub text: String,
    pub label: Category,
}

impl LabeledExample {
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: Category) -> Self {
        LabeledExample {
            id: id.into(),
            text: text.into(),
            label,
        }
    }
}

/// An ordered collection of examples with unique ids and non-blank texts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    examples: Vec<LabeledExample>,
    counts: [usize; Category::COUNT],
}

impl Dataset {
    pub fn new(examples: Vec<LabeledExample>) -> Result<Self, CorpusError> {
        let mut seen = BTreeSet::new();
        let mut counts = [0; Category::COUNT];
        for ex in &examples {
            if ex.text.trim().is_empty() {
                return Err(CorpusError::EmptyText { id: ex.id.clone() });
            }
            if !seen.insert(ex.id.as_str()) {
                return Err(CorpusError::DuplicateId(ex.id.clone()));
            }
            counts[ex.label.index()] += 1;
        }
        Ok(Dataset { examples, counts })
    }

    pub fn examples(&self) -> &[LabeledExample] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn count(&self, category: Category) -> usize {
        self.counts[category.index()]
    }

    pub fn counts(&self) -> [usize; Category::COUNT] {
        self.counts
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.examples.iter().map(|e| e.id.as_str())
    }

    /// Examples of each category in file order.
    pub fn by_category(&self) -> [Vec<&LabeledExample>; Category::COUNT] {
        let mut lists: [Vec<&LabeledExample>; Category::COUNT] = array::from_fn(|_| Vec::new());
        for ex in &self.examples {
            lists[ex.label.index()].push(ex);
        }
        lists
    }

    pub fn into_examples(self) -> Vec<LabeledExample> {
        self.examples
    }
}

/// What to do when a category holds fewer examples than requested.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shortfall {
    #[default]
    Reject,
    /// Shrink the per-category size to the smallest category so the pool
    /// stays balanced; that category contributes everything it has.
    CapAtAvailable,
}

/// Draws `per_category` examples from every category, uniformly without
/// replacement, categories visited in canonical order with one RNG stream.
pub(crate) fn sample_per_category(
    dataset: &Dataset,
    per_category: usize,
    seed: u64,
    shortfall: Shortfall,
) -> Result<[Vec<LabeledExample>; Category::COUNT], CorpusError> {
    if per_category == 0 {
        return Err(CorpusError::ZeroSampleSize);
    }
    let by_cat = dataset.by_category();
    let smallest = Category::ALL
        .into_iter()
        .min_by_key(|c| (by_cat[c.index()].len(), c.index()))
        .unwrap_or(Category::None);
    let available = by_cat[smallest.index()].len();
    let size = if available >= per_category {
        per_category
    } else if available > 0 && shortfall == Shortfall::CapAtAvailable {
        log::warn!(
            "category {smallest} has {available} examples; capping per-category size at {available} (requested {per_category})"
        );
        available
    } else {
        return Err(CorpusError::Insufficient {
            category: smallest,
            available,
            required: per_category,
        });
    };

    let mut rng = seed::rng(seed);
    Ok(array::from_fn(|i| {
        let members = &by_cat[i];
        index::sample(&mut rng, members.len(), size)
            .into_iter()
            .map(|j| members[j].clone())
            .collect()
    }))
}

/// The balanced training pool: `per_category` examples for each label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalancedPool {
    lists: [Vec<LabeledExample>; Category::COUNT],
    seed: u64,
}

impl BalancedPool {
    pub fn per_category(&self) -> usize {
        self.lists[0].len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn category(&self, category: Category) -> &[LabeledExample] {
        &self.lists[category.index()]
    }

    pub fn len(&self) -> usize {
        self.lists.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The pool as a dataset, categories in canonical order.
    pub fn to_dataset(&self) -> Dataset {
        let examples = self.lists.iter().flatten().cloned().collect();
        Dataset::new(examples).expect("pool members come from a valid dataset")
    }
}

pub fn balanced_sample(
    dataset: &Dataset,
    per_category: usize,
    seed: u64,
    shortfall: Shortfall,
) -> Result<BalancedPool, CorpusError> {
    let lists = sample_per_category(dataset, per_category, seed, shortfall)?;
    Ok(BalancedPool { lists, seed })
}

/// How an example set was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Sequential { turn_index: usize },
    Random { draw_index: usize },
}

/// Few-shot examples for one voting turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleSet {
    lists: [Vec<LabeledExample>; Category::COUNT],
    provenance: Provenance,
}

impl ExampleSet {
    pub fn new(lists: [Vec<LabeledExample>; Category::COUNT], provenance: Provenance) -> Result<Self, CorpusError> {
        let shots = lists[0].len();
        if shots == 0 {
            return Err(CorpusError::ZeroShots);
        }
        let mut seen = BTreeSet::new();
        for category in Category::ALL {
            let list = &lists[category.index()];
            if list.len() != shots {
                return Err(CorpusError::UnbalancedSet {
                    category,
                    found: list.len(),
                    expected: shots,
                });
            }
            for ex in list {
                if !seen.insert(ex.id.as_str()) {
                    return Err(CorpusError::RepeatedInSet(ex.id.clone()));
                }
            }
        }
        Ok(ExampleSet { lists, provenance })
    }

    pub fn shots(&self) -> usize {
        self.lists[0].len()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn category(&self, category: Category) -> &[LabeledExample] {
        &self.lists[category.index()]
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.lists.iter().flatten().map(|e| e.id.as_str())
    }
}

/// Example set for initial-phase turn `turn_index` (1-based): the slice
/// `[(turn_index - 1) * shots, turn_index * shots)` of every category list.
///
/// Once that slice runs past the pool the set is drawn at random instead,
/// with an RNG derived from the pool seed and turn index, and tagged
/// `Provenance::Random`.
pub fn sequential_example_set(pool: &BalancedPool, shots: usize, turn_index: usize) -> Result<ExampleSet, CorpusError> {
    if shots == 0 {
        return Err(CorpusError::ZeroShots);
    }
    if turn_index == 0 {
        return Err(CorpusError::ZeroTurnIndex);
    }
    let start = (turn_index - 1).saturating_mul(shots);
    let end = start.saturating_add(shots);
    if end > pool.per_category() {
        log::warn!(
            "pool of {} per category exhausted at turn {turn_index} with {shots} shots; drawing at random",
            pool.per_category()
        );
        let mut rng = seed::rng(seed::derive(pool.seed, turn_index as u64));
        return random_example_set(pool, shots, &mut rng, turn_index);
    }
    let lists = array::from_fn(|i| pool.lists[i][start..end].to_vec());
    ExampleSet::new(lists, Provenance::Sequential { turn_index })
}

/// `shots` distinct examples per category drawn uniformly from the whole
/// pool. Overlap with earlier turns is allowed.
pub fn random_example_set<R: Rng + ?Sized>(
    pool: &BalancedPool,
    shots: usize,
    rng: &mut R,
    draw_index: usize,
) -> Result<ExampleSet, CorpusError> {
    if shots == 0 {
        return Err(CorpusError::ZeroShots);
    }
    if shots > pool.per_category() {
        return Err(CorpusError::ShotsExceedPool {
            shots,
            available: pool.per_category(),
        });
    }
    let lists = array::from_fn(|i| {
        let members = &pool.lists[i];
        index::sample(rng, members.len(), shots)
            .into_iter()
            .map(|j| members[j].clone())
            .collect()
    });
    ExampleSet::new(lists, Provenance::Random { draw_index })
}
