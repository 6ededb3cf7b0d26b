//! Shots/turns sweeps and the keyword vs keyword-free comparison.
//!
//! Every cell of one invocation is evaluated on the same balanced test
//! subset. Batch execution is abstracted behind [`BatchRunner`] so callers
//! can substitute a concurrent runner.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::backend::Backend;
use crate::corpus::{BalancedPool, CorpusError, Dataset};
use crate::eval::{self, EvalError, EvaluationReport, Prediction, PredictionSet};
use crate::keywords::KeywordConfig;
use crate::prompt::{PromptTemplate, PromptVariant};
use crate::voting::{VoteError, Voter, VotingConfig, VotingOutcome};
use crate::Category;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AblationError<E> {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{0}")]
    InvalidSpec(String),
    #[error("batch run failed: {0}")]
    Runner(E),
}

/// Runs the voting pipeline over every item of a dataset.
pub trait BatchRunner {
    type Error;

    /// One outcome per example, dataset order.
    fn run_batch(&mut self, config: &VotingConfig, items: &Dataset) -> Result<Vec<VotingOutcome>, Self::Error>;
}

/// Runs items one after the other with a shared backend.
pub struct SequentialRunner<'a, B> {
    pub pool: &'a BalancedPool,
    pub backend: B,
    pub keywords: &'a KeywordConfig,
}

impl<B: Backend> BatchRunner for SequentialRunner<'_, B> {
    type Error = VoteError<B::Error>;

    fn run_batch(&mut self, config: &VotingConfig, items: &Dataset) -> Result<Vec<VotingOutcome>, Self::Error> {
        let template = PromptTemplate::builtin(config.variant);
        let voter = Voter {
            pool: self.pool,
            backend: &self.backend,
            template: &template,
            keywords: Some(self.keywords),
            config: *config,
        };
        items.examples().iter().map(|ex| voter.run(&ex.id, &ex.text)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    Shots,
    Turns,
    Both,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub shots: Vec<usize>,
    pub turns: Vec<usize>,
    pub variants: Vec<PromptVariant>,
    pub per_label: usize,
    pub subset_seed: u64,
    /// Holds the fixed values while the other variable is swept.
    pub base: VotingConfig,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            shots: alloc::vec![3, 7, 10, 16, 20],
            turns: alloc::vec![3, 7, 10, 16],
            variants: alloc::vec![PromptVariant::WithKeywords],
            per_label: 29,
            subset_seed: 0,
            base: VotingConfig::default(),
        }
    }
}

impl SweepSpec {
    fn validate<E>(&self, pool_per_category: usize) -> Result<(), AblationError<E>> {
        let invalid = |msg: String| Err(AblationError::InvalidSpec(msg));
        if self.per_label == 0 {
            return invalid("per_label must be positive".into());
        }
        if self.variants.is_empty() {
            return invalid("at least one prompt variant is required".into());
        }
        if let Some(s) = self
            .shots
            .iter()
            .chain([&self.base.shots_per_category])
            .find(|s| **s == 0 || **s > pool_per_category)
        {
            return invalid(alloc::format!("shots value {s} outside 1..={pool_per_category}"));
        }
        if self.turns.iter().chain([&self.base.initial_turns]).any(|t| *t == 0) {
            return invalid("turn values must be positive".into());
        }
        Ok(())
    }

    /// Cell configurations in run order: shots sweep, then turns sweep, per variant.
    pub fn cells(&self, sweep: Sweep) -> Vec<CellConfig> {
        let mut out = Vec::new();
        for &variant in &self.variants {
            let voting = VotingConfig { variant, ..self.base };
            if matches!(sweep, Sweep::Shots | Sweep::Both) {
                for &shots in &self.shots {
                    out.push(self.cell(
                        "shots",
                        VotingConfig {
                            shots_per_category: shots,
                            ..voting
                        },
                    ));
                }
            }
            if matches!(sweep, Sweep::Turns | Sweep::Both) {
                for &turns in &self.turns {
                    out.push(self.cell(
                        "turns",
                        VotingConfig {
                            initial_turns: turns,
                            ..voting
                        },
                    ));
                }
            }
        }
        out
    }

    fn cell(&self, swept: &str, voting: VotingConfig) -> CellConfig {
        CellConfig {
            swept: String::from(swept),
            voting,
            per_label: self.per_label,
            subset_seed: self.subset_seed,
        }
    }
}

/// Enough to rerun one cell in isolation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellConfig {
    /// Which variable this cell varies: `shots`, `turns`, or `variant`.
    pub swept: String,
    pub voting: VotingConfig,
    pub per_label: usize,
    pub subset_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub configuration: CellConfig,
    pub report: EvaluationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationResult {
    pub subset_ids: Vec<String>,
    pub cells: Vec<AblationCell>,
}

fn score<R: BatchRunner>(
    runner: &mut R,
    config: &VotingConfig,
    subset: &Dataset,
) -> Result<EvaluationReport, AblationError<R::Error>> {
    let outcomes = runner.run_batch(config, subset).map_err(AblationError::Runner)?;
    let preds = PredictionSet::new(
        subset
            .examples()
            .iter()
            .zip(&outcomes)
            .map(|(ex, out)| Prediction {
                id: ex.id.clone(),
                gold: ex.label,
                predicted: out.label,
            })
            .collect(),
    )?;
    Ok(eval::evaluate(&preds)?)
}

/// Runs every cell of `sweep`. Cells with identical voting configurations
/// are computed once and share the report.
pub fn run_ablation<R: BatchRunner>(
    spec: &SweepSpec,
    sweep: Sweep,
    dataset: &Dataset,
    pool_per_category: usize,
    runner: &mut R,
) -> Result<AblationResult, AblationError<R::Error>> {
    spec.validate(pool_per_category)?;
    let subset = eval::balanced_test_subset(dataset, spec.per_label, spec.subset_seed)?;
    let mut memo: BTreeMap<(usize, usize, usize, u64, bool), EvaluationReport> = BTreeMap::new();
    let mut cells = Vec::new();
    for configuration in spec.cells(sweep) {
        let v = &configuration.voting;
        let key = (
            v.shots_per_category,
            v.initial_turns,
            v.max_extension_turns,
            v.seed,
            v.variant == PromptVariant::WithKeywords,
        );
        let report = match memo.get(&key) {
            Some(r) => r.clone(),
            None => {
                let r = score(runner, v, &subset)?;
                memo.insert(key, r.clone());
                r
            }
        };
        cells.push(AblationCell { configuration, report });
    }
    Ok(AblationResult {
        subset_ids: subset.ids().map(String::from).collect(),
        cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordAblation {
    pub subset_ids: Vec<String>,
    pub with_keywords: AblationCell,
    pub basic: AblationCell,
}

/// The same subset and seeds run once per prompt variant.
pub fn run_keyword_ablation<R: BatchRunner>(
    dataset: &Dataset,
    per_label: usize,
    subset_seed: u64,
    base: VotingConfig,
    runner: &mut R,
) -> Result<KeywordAblation, AblationError<R::Error>> {
    let subset = eval::balanced_test_subset(dataset, per_label, subset_seed)?;
    let mut cell = |variant| -> Result<AblationCell, AblationError<R::Error>> {
        let voting = VotingConfig { variant, ..base };
        Ok(AblationCell {
            report: score(runner, &voting, &subset)?,
            configuration: CellConfig {
                swept: String::from("variant"),
                voting,
                per_label,
                subset_seed,
            },
        })
    };
    let with_keywords = cell(PromptVariant::WithKeywords)?;
    let basic = cell(PromptVariant::Basic)?;
    Ok(KeywordAblation {
        subset_ids: subset.ids().map(String::from).collect(),
        with_keywords,
        basic,
    })
}

/// One CSV row per cell: configuration columns followed by micro-F1 and
/// per-class F1 in canonical order.
pub fn to_csv(result: &AblationResult) -> String {
    let mut out = String::from("swept,variant,shots,initial_turns,max_extension_turns,seed,per_label,n,micro_f1");
    for c in Category::ALL {
        out.push_str(&alloc::format!(",f1_{}", c.as_str().replace(' ', "_")));
    }
    out.push('\n');
    for cell in &result.cells {
        let v = &cell.configuration.voting;
        out.push_str(&alloc::format!(
            "{},{},{},{},{},{},{},{},{}",
            cell.configuration.swept,
            v.variant,
            v.shots_per_category,
            v.initial_turns,
            v.max_extension_turns,
            v.seed,
            cell.configuration.per_label,
            cell.report.n,
            cell.report.micro_f1
        ));
        for c in Category::ALL {
            let f1 = cell.report.per_class.get(&c).map_or(0.0, |m| m.f1);
            out.push_str(&alloc::format!(",{f1}"));
        }
        out.push('\n');
    }
    out
}
