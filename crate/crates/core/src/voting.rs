//! Adaptive majority voting.
//!
//! A vote runs `initial_turns` attempts on pairwise-disjoint example sets,
//! then adds one randomly drawn turn at a time until some label holds a
//! strict majority of the valid votes or the extension budget is spent. At
//! exhaustion the winner is drawn uniformly from the labels sharing the top
//! count.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::backend::{Backend, ParsedVote, RawResponse};
use crate::corpus::{self, BalancedPool, CorpusError, Provenance};
use crate::keywords::KeywordConfig;
use crate::prompt::{self, PromptError, PromptTemplate, PromptVariant};
use crate::seed;
use crate::Category;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VoteError<E> {
    #[error("backend failed: {0}")]
    Backend(E),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("no parseable vote in {turns} turns")]
    NoValidVotes { turns: usize },
    #[error("cannot break a tie over an empty tally")]
    EmptyTally,
    #[error("initial_turns must be at least 1")]
    NoInitialTurns,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VotingConfig {
    pub initial_turns: usize,
    pub max_extension_turns: usize,
    pub shots_per_category: usize,
    pub variant: PromptVariant,
    pub seed: u64,
}

impl Default for VotingConfig {
    fn default() -> Self {
        VotingConfig {
            initial_turns: 3,
            max_extension_turns: 10,
            shots_per_category: 20,
            variant: PromptVariant::WithKeywords,
            seed: 0,
        }
    }
}

impl VotingConfig {
    pub fn turn_budget(&self) -> usize {
        self.initial_turns + self.max_extension_turns
    }
}

/// Valid-vote counts per label.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "BTreeMap<Category, u32>", into = "BTreeMap<Category, u32>")]
pub struct Tally {
    counts: [u32; Category::COUNT],
}

impl Tally {
    pub fn add(&mut self, category: Category) {
        self.counts[category.index()] += 1;
    }

    pub fn get(&self, category: Category) -> u32 {
        self.counts[category.index()]
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn max_count(&self) -> u32 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    /// Labels attaining the maximum count, canonical order. Empty for an empty tally.
    pub fn leaders(&self) -> Vec<Category> {
        let max = self.max_count();
        if max == 0 {
            return Vec::new();
        }
        Category::ALL.into_iter().filter(|c| self.get(*c) == max).collect()
    }
}

impl FromIterator<Category> for Tally {
    fn from_iter<I: IntoIterator<Item = Category>>(iter: I) -> Self {
        let mut t = Tally::default();
        iter.into_iter().for_each(|c| t.add(c));
        t
    }
}

impl From<BTreeMap<Category, u32>> for Tally {
    fn from(map: BTreeMap<Category, u32>) -> Self {
        let mut t = Tally::default();
        for (c, n) in map {
            t.counts[c.index()] = n;
        }
        t
    }
}

impl From<Tally> for BTreeMap<Category, u32> {
    fn from(t: Tally) -> Self {
        Category::ALL
            .into_iter()
            .filter(|c| t.get(*c) > 0)
            .map(|c| (c, t.get(c)))
            .collect()
    }
}

/// The label whose count is strictly greater than half the valid votes.
pub fn has_majority(tally: &Tally) -> Option<Category> {
    let total = tally.total();
    Category::ALL.into_iter().find(|c| 2 * tally.get(*c) > total)
}

/// Uniform choice among the labels with the highest count.
pub fn break_tie<R: Rng + ?Sized, E>(tally: &Tally, rng: &mut R) -> Result<Category, VoteError<E>> {
    let leaders = tally.leaders();
    match leaders.len() {
        0 => Err(VoteError::EmptyTally),
        1 => Ok(leaders[0]),
        n => Ok(leaders[rng.gen_range(0..n)]),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteRecord {
    pub turn: usize,
    pub vote: ParsedVote,
    pub provenance: Provenance,
    pub response: String,
    pub attempts: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Majority,
    Tiebreak,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VotingOutcome {
    pub label: Category,
    pub turns_used: usize,
    pub tally: Tally,
    pub termination: Termination,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tie_candidates: Vec<Category>,
    pub records: Vec<VoteRecord>,
}

/// Everything a vote needs apart from the input sentence.
pub struct Voter<'a, B> {
    pub pool: &'a BalancedPool,
    pub backend: B,
    pub template: &'a PromptTemplate,
    pub keywords: Option<&'a KeywordConfig>,
    pub config: VotingConfig,
}

impl<B: Backend> Voter<'_, B> {
    pub fn run(&self, input_id: &str, input_text: &str) -> Result<VotingOutcome, VoteError<B::Error>> {
        let cfg = &self.config;
        if cfg.initial_turns == 0 {
            return Err(VoteError::NoInitialTurns);
        }
        let render =
            |set: &corpus::ExampleSet| prompt::render_prompt(self.template, set, self.keywords, input_id, input_text);

        let mut prompts = Vec::with_capacity(cfg.initial_turns);
        for turn in 1..=cfg.initial_turns {
            let set = corpus::sequential_example_set(self.pool, cfg.shots_per_category, turn)?;
            prompts.push(render(&set)?);
        }
        let responses = self.backend.classify_many(&prompts);

        let mut records = Vec::with_capacity(cfg.turn_budget());
        let mut tally = Tally::default();
        for (i, (prompt, response)) in prompts.iter().zip(responses).enumerate() {
            let response = response.map_err(VoteError::Backend)?;
            records.push(record(i + 1, prompt.provenance, response, &mut tally));
        }

        let mut rng = seed::rng(seed::derive_str(cfg.seed, input_id));
        let outcome = |label, termination, tie_candidates, tally: Tally, records: Vec<VoteRecord>| VotingOutcome {
            label,
            turns_used: records.len(),
            tally,
            termination,
            tie_candidates,
            records,
        };

        if let Some(label) = has_majority(&tally) {
            return Ok(outcome(label, Termination::Majority, Vec::new(), tally, records));
        }
        for k in 1..=cfg.max_extension_turns {
            let turn = cfg.initial_turns + k;
            let set = corpus::random_example_set(self.pool, cfg.shots_per_category, &mut rng, turn)?;
            let prompt = render(&set)?;
            let response = self.backend.classify(&prompt).map_err(VoteError::Backend)?;
            records.push(record(turn, prompt.provenance, response, &mut tally));
            if let Some(label) = has_majority(&tally) {
                return Ok(outcome(label, Termination::Majority, Vec::new(), tally, records));
            }
        }

        if tally.total() == 0 {
            return Err(VoteError::NoValidVotes { turns: records.len() });
        }
        let label = break_tie(&tally, &mut rng)?;
        Ok(outcome(label, Termination::Tiebreak, tally.leaders(), tally, records))
    }
}

fn record(turn: usize, provenance: Provenance, response: RawResponse, tally: &mut Tally) -> VoteRecord {
    let vote = response.parse();
    if let Some(c) = vote.category() {
        tally.add(c);
    }
    VoteRecord {
        turn,
        vote,
        provenance,
        response: response.text,
        attempts: response.attempts,
    }
}

pub fn run_vote<B: Backend>(
    input_id: &str,
    input_text: &str,
    pool: &BalancedPool,
    backend: B,
    template: &PromptTemplate,
    keywords: Option<&KeywordConfig>,
    config: VotingConfig,
) -> Result<VotingOutcome, VoteError<B::Error>> {
    Voter {
        pool,
        backend,
        template,
        keywords,
        config,
    }
    .run(input_id, input_text)
}
