//! Command-line surface: argument parsing, config resolution, subcommands.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use promptguard_core::ablation::{self, Sweep, SweepSpec};
use promptguard_core::backend::{Backend, RawResponse};
use promptguard_core::baselines;
use promptguard_core::corpus::{balanced_sample, BalancedPool, Dataset, Shortfall};
use promptguard_core::eval::{self, EvaluationReport, Prediction, PredictionSet};
use promptguard_core::keywords::{self, KeywordConfig, Refinement};
use promptguard_core::prompt::{PromptTemplate, PromptVariant, RenderedPrompt};
use promptguard_core::voting::Voter;
use promptguard_core::Category;
use serde::Serialize;
use serde_json::Value;

use crate::batch::{self, BatchJob, ParallelRunner};
use crate::config::{BackendKind, BaselineKind, DfSource, RunConfig};
use crate::io::{self, DataFormat, InputItem, PredictionRecord};
use crate::keyword_file::KeywordFile;
use crate::mock::MockBackend;
use crate::remote::RemoteBackend;
use crate::retry::BackendError;

#[derive(Debug, Parser)]
#[command(name = "promptguard", version, about = "Few-shot Bengali hate speech classification")]
pub struct Cli {
    /// TOML run configuration; flags and PROMPTGUARD_* variables override it.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Dataset format; guessed from the file extension when omitted.
    #[arg(long, global = true, value_enum)]
    pub format: Option<DataFormat>,

    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rank chi-square keywords over the training pool and write the keyword table and config.
    ExtractKeywords(ExtractArgs),
    /// Classify one sentence or a file of sentences by adaptive majority voting.
    Classify(ClassifyArgs),
    /// Score a predictions file against gold labels.
    Evaluate(EvaluateArgs),
    /// Run the shots/turns sweeps or the keyword vs basic prompt comparison.
    Ablate(AblateArgs),
    /// Run the random, majority, or character n-gram baseline.
    Baseline(BaselineArgs),
}

#[derive(Debug, Args)]
pub struct PoolArgs {
    /// Labeled training data the pool is drawn from.
    #[arg(long, value_name = "PATH")]
    pub train: Option<PathBuf>,
    /// Examples per category in the pool.
    #[arg(long)]
    pub pool_size: Option<usize>,
    #[arg(long)]
    pub pool_seed: Option<u64>,
    /// Shrink the pool to the smallest category instead of failing.
    #[arg(long)]
    pub cap_at_available: bool,
}

#[derive(Debug, Args)]
pub struct VotingArgs {
    #[arg(long)]
    pub shots: Option<usize>,
    #[arg(long)]
    pub initial_turns: Option<usize>,
    #[arg(long)]
    pub max_extension_turns: Option<usize>,
    #[arg(long, value_parser = parse_variant)]
    pub variant: Option<PromptVariant>,
    /// Seed for extension draws and tie-breaks.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Keyword config JSON; the curated lists when omitted.
    #[arg(long, value_name = "PATH")]
    pub keywords: Option<PathBuf>,
}

fn parse_variant(s: &str) -> Result<PromptVariant, String> {
    s.parse()
        .map_err(|_| format!("unknown variant {s:?}; expected with-keywords or basic"))
}

fn parse_category(s: &str) -> Result<Category, String> {
    s.parse().map_err(|e: promptguard_core::UnknownLabel| e.to_string())
}

#[derive(Debug, Args)]
pub struct BackendArgs {
    #[arg(long, value_enum)]
    pub backend: Option<BackendKind>,
    /// API base URL (also PROMPTGUARD_API_BASE).
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Model id (also PROMPTGUARD_MODEL).
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long, value_name = "SECS")]
    pub timeout: Option<u64>,
    #[arg(long)]
    pub max_retries: Option<u32>,
    #[arg(long)]
    pub max_in_flight: Option<usize>,
    /// Label returned by `--backend mock-constant`.
    #[arg(long, value_parser = parse_category)]
    pub mock_label: Option<Category>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub pool: PoolArgs,
    #[arg(long, value_enum)]
    pub df_source: Option<DfSource>,
    #[arg(long)]
    pub min_df: Option<usize>,
    /// Maximum document frequency as a fraction of documents.
    #[arg(long)]
    pub max_df: Option<f64>,
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Keyword file whose `overrides` object replaces the shipped refinement.
    #[arg(long, value_name = "PATH")]
    pub refinement: Option<PathBuf>,
    /// Keep the ranked terms without any refinement.
    #[arg(long, conflicts_with = "refinement")]
    pub no_refinement: bool,
    /// Where to write the scored keyword table.
    #[arg(long, value_name = "PATH")]
    pub table_out: Option<PathBuf>,
    /// Where to write the keyword config.
    #[arg(long, value_name = "PATH")]
    pub keywords_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub pool: PoolArgs,
    #[command(flatten)]
    pub voting: VotingArgs,
    #[command(flatten)]
    pub backend: BackendArgs,
    /// A single sentence to classify.
    #[arg(long, conflicts_with = "input")]
    pub text: Option<String>,
    /// Id recorded for `--text`.
    #[arg(long, default_value = "text-1", requires = "text")]
    pub id: String,
    /// JSONL or TSV of sentences; labels are optional and copied as `gold`.
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Predictions JSONL; required with `--input`, stdout otherwise.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Skip inputs whose ids are already in `--out`.
    #[arg(long)]
    pub resume: bool,
    #[arg(long)]
    pub concurrency: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, value_name = "PATH")]
    pub predictions: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub gold: Option<PathBuf>,
    /// Where to write the report JSON.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepArg {
    Shots,
    Turns,
    Both,
    Keywords,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub pool: PoolArgs,
    #[command(flatten)]
    pub voting: VotingArgs,
    #[command(flatten)]
    pub backend: BackendArgs,
    /// Labeled data the balanced test subset is drawn from.
    #[arg(long, value_name = "PATH")]
    pub test: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "both")]
    pub sweep: SweepArg,
    #[arg(long, value_delimiter = ',')]
    pub shots_values: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub turns_values: Option<Vec<usize>>,
    #[arg(long)]
    pub per_label: Option<usize>,
    #[arg(long)]
    pub subset_seed: Option<u64>,
    #[arg(long)]
    pub concurrency: Option<usize>,
    /// Where to write the ablation JSON.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Also write one CSV row per cell.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long, value_enum)]
    pub kind: Option<BaselineKind>,
    /// Training data for the majority and n-gram baselines.
    #[arg(long, value_name = "PATH")]
    pub train: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub min_n: Option<usize>,
    #[arg(long)]
    pub max_n: Option<usize>,
    #[arg(long)]
    pub smoothing: Option<f64>,
    /// Train the n-gram model even if some labels have no examples.
    #[arg(long)]
    pub allow_missing_classes: bool,
    /// Predictions JSONL.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Report JSON.
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
}

fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

fn set_path(slot: &mut Option<PathBuf>, flag: &Option<PathBuf>) {
    if flag.is_some() {
        slot.clone_from(flag);
    }
}

impl PoolArgs {
    fn apply(&self, c: &mut RunConfig) {
        set_path(&mut c.paths.train, &self.train);
        set(&mut c.pool.per_category, self.pool_size);
        set(&mut c.pool.seed, self.pool_seed);
        if self.cap_at_available {
            c.pool.shortfall = Shortfall::CapAtAvailable;
        }
    }
}

impl VotingArgs {
    fn apply(&self, c: &mut RunConfig) {
        set(&mut c.voting.shots_per_category, self.shots);
        set(&mut c.voting.initial_turns, self.initial_turns);
        set(&mut c.voting.max_extension_turns, self.max_extension_turns);
        set(&mut c.voting.variant, self.variant);
        set(&mut c.voting.seed, self.seed);
        set_path(&mut c.paths.keywords, &self.keywords);
    }
}

impl BackendArgs {
    fn apply(&self, c: &mut RunConfig) {
        let b = &mut c.backend;
        set(&mut b.kind, self.backend);
        set(&mut b.endpoint, self.endpoint.clone());
        set(&mut b.model, self.model.clone());
        set(&mut b.temperature, self.temperature);
        set(&mut b.timeout_secs, self.timeout);
        set(&mut b.max_retries, self.max_retries);
        set(&mut b.max_in_flight, self.max_in_flight);
        set(&mut b.mock_label, self.mock_label);
    }
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::ExtractKeywords(_) => "extract-keywords",
            Command::Classify(_) => "classify",
            Command::Evaluate(_) => "evaluate",
            Command::Ablate(_) => "ablate",
            Command::Baseline(_) => "baseline",
        }
    }

    fn apply(&self, c: &mut RunConfig) {
        match self {
            Command::ExtractKeywords(a) => {
                a.pool.apply(c);
                let e = &mut c.extraction;
                set(&mut e.df_source, a.df_source);
                set(&mut e.min_df, a.min_df);
                set(&mut e.max_df, a.max_df);
                set(&mut e.top_k, a.top_k);
                e.no_refinement |= a.no_refinement;
                set_path(&mut c.paths.refinement, &a.refinement);
                set_path(&mut c.paths.table_out, &a.table_out);
                set_path(&mut c.paths.keywords_out, &a.keywords_out);
            }
            Command::Classify(a) => {
                a.pool.apply(c);
                a.voting.apply(c);
                a.backend.apply(c);
                set_path(&mut c.paths.input, &a.input);
                set_path(&mut c.paths.out, &a.out);
                set(&mut c.batch.concurrency, a.concurrency);
                c.batch.resume |= a.resume;
            }
            Command::Evaluate(a) => {
                set_path(&mut c.paths.predictions, &a.predictions);
                set_path(&mut c.paths.gold, &a.gold);
                set_path(&mut c.paths.out, &a.out);
            }
            Command::Ablate(a) => {
                a.pool.apply(c);
                a.voting.apply(c);
                a.backend.apply(c);
                set_path(&mut c.paths.test, &a.test);
                set(&mut c.ablation.shots, a.shots_values.clone());
                set(&mut c.ablation.turns, a.turns_values.clone());
                set(&mut c.ablation.per_label, a.per_label);
                set(&mut c.ablation.subset_seed, a.subset_seed);
                set(&mut c.batch.concurrency, a.concurrency);
                set_path(&mut c.paths.out, &a.out);
                set_path(&mut c.paths.csv, &a.csv);
            }
            Command::Baseline(a) => {
                let b = &mut c.baseline;
                set(&mut b.kind, a.kind);
                set(&mut b.seed, a.seed);
                set(&mut b.ngram.min_n, a.min_n);
                set(&mut b.ngram.max_n, a.max_n);
                set(&mut b.ngram.smoothing, a.smoothing);
                if a.allow_missing_classes {
                    b.ngram.require_all_classes = false;
                }
                set_path(&mut c.paths.train, &a.train);
                set_path(&mut c.paths.test, &a.test);
                set_path(&mut c.paths.out, &a.out);
                set_path(&mut c.paths.report, &a.report);
            }
        }
    }
}

/// File, then environment, then flags; validated before anything runs.
pub fn resolve(cli: &Cli, env: impl Fn(&str) -> Option<String>) -> Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    config.apply_env(env);
    if cli.format.is_some() {
        config.paths.format = cli.format;
    }
    cli.command.apply(&mut config);
    config.validate()?;
    Ok(config)
}

/// Parses `args`, resolves the configuration from the process environment,
/// and runs the subcommand.
pub fn main_with_args<I, S>(args: I) -> Result<()>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::parse_from(args);
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    let config = resolve(&cli, |k| std::env::var(k).ok())?;
    run(&cli.command, &config)
}

pub fn run(command: &Command, config: &RunConfig) -> Result<()> {
    let ctx = Ctx {
        command: command.name(),
        config,
    };
    match command {
        Command::ExtractKeywords(_) => ctx.extract_keywords(),
        Command::Classify(a) => ctx.classify(a),
        Command::Evaluate(_) => ctx.evaluate(),
        Command::Ablate(a) => ctx.ablate(a.sweep),
        Command::Baseline(_) => ctx.baseline(),
    }
}

/// The resolved configuration as echoed into artifacts.
#[derive(Serialize)]
struct Echo<'a> {
    command: &'a str,
    #[serde(flatten)]
    config: &'a RunConfig,
}

/// Either backend behind one error type.
pub enum AnyBackend {
    Remote(RemoteBackend),
    Mock(MockBackend),
}

impl AnyBackend {
    pub fn from_config(config: &RunConfig, keywords: &KeywordConfig) -> Result<Self> {
        let b = &config.backend;
        Ok(match b.kind {
            BackendKind::Remote => AnyBackend::Remote(RemoteBackend::http(b.clone())?),
            BackendKind::MockKeyword => AnyBackend::Mock(MockBackend::keyword_echo(keywords.clone())),
            BackendKind::MockConstant => AnyBackend::Mock(MockBackend::constant(b.mock_label)),
        })
    }
}

impl Backend for AnyBackend {
    type Error = BackendError;

    fn classify(&self, prompt: &RenderedPrompt) -> Result<RawResponse, BackendError> {
        match self {
            AnyBackend::Remote(b) => b.classify(prompt),
            AnyBackend::Mock(b) => b.classify(prompt),
        }
    }

    fn classify_many(&self, prompts: &[RenderedPrompt]) -> Vec<Result<RawResponse, BackendError>> {
        match self {
            AnyBackend::Remote(b) => b.classify_many(prompts),
            AnyBackend::Mock(b) => b.classify_many(prompts),
        }
    }
}

struct Ctx<'a> {
    command: &'a str,
    config: &'a RunConfig,
}

fn required<'p>(path: &'p Option<PathBuf>, flag: &str) -> Result<&'p Path> {
    match path {
        Some(p) => Ok(p),
        None => bail!("{flag} is required"),
    }
}

impl Ctx<'_> {
    fn echo(&self) -> Value {
        serde_json::to_value(Echo {
            command: self.command,
            config: self.config,
        })
        .expect("config serializes")
    }

    /// `body` with a `run_config` field added.
    fn artifact<T: Serialize>(&self, body: &T) -> Value {
        let mut v = serde_json::to_value(body).expect("artifact serializes");
        if let Value::Object(m) = &mut v {
            m.insert("run_config".into(), self.echo());
        }
        v
    }

    fn write_artifact<T: Serialize>(&self, path: &Path, body: &T) -> Result<()> {
        io::write_json(path, &self.artifact(body))?;
        log::info!("wrote {}", path.display());
        Ok(())
    }

    fn format_for(&self, path: &Path) -> DataFormat {
        self.config.paths.format.unwrap_or_else(|| DataFormat::from_path(path))
    }

    fn dataset(&self, path: &Path) -> Result<Dataset> {
        io::load_dataset(path, self.format_for(path)).with_context(|| format!("loading {}", path.display()))
    }

    fn pool(&self) -> Result<(Dataset, BalancedPool)> {
        let train = self.dataset(required(&self.config.paths.train, "--train")?)?;
        let p = &self.config.pool;
        let pool =
            balanced_sample(&train, p.per_category, p.seed, p.shortfall).context("building the balanced pool")?;
        Ok((train, pool))
    }

    fn keywords(&self) -> Result<KeywordConfig> {
        Ok(match &self.config.paths.keywords {
            Some(path) => KeywordFile::load(path)?.keywords,
            None => KeywordConfig::curated(),
        })
    }

    fn extract_keywords(&self) -> Result<()> {
        let table_out = required(&self.config.paths.table_out, "--table-out")?;
        let keywords_out = required(&self.config.paths.keywords_out, "--keywords-out")?;
        let (train, pool) = self.pool()?;
        let e = &self.config.extraction;
        let source = match e.df_source {
            DfSource::Pool => pool.to_dataset(),
            DfSource::Raw => train,
        };
        let df = keywords::document_frequency(&source)?;
        let vocab = keywords::filter_vocabulary(&df, e.min_df, e.max_df)?;
        log::info!(
            "{} of {} terms pass the document-frequency filter",
            vocab.len(),
            df.len()
        );
        let table = keywords::rank_keywords(&source, &vocab, e.top_k);
        let refinement = if e.no_refinement {
            Refinement::default()
        } else {
            match &self.config.paths.refinement {
                Some(path) => KeywordFile::load(path)?.overrides.unwrap_or_default(),
                None => KeywordFile::builtin().overrides.unwrap_or_default(),
            }
        };
        let config = keywords::apply_refinement(&table, &refinement).context("applying keyword refinement")?;
        self.write_artifact(table_out, &table)?;
        let file = KeywordFile {
            keywords: config,
            overrides: None,
        };
        io::write_json(keywords_out, &file.to_json(Some(self.echo())))?;
        Ok(())
    }

    fn classify(&self, args: &ClassifyArgs) -> Result<()> {
        let (_, pool) = self.pool()?;
        let keywords = self.keywords()?;
        let backend = AnyBackend::from_config(self.config, &keywords)?;
        let template = PromptTemplate::builtin(self.config.voting.variant);
        let voter = Voter {
            pool: &pool,
            backend: &backend,
            template: &template,
            keywords: Some(&keywords),
            config: self.config.voting,
        };

        if let Some(text) = &args.text {
            let outcome = voter.run(&args.id, text)?;
            let line = PredictionRecord::from_outcome(&args.id, None, &outcome).to_line();
            match &self.config.paths.out {
                Some(out) => {
                    std::fs::write(out, &line).with_context(|| format!("writing {}", out.display()))?;
                    io::write_json(&batch::meta_path(out), &self.echo())?;
                }
                None => std::io::stdout().write_all(line.as_bytes())?,
            }
            return Ok(());
        }

        let input = required(&self.config.paths.input, "--input or --text")?;
        let out = required(&self.config.paths.out, "--out")?;
        let items: Vec<InputItem> = io::read_items(input, self.format_for(input))?;
        io::write_json(&batch::meta_path(out), &self.echo())?;
        let job = BatchJob {
            voter,
            concurrency: self.config.batch.concurrency,
            resume: self.config.batch.resume,
        };
        let summary = job.run(&items, out)?;
        eprintln!(
            "classified {} input(s), skipped {} already in {}",
            summary.written,
            summary.skipped,
            out.display()
        );
        Ok(())
    }

    fn evaluate(&self) -> Result<()> {
        let pred_path = required(&self.config.paths.predictions, "--predictions")?;
        let gold = self.dataset(required(&self.config.paths.gold, "--gold")?)?;
        let records = io::read_predictions(pred_path)?;
        let mismatch = io::compare_ids(gold.ids(), records.iter().map(|r| r.id.as_str()));
        if !mismatch.missing.is_empty() || !mismatch.extra.is_empty() {
            bail!(
                "prediction ids do not match gold ids\n  missing predictions: {:?}\n  not in gold: {:?}",
                mismatch.missing,
                mismatch.extra
            );
        }
        let gold_labels = io::gold_index(&gold);
        let preds = records
            .iter()
            .map(|r| {
                let g = gold_labels[r.id.as_str()];
                if r.gold.is_some_and(|rg| rg != g) {
                    log::warn!("{}: gold label in predictions differs from the gold file", r.id);
                }
                Prediction {
                    id: r.id.clone(),
                    gold: g,
                    predicted: r.label,
                }
            })
            .collect();
        let report = eval::evaluate(&PredictionSet::new(preds)?)?;
        print!("{}", render_report(&report));
        if let Some(out) = &self.config.paths.out {
            self.write_artifact(out, &report)?;
        }
        Ok(())
    }

    fn ablate(&self, sweep: SweepArg) -> Result<()> {
        let out = required(&self.config.paths.out, "--out")?;
        let (_, pool) = self.pool()?;
        let test = self.dataset(required(&self.config.paths.test, "--test")?)?;
        let keywords = self.keywords()?;
        let backend = AnyBackend::from_config(self.config, &keywords)?;
        let mut runner = ParallelRunner {
            pool: &pool,
            backend: &backend,
            keywords: &keywords,
            concurrency: self.config.batch.concurrency,
        };
        let a = &self.config.ablation;
        if sweep == SweepArg::Keywords {
            let result =
                ablation::run_keyword_ablation(&test, a.per_label, a.subset_seed, self.config.voting, &mut runner)?;
            println!("with-keywords\tmicro_f1={:.4}", result.with_keywords.report.micro_f1);
            println!("basic\tmicro_f1={:.4}", result.basic.report.micro_f1);
            return self.write_artifact(out, &result);
        }
        let spec = SweepSpec {
            shots: a.shots.clone(),
            turns: a.turns.clone(),
            variants: a.variants.clone(),
            per_label: a.per_label,
            subset_seed: a.subset_seed,
            base: self.config.voting,
        };
        let sweep = match sweep {
            SweepArg::Shots => Sweep::Shots,
            SweepArg::Turns => Sweep::Turns,
            _ => Sweep::Both,
        };
        let result = ablation::run_ablation(&spec, sweep, &test, pool.per_category(), &mut runner)?;
        for cell in &result.cells {
            let v = &cell.configuration.voting;
            println!(
                "{}\t{}\tshots={}\tturns={}\tmicro_f1={:.4}",
                cell.configuration.swept, v.variant, v.shots_per_category, v.initial_turns, cell.report.micro_f1
            );
        }
        self.write_artifact(out, &result)?;
        if let Some(csv) = &self.config.paths.csv {
            std::fs::write(csv, ablation::to_csv(&result)).with_context(|| format!("writing {}", csv.display()))?;
        }
        Ok(())
    }

    fn baseline(&self) -> Result<()> {
        let test = self.dataset(required(&self.config.paths.test, "--test")?)?;
        let b = &self.config.baseline;
        let train = || -> Result<Dataset> { self.dataset(required(&self.config.paths.train, "--train")?) };
        let preds = match b.kind {
            BaselineKind::Random => baselines::random_baseline(&test, b.seed),
            BaselineKind::Majority => baselines::majority_baseline(&train()?, &test)?,
            BaselineKind::Ngram => {
                let model = baselines::ngram_train(&train()?, b.ngram)?;
                baselines::ngram_predict(&model, &test)
            }
        };
        let report = eval::evaluate(&preds)?;
        println!("micro_f1\t{:.4}", report.micro_f1);
        if let Some(out) = &self.config.paths.out {
            let records: Vec<PredictionRecord> = preds
                .iter()
                .map(|p| PredictionRecord {
                    id: p.id.clone(),
                    gold: Some(p.gold),
                    label: p.predicted,
                    turns_used: None,
                    tally: None,
                    termination: None,
                })
                .collect();
            io::write_predictions(out, &records)?;
            io::write_json(&batch::meta_path(out), &self.echo())?;
        }
        if let Some(path) = &self.config.paths.report {
            self.write_artifact(path, &report)?;
        }
        Ok(())
    }
}

/// Micro-F1 line followed by the confusion matrix, gold labels down the side.
pub fn render_report(report: &EvaluationReport) -> String {
    let mut s = format!("micro_f1\t{:.4}\nn\t{}\n", report.micro_f1, report.n);
    s.push_str("gold\\predicted");
    for c in &report.labels {
        s.push('\t');
        s.push_str(c.as_str());
    }
    s.push('\n');
    for (c, row) in report.labels.iter().zip(&report.confusion_matrix) {
        s.push_str(c.as_str());
        for v in row {
            s.push_str(&format!("\t{v}"));
        }
        s.push('\n');
    }
    s
}
