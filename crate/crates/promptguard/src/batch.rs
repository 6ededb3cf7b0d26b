//! Concurrent voting over many inputs, and resumable JSONL batch output.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;

use promptguard_core::ablation::BatchRunner;
use promptguard_core::backend::Backend;
use promptguard_core::corpus::{BalancedPool, Dataset};
use promptguard_core::keywords::KeywordConfig;
use promptguard_core::prompt::PromptTemplate;
use promptguard_core::voting::{VoteError, Voter, VotingConfig, VotingOutcome};
use serde::Serialize;

use crate::io::{self, FormatError, InputItem, PredictionRecord};

/// Runs `f` over `items` on `workers` threads and hands each result to
/// `sink` on the calling thread, in completion order. Once `sink` returns
/// false each worker starts at most one more item.
pub fn parallel_for_each<T, R>(
    items: &[T],
    workers: usize,
    f: impl Fn(&T) -> R + Sync,
    mut sink: impl FnMut(usize, R) -> bool,
) where
    T: Sync,
    R: Send,
{
    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let (tx, rx) = mpsc::sync_channel(0);
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, items.len().max(1)) {
            let tx = tx.clone();
            let (next, stop, f) = (&next, &stop, &f);
            s.spawn(move || {
                while !stop.load(Ordering::SeqCst) {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(item) = items.get(i) else { break };
                    if tx.send((i, f(item))).is_err() {
                        break;
                    }
                }
            });
        }
        drop(tx);
        for (i, r) in rx {
            if !sink(i, r) {
                stop.store(true, Ordering::SeqCst);
            }
        }
    });
}

/// Votes on up to `concurrency` inputs at once, sharing one backend.
pub struct ParallelRunner<'a, B> {
    pub pool: &'a BalancedPool,
    pub backend: &'a B,
    pub keywords: &'a KeywordConfig,
    pub concurrency: usize,
}

impl<B> BatchRunner for ParallelRunner<'_, B>
where
    B: Backend + Sync,
    B::Error: Send,
{
    type Error = VoteError<B::Error>;

    fn run_batch(&mut self, config: &VotingConfig, items: &Dataset) -> Result<Vec<VotingOutcome>, Self::Error> {
        let template = PromptTemplate::builtin(config.variant);
        let voter = Voter {
            pool: self.pool,
            backend: self.backend,
            template: &template,
            keywords: Some(self.keywords),
            config: *config,
        };
        let mut slots: Vec<Option<VotingOutcome>> = vec![None; items.len()];
        let mut failure = None;
        parallel_for_each(
            items.examples(),
            self.concurrency,
            |ex| voter.run(&ex.id, &ex.text),
            |i, r| match r {
                Ok(outcome) => {
                    slots[i] = Some(outcome);
                    true
                }
                Err(e) => {
                    failure.get_or_insert(e);
                    false
                }
            },
        );
        match failure {
            Some(e) => Err(e),
            None => Ok(slots.into_iter().map(|s| s.expect("every item ran")).collect()),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BatchError<E> {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("input {id:?}: {source}")]
    Vote {
        id: String,
        #[source]
        source: VoteError<E>,
    },
}

/// Written next to an output file when a batch stops early.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct ResumeMarker {
    pub error: String,
    pub failed_id: String,
    pub written: usize,
    pub remaining: usize,
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn marker_path(out: &Path) -> PathBuf {
    with_suffix(out, ".incomplete")
}

pub fn meta_path(out: &Path) -> PathBuf {
    with_suffix(out, ".meta.json")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchSummary {
    pub written: usize,
    pub skipped: usize,
}

pub struct BatchJob<'a, B> {
    pub voter: Voter<'a, &'a B>,
    pub concurrency: usize,
    pub resume: bool,
}

impl<'a, B> BatchJob<'a, B>
where
    B: Backend + Sync,
    B::Error: Send + std::fmt::Display,
{
    /// Votes on every item and appends one line per item to `out`, in input
    /// order, flushing as each line becomes ready. With `resume`, items whose
    /// ids are already in `out` are skipped. On failure the written prefix is
    /// kept and a [`ResumeMarker`] is left at [`marker_path`].
    pub fn run(&self, items: &[InputItem], out: &Path) -> Result<BatchSummary, BatchError<B::Error>> {
        let io_err = |source| FormatError::Io {
            path: out.to_path_buf(),
            source,
        };
        let done = if self.resume {
            io::recover_predictions(out)?
        } else {
            Default::default()
        };
        let todo: Vec<&InputItem> = items.iter().filter(|it| !done.contains(&it.id)).collect();
        let skipped = items.len() - todo.len();
        if skipped > 0 {
            log::info!("resuming: {skipped} input(s) already in {}", out.display());
        }
        let mut file = OpenOptions::new()
            .create(true)
            .append(self.resume)
            .write(true)
            .truncate(!self.resume)
            .open(out)
            .map_err(io_err)?;

        let mut pending: BTreeMap<usize, PredictionRecord> = BTreeMap::new();
        let mut written = 0;
        let mut failure: Option<(usize, VoteError<B::Error>)> = None;
        let mut write_error = None;
        parallel_for_each(
            &todo,
            self.concurrency,
            |it| self.voter.run(&it.id, &it.text),
            |i, r| {
                match r {
                    Ok(outcome) => {
                        pending.insert(i, PredictionRecord::from_outcome(&todo[i].id, todo[i].label, &outcome));
                    }
                    Err(e) => {
                        if failure.as_ref().is_none_or(|(j, _)| i < *j) {
                            failure = Some((i, e));
                        }
                        return false;
                    }
                }
                while let Some(rec) = pending.remove(&written) {
                    let line = rec.to_line();
                    if let Err(e) = file.write_all(line.as_bytes()).and_then(|_| file.flush()) {
                        write_error = Some(e);
                        return false;
                    }
                    written += 1;
                }
                true
            },
        );
        if let Some(e) = write_error {
            return Err(io_err(e).into());
        }
        let marker = marker_path(out);
        if let Some((i, source)) = failure {
            let m = ResumeMarker {
                error: source.to_string(),
                failed_id: todo[i].id.clone(),
                written: skipped + written,
                remaining: todo.len() - written,
            };
            io::write_json(&marker, &m)?;
            return Err(BatchError::Vote {
                id: todo[i].id.clone(),
                source,
            });
        }
        if marker.exists() {
            fs::remove_file(&marker).map_err(|e| FormatError::Io {
                path: marker,
                source: e,
            })?;
        }
        Ok(BatchSummary { written, skipped })
    }
}
