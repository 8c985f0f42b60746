//! Batch document pipeline.
//!
//! Documents are cut into batches and every batch runs through the steps in
//! order. A document that fails in a step is restored to its pre-step state,
//! marked failed with the step's name and skipped by later steps; the rest
//! of the batch carries on. A step that errors (or panics) on a whole batch
//! fails every document of that batch and the run moves to the next batch.
//!
//! With a [`MemoryGuard`], each worker samples resident memory after every
//! `check_interval` batches. Over budget, the worker re-creates its
//! per-worker steps and retries the in-flight batch once; if the retry is
//! also over budget the batch is marked failed.

mod config;
mod memory;
mod steps;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Document;

pub use config::{PipelineConfig, StepConfig};
pub use memory::{
    memory_guard_check, CounterEstimator, GuardAction, MemoryEstimator, MemoryGuard, MemoryGuardConfig, ProcessRss,
    ScriptedEstimator,
};
pub use steps::{DictionaryStep, HeadStep, LengthGuardStep};

pub const MEMORY_GUARD_STEP: &str = "memory-guard";

/// A per-document failure reported by a step, by index into the batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocFailure {
    pub index: usize,
    pub message: String,
}

impl DocFailure {
    pub fn new(index: usize, message: impl Into<String>) -> Self {
        DocFailure {
            index,
            message: message.into(),
        }
    }
}

/// One processing step.
///
/// `process` updates the batch in place and lists the documents it could
/// not handle. Returning `Err` fails the entire batch.
pub trait Step: Send + Sync {
    fn name(&self) -> &str;

    fn process(&self, batch: &mut [Document]) -> std::result::Result<Vec<DocFailure>, String>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sharing {
    /// Immutable after construction; one instance serves all workers.
    Shareable,
    /// Each worker builds its own instance, and rebuilds it on recycle.
    PerWorker,
}

pub type StepFactory = Arc<dyn Fn() -> Result<Box<dyn Step>> + Send + Sync>;

#[derive(Clone)]
enum StepSlot {
    Shared(Arc<dyn Step>),
    PerWorker { name: String, factory: StepFactory },
}

impl StepSlot {
    fn name(&self) -> &str {
        match self {
            StepSlot::Shared(step) => step.name(),
            StepSlot::PerWorker { name, .. } => name,
        }
    }
}

/// Ordered list of steps.
#[derive(Clone, Default)]
pub struct Pipeline {
    slots: Vec<StepSlot>,
}

impl Pipeline {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn shared(mut self, step: impl Step + 'static) -> Self {
        self.slots.push(StepSlot::Shared(Arc::new(step)));
        self
    }

    pub fn shared_arc(mut self, step: Arc<dyn Step>) -> Self {
        self.slots.push(StepSlot::Shared(step));
        self
    }

    pub fn per_worker<F>(mut self, name: impl Into<String>, factory: F) -> Self
    where
        F: Fn() -> Result<Box<dyn Step>> + Send + Sync + 'static,
    {
        self.slots.push(StepSlot::PerWorker {
            name: name.into(),
            factory: Arc::new(factory),
        });
        self
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn step_names(&self) -> Vec<String> {
        self.slots.iter().map(|s| s.name().to_string()).collect()
    }

    pub fn sharing(&self) -> Vec<Sharing> {
        self.slots
            .iter()
            .map(|s| match s {
                StepSlot::Shared(_) => Sharing::Shareable,
                StepSlot::PerWorker { .. } => Sharing::PerWorker,
            })
            .collect()
    }

    fn instantiate(&self) -> Result<Vec<Arc<dyn Step>>> {
        self.slots
            .iter()
            .map(|slot| match slot {
                StepSlot::Shared(step) => Ok(Arc::clone(step)),
                StepSlot::PerWorker { factory, .. } => factory().map(Arc::from),
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub batch_size: usize,
    pub workers: usize,
    pub guard: Option<MemoryGuard>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            batch_size: 32,
            workers: 1,
            guard: None,
        }
    }
}

impl RunOptions {
    pub fn with_batch_size(batch_size: usize) -> Self {
        RunOptions {
            batch_size,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be >= 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidArgument("worker count must be >= 1".into()));
        }
        if let Some(guard) = &self.guard {
            guard.config.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub name: String,
    pub wall_seconds: f64,
    /// Batches this step was invoked on.
    pub batches: usize,
    /// Documents handed to this step.
    pub documents: usize,
    pub sec_per_step: f64,
    pub samples_per_sec: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub documents_in: usize,
    pub documents_processed: usize,
    pub documents_failed: usize,
    pub batch_size: usize,
    pub batches: usize,
    pub workers: usize,
    pub recycles: usize,
    pub wall_seconds: f64,
    /// Wall time divided by the number of batches.
    pub sec_per_step: f64,
    /// Documents divided by wall time.
    pub samples_per_sec: f64,
    pub steps: Vec<StepReport>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }

    pub fn to_text(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "documents: {} in, {} processed, {} failed | batch size {} × {} batches | workers {} | recycles {}",
            self.documents_in,
            self.documents_processed,
            self.documents_failed,
            self.batch_size,
            self.batches,
            self.workers,
            self.recycles
        );
        let _ = writeln!(
            out,
            "total: {:.6} s, {:.6} sec/step, {:.2} samples/s",
            self.wall_seconds, self.sec_per_step, self.samples_per_sec
        );
        let width = self.steps.iter().map(|s| s.name.len()).max().unwrap_or(4).max(4);
        let _ = writeln!(
            out,
            "{:<width$}  {:>12}  {:>12}  {:>14}",
            "step", "wall (s)", "sec/step", "samples/s"
        );
        for s in &self.steps {
            let _ = writeln!(
                out,
                "{:<width$}  {:>12.6}  {:>12.6}  {:>14.2}",
                s.name, s.wall_seconds, s.sec_per_step, s.samples_per_sec
            );
        }
        out
    }
}

fn rate(count: usize, seconds: f64) -> f64 {
    if seconds > 0.0 {
        count as f64 / seconds
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Default)]
struct StepTally {
    wall: Duration,
    batches: usize,
    documents: usize,
}

#[derive(Debug, Default)]
struct WorkerTally {
    steps: Vec<StepTally>,
    recycles: usize,
}

fn run_steps(steps: &[Arc<dyn Step>], batch: &mut [Document], tally: &mut [StepTally]) {
    for (step, t) in steps.iter().zip(tally.iter_mut()) {
        let active: Vec<usize> = (0..batch.len()).filter(|&i| !batch[i].failed).collect();
        if active.is_empty() {
            break;
        }
        let snapshot: Vec<Document> = active.iter().map(|&i| batch[i].clone()).collect();
        let mut sub = snapshot.clone();

        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(|| step.process(&mut sub)));
        t.wall += started.elapsed();
        t.batches += 1;
        t.documents += sub.len();

        match outcome {
            Ok(Ok(failures)) => {
                for failure in failures {
                    if let Some(original) = snapshot.get(failure.index) {
                        sub[failure.index] = original.clone();
                        sub[failure.index].mark_failed(step.name(), &failure.message);
                    }
                }
            }
            Ok(Err(message)) => {
                sub = snapshot;
                for doc in &mut sub {
                    doc.mark_failed(step.name(), &message);
                }
            }
            Err(panic) => {
                let message = panic
                    .downcast_ref::<&str>()
                    .map(|s| s.to_string())
                    .or_else(|| panic.downcast_ref::<String>().cloned())
                    .unwrap_or_else(|| "step panicked".to_string());
                sub = snapshot;
                for doc in &mut sub {
                    doc.mark_failed(step.name(), &format!("panic: {message}"));
                }
            }
        }
        for (&i, doc) in active.iter().zip(sub) {
            batch[i] = doc;
        }
    }
}

/// Processes one batch, honouring the memory guard. Returns the finished
/// documents.
fn process_batch(
    pipeline: &Pipeline,
    instances: &mut Vec<Arc<dyn Step>>,
    original: &[Document],
    guard: Option<&MemoryGuard>,
    since_check: &mut usize,
    tally: &mut WorkerTally,
) -> Result<Vec<Document>> {
    let mut retried = false;
    loop {
        let mut batch = original.to_vec();
        run_steps(instances, &mut batch, &mut tally.steps);
        let Some(guard) = guard else { return Ok(batch) };
        *since_check += 1;
        if !retried && *since_check < guard.config.check_interval {
            return Ok(batch);
        }
        *since_check = 0;
        if guard.check() == GuardAction::Continue {
            return Ok(batch);
        }
        tally.recycles += 1;
        *instances = pipeline.instantiate()?;
        if retried {
            let mut failed = original.to_vec();
            for doc in failed.iter_mut().filter(|d| !d.failed) {
                doc.mark_failed(MEMORY_GUARD_STEP, "memory budget exceeded after recycle and retry");
            }
            return Ok(failed);
        }
        retried = true;
    }
}

/// Runs `pipeline` over `documents`, returning them in input order together
/// with a report.
pub fn run(pipeline: &Pipeline, documents: Vec<Document>, options: &RunOptions) -> Result<(Vec<Document>, RunReport)> {
    options.validate()?;
    let started = Instant::now();
    let documents_in = documents.len();
    let batches: Vec<&[Document]> = documents.chunks(options.batch_size).collect();
    let results: Mutex<Vec<Option<Vec<Document>>>> = Mutex::new(vec![None; batches.len()]);
    let next = AtomicUsize::new(0);
    let workers = options.workers.min(batches.len()).max(1);

    let worker = || -> Result<WorkerTally> {
        let mut tally = WorkerTally {
            steps: vec![StepTally::default(); pipeline.len()],
            recycles: 0,
        };
        let mut instances = pipeline.instantiate()?;
        let mut since_check = 0;
        loop {
            let i = next.fetch_add(1, Ordering::SeqCst);
            let Some(batch) = batches.get(i) else { break };
            let done = process_batch(
                pipeline,
                &mut instances,
                batch,
                options.guard.as_ref(),
                &mut since_check,
                &mut tally,
            )?;
            results.lock().expect("result slots poisoned")[i] = Some(done);
        }
        Ok(tally)
    };

    let tallies: Vec<Result<WorkerTally>> = if workers == 1 {
        vec![worker()]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers).map(|_| scope.spawn(worker)).collect();
            handles
                .into_iter()
                .map(|h| {
                    h.join()
                        .unwrap_or_else(|_| Err(Error::InvalidArgument("worker thread panicked".into())))
                })
                .collect()
        })
    };

    let mut merged = WorkerTally {
        steps: vec![StepTally::default(); pipeline.len()],
        recycles: 0,
    };
    for tally in tallies {
        let tally = tally?;
        merged.recycles += tally.recycles;
        for (m, t) in merged.steps.iter_mut().zip(tally.steps) {
            m.wall += t.wall;
            m.batches += t.batches;
            m.documents += t.documents;
        }
    }

    let out: Vec<Document> = results
        .into_inner()
        .expect("result slots poisoned")
        .into_iter()
        .flat_map(|b| b.expect("every batch is processed"))
        .collect();
    let wall = started.elapsed().as_secs_f64();
    let failed = out.iter().filter(|d| d.failed).count();
    let n_batches = batches.len();
    let report = RunReport {
        documents_in,
        documents_processed: out.len() - failed,
        documents_failed: failed,
        batch_size: options.batch_size,
        batches: n_batches,
        workers,
        recycles: merged.recycles,
        wall_seconds: wall,
        sec_per_step: if n_batches == 0 { 0.0 } else { wall / n_batches as f64 },
        samples_per_sec: rate(documents_in, wall),
        steps: pipeline
            .step_names()
            .into_iter()
            .zip(merged.steps)
            .map(|(name, t)| {
                let secs = t.wall.as_secs_f64();
                StepReport {
                    name,
                    wall_seconds: secs,
                    batches: t.batches,
                    documents: t.documents,
                    sec_per_step: if t.batches == 0 { 0.0 } else { secs / t.batches as f64 },
                    samples_per_sec: rate(t.documents, secs),
                }
            })
            .collect(),
    };
    Ok((out, report))
}

/// Times a pipeline over `documents`.
///
/// The first batch is processed once, untimed, to warm up; then the full
/// dataset is run and timed. `sec_per_step` is wall time over batches and
/// `samples_per_sec` is documents over wall time.
pub fn bench(
    pipeline: &Pipeline,
    documents: Vec<Document>,
    options: &RunOptions,
) -> Result<(Vec<Document>, RunReport)> {
    options.validate()?;
    if documents.is_empty() {
        return Err(Error::InvalidArgument("benchmark dataset is empty".into()));
    }
    let warmup: Vec<Document> = documents.iter().take(options.batch_size).cloned().collect();
    let warm_options = RunOptions {
        workers: 1,
        guard: None,
        ..options.clone()
    };
    run(pipeline, warmup, &warm_options)?;
    run(pipeline, documents, options)
}
