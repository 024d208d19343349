//! The end-to-end run: the N-step loop wiring controller, prompt builder,
//! gateway, and engine, with event-sourced persistence, resume, ablation
//! variants, and offset sweeps.

pub mod corpus;
pub mod events;

pub use corpus::{ingest_corpus, CorpusError};
pub use events::{EventLogError, EventLogWriter, Record, RunEvent};

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{classify_with_retry, CallContext, ChatClient, GatewayError};
use crate::granularity::select_mode;
use crate::memory::{apply_assignment, apply_merge, core_step, derive_partition, EmptyLog};
use crate::metrics::{dense_encode, LabelVectorPair, MetricsError, MetricsReport};
use crate::model::{
    AssignmentLog, ConfigError, Document, MemoryState, Mode, ModelError, Partition, RunConfig,
};
use crate::prompt::build_prompt_pair;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("corpus is empty; refusing to start")]
    EmptyCorpus,
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Engine(#[from] ModelError),
    #[error(transparent)]
    EmptyLog(#[from] EmptyLog),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    EventLog(#[from] EventLogError),
    #[error("event log config snapshot differs from the requested config")]
    ConfigMismatch,
    #[error("corrupt event log at step {0}")]
    CorruptLog(usize),
    #[error("document {0} has no gold label")]
    MissingGold(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Everything a finished (or evaluated) run produces.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub partition: Partition,
    pub final_memory: MemoryState,
    pub events: Vec<RunEvent>,
    pub metrics: Option<MetricsReport>,
    pub config_snapshot: RunConfig,
}

/// Processing order: file order by default, seeded shuffle on request.
fn document_order(corpus: &[Document], config: &RunConfig) -> Vec<usize> {
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    if config.shuffle {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));
    }
    order
}

#[allow(clippy::too_many_arguments)]
fn run_loop(
    corpus: &[Document],
    order: &[usize],
    start: usize,
    mut memory: MemoryState,
    mut log: AssignmentLog,
    mut events: Vec<RunEvent>,
    config: &RunConfig,
    client: &mut dyn ChatClient,
    mut writer: Option<&mut EventLogWriter>,
) -> Result<RunArtifacts, PipelineError> {
    for (idx, &doc_idx) in order.iter().enumerate().skip(start) {
        let step = idx + 1;
        let doc = &corpus[doc_idx];
        let decision = select_mode(memory.len(), config);
        let view = if config.use_memory { memory.to_vec() } else { Vec::new() };
        let prompt = build_prompt_pair(doc, &view, decision.mode, config);
        let ctx = CallContext { step, doc_id: doc.id.clone() };
        let result = classify_with_retry(doc, &prompt, client, config, &ctx)?;
        let outcome = core_step(&mut memory, &mut log, doc, &result.response, step)?;
        let event = RunEvent {
            step,
            doc_id: doc.id.clone(),
            mode: decision.mode,
            outcome,
            memory_size_after: memory.len(),
            retries: result.parse_retries,
            call: result.meta,
        };
        if let Some(w) = writer.as_deref_mut() {
            w.write(Record::Step { event: event.clone() })?;
        }
        events.push(event);
    }

    let partition = derive_partition(&log)?;
    let mut artifacts = RunArtifacts {
        partition,
        final_memory: memory,
        events,
        metrics: None,
        config_snapshot: config.clone(),
    };
    if corpus.iter().all(|d| d.gold_label.is_some()) {
        artifacts.metrics = Some(evaluate_run(&artifacts, corpus)?);
    }
    Ok(artifacts)
}

/// Clusters the whole corpus in one pass: exactly one primary LLM call per
/// document, excluding parse retries. When an event-log path is given every
/// step is persisted before the next begins, so an aborted run resumes from
/// where it stopped.
pub fn run_clustering(
    corpus: &[Document],
    config: &RunConfig,
    client: &mut dyn ChatClient,
    events_path: Option<&Path>,
) -> Result<RunArtifacts, PipelineError> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(PipelineError::EmptyCorpus);
    }
    let mut writer = match events_path {
        Some(path) => {
            let mut w = EventLogWriter::create(path)?;
            w.write(Record::Config { config: config.clone() })?;
            Some(w)
        }
        None => None,
    };
    let order = document_order(corpus, config);
    run_loop(
        corpus,
        &order,
        0,
        MemoryState::new(),
        AssignmentLog::new(),
        Vec::new(),
        config,
        client,
        writer.as_mut(),
    )
}

/// Reconstructs engine state by replaying a recorded event prefix.
pub fn replay_events(
    events: &[RunEvent],
) -> Result<(MemoryState, AssignmentLog), PipelineError> {
    let mut memory = MemoryState::new();
    let mut log = AssignmentLog::new();
    for (i, event) in events.iter().enumerate() {
        if event.step != i + 1 {
            return Err(PipelineError::CorruptLog(event.step));
        }
        apply_assignment(&mut memory, &mut log, &event.doc_id, &event.outcome.assigned, event.step)?;
        if let Some(merge) = &event.outcome.merge_applied {
            apply_merge(&mut memory, &mut log, merge);
        }
        if memory.len() != event.memory_size_after {
            return Err(PipelineError::CorruptLog(event.step));
        }
    }
    Ok((memory, log))
}

/// Continues an interrupted run from its event log. With a deterministic
/// client the final artifacts are byte-identical to an uninterrupted run.
pub fn resume_run(
    events_path: &Path,
    corpus: &[Document],
    config: &RunConfig,
    client: &mut dyn ChatClient,
) -> Result<RunArtifacts, PipelineError> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(PipelineError::EmptyCorpus);
    }
    let records = events::read_records(events_path).map_err(|e| match e {
        EventLogError::Corrupt(line) => PipelineError::CorruptLog(line.saturating_sub(1)),
        other => PipelineError::EventLog(other),
    })?;
    let mut iter = records.into_iter();
    match iter.next() {
        Some(Record::Config { config: snapshot }) if snapshot == *config => {}
        Some(Record::Config { .. }) => return Err(PipelineError::ConfigMismatch),
        _ => return Err(PipelineError::CorruptLog(0)),
    }
    let replayed: Vec<RunEvent> = iter
        .map(|r| match r {
            Record::Step { event } => Ok(event),
            Record::Config { .. } => Err(PipelineError::CorruptLog(0)),
        })
        .collect::<Result<_, _>>()?;

    let order = document_order(corpus, config);
    for (i, event) in replayed.iter().enumerate() {
        if i >= order.len() || corpus[order[i]].id != event.doc_id {
            return Err(PipelineError::CorruptLog(event.step));
        }
    }
    let (memory, log) = replay_events(&replayed)?;
    let start = replayed.len();
    let mut writer = EventLogWriter::append(events_path)?;
    run_loop(corpus, &order, start, memory, log, replayed, config, client, Some(&mut writer))
}

/// Dense-encodes predicted and gold labels over corpus order and computes
/// the evaluation triple.
pub fn evaluate_run(
    artifacts: &RunArtifacts,
    corpus: &[Document],
) -> Result<MetricsReport, PipelineError> {
    let mut doc_to_label = std::collections::HashMap::new();
    for (label, docs) in &artifacts.partition.clusters {
        for doc_id in docs {
            doc_to_label.insert(doc_id.as_str(), label.clone());
        }
    }
    let mut predicted = Vec::with_capacity(corpus.len());
    let mut gold = Vec::with_capacity(corpus.len());
    for doc in corpus {
        let label = doc_to_label
            .get(doc.id.as_str())
            .ok_or(PipelineError::CorruptLog(0))?;
        predicted.push(label.clone());
        gold.push(
            doc.gold_label
                .clone()
                .ok_or_else(|| PipelineError::MissingGold(doc.id.clone()))?,
        );
    }
    let pair = LabelVectorPair::new(dense_encode(&predicted), dense_encode(&gold))?;
    Ok(MetricsReport::compute(&pair)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub offset: i64,
    pub metrics: Option<MetricsReport>,
    pub k_final: Option<usize>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn render_table(&self) -> String {
        let mut out = format!(
            "{:>7} {:>6} {:>6} {:>6} {:>7}\n",
            "Offset", "ACC", "NMI", "ARI", "K"
        );
        for row in &self.rows {
            match (&row.metrics, row.k_final) {
                (Some(m), Some(k)) => out.push_str(&format!(
                    "{:>+7} {:>6.1} {:>6.1} {:>6.1} {:>7}\n",
                    row.offset,
                    m.acc * 100.0,
                    m.nmi * 100.0,
                    m.ari * 100.0,
                    k
                )),
                _ => out.push_str(&format!(
                    "{:>+7} {}\n",
                    row.offset,
                    row.error.as_deref().unwrap_or("failed")
                )),
            }
        }
        out
    }
}

/// Client factory: each sweep or ablation row gets a fresh client.
pub type ClientFactory<'a> =
    &'a mut dyn FnMut(&RunConfig) -> Result<Box<dyn ChatClient>, PipelineError>;

/// Runs one full clustering per offset, fresh state each time, and collects
/// the evaluation triple plus the final cluster count per row. Failed rows
/// are marked, not fatal.
pub fn sweep_offsets(
    corpus: &[Document],
    base_config: &RunConfig,
    offsets: &[i64],
    make_client: ClientFactory,
) -> SweepReport {
    let mut rows = Vec::new();
    for &offset in offsets {
        let mut config = base_config.clone();
        config.offset = offset;
        let outcome = sweep_cell(corpus, &config, make_client);
        match outcome {
            Ok((metrics, k)) => rows.push(SweepRow {
                offset,
                metrics: Some(metrics),
                k_final: Some(k),
                error: None,
            }),
            Err(e) => rows.push(SweepRow {
                offset,
                metrics: None,
                k_final: None,
                error: Some(e.to_string()),
            }),
        }
    }
    SweepReport { rows }
}

fn sweep_cell(
    corpus: &[Document],
    config: &RunConfig,
    make_client: ClientFactory,
) -> Result<(MetricsReport, usize), PipelineError> {
    config.validate()?;
    let mut client = make_client(config)?;
    let artifacts = run_clustering(corpus, config, client.as_mut(), None)?;
    let metrics = evaluate_run(&artifacts, corpus)?;
    Ok((metrics, artifacts.final_memory.len()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: String,
    pub metrics: Option<MetricsReport>,
    pub k_final: Option<usize>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationReport {
    pub rows: Vec<AblationRow>,
}

impl AblationReport {
    pub fn render_table(&self) -> String {
        let mut out = format!(
            "{:<16} {:>6} {:>6} {:>6} {:>7}\n",
            "Variant", "ACC", "NMI", "ARI", "K"
        );
        for row in &self.rows {
            match (&row.metrics, row.k_final) {
                (Some(m), Some(k)) => out.push_str(&format!(
                    "{:<16} {:>6.1} {:>6.1} {:>6.1} {:>7}\n",
                    row.variant,
                    m.acc * 100.0,
                    m.nmi * 100.0,
                    m.ari * 100.0,
                    k
                )),
                _ => out.push_str(&format!(
                    "{:<16} {}\n",
                    row.variant,
                    row.error.as_deref().unwrap_or("failed")
                )),
            }
        }
        out
    }
}

/// The ablation variants: each is a config tweak over the same engine.
pub fn ablation_variants(base: &RunConfig) -> Vec<(String, RunConfig)> {
    let mut variants = Vec::new();
    variants.push(("default".to_string(), base.clone()));
    let mut c = base.clone();
    c.use_memory = false;
    variants.push(("w/o Memory".to_string(), c));
    let mut c = base.clone();
    c.use_fewshot = false;
    variants.push(("w/o Few-shot".to_string(), c));
    let mut c = base.clone();
    c.use_memory = false;
    c.use_fewshot = false;
    variants.push(("w/o M+FS".to_string(), c));
    let mut c = base.clone();
    c.forced_mode = Some(Mode::Strict);
    variants.push(("Strict Prompt".to_string(), c));
    let mut c = base.clone();
    c.forced_mode = Some(Mode::Relaxed);
    variants.push(("Relaxed Prompt".to_string(), c));
    variants
}

/// Runs the default configuration and every ablation variant.
pub fn ablate(
    corpus: &[Document],
    base_config: &RunConfig,
    make_client: ClientFactory,
) -> AblationReport {
    let mut rows = Vec::new();
    for (variant, config) in ablation_variants(base_config) {
        match sweep_cell(corpus, &config, make_client) {
            Ok((metrics, k)) => rows.push(AblationRow {
                variant,
                metrics: Some(metrics),
                k_final: Some(k),
                error: None,
            }),
            Err(e) => rows.push(AblationRow {
                variant,
                metrics: None,
                k_final: None,
                error: Some(e.to_string()),
            }),
        }
    }
    AblationReport { rows }
}
