//! Deterministic scripted stand-in for the LLM. Emits grammar-conformant
//! replies from a document-to-label script plus configurable naming noise,
//! split bias, and scripted merge events, so whole runs can be exercised
//! offline and replayed byte-identically.

use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{CallContext, ChatClient, Completion, GatewayError};
use crate::model::{normalize_label, Label};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeEvent {
    pub step: usize,
    pub old_labels: Vec<String>,
    pub new_label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleScript {
    /// document id -> label to emit (typically the gold label).
    pub labeler: HashMap<String, String>,
    /// Probability a label is emitted with a spelling or casing variant.
    #[serde(default)]
    pub naming_noise: f64,
    /// Probability of emitting NEW_LABEL with a fresh variant name even when
    /// a matching label already exists in memory.
    #[serde(default)]
    pub split_bias: f64,
    #[serde(default)]
    pub merge_events: Vec<MergeEvent>,
    #[serde(default)]
    pub rng_seed: u64,
}

impl OracleScript {
    pub fn perfect(labeler: HashMap<String, String>) -> Self {
        Self { labeler, naming_noise: 0.0, split_bias: 0.0, merge_events: Vec::new(), rng_seed: 0 }
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        if !(0.0..=1.0).contains(&self.naming_noise) || !(0.0..=1.0).contains(&self.split_bias) {
            return Err(OracleError::InvalidProbability);
        }
        let mut last = 0;
        for e in &self.merge_events {
            if e.step <= last {
                return Err(OracleError::UnorderedMergeEvents);
            }
            last = e.step;
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("document {0} is not in the oracle script")]
    UnknownDocument(String),
    #[error("probabilities must lie in [0, 1]")]
    InvalidProbability,
    #[error("merge_events steps must be strictly increasing")]
    UnorderedMergeEvents,
}

/// Per-call RNG keyed on (seed, step, doc id) rather than call order, so a
/// resumed run sees the exact byte sequence of an uninterrupted one.
fn call_rng(seed: u64, step: usize, doc_id: &str) -> ChaCha8Rng {
    let mut hasher = std::collections::hash_map::DefaultHasher::new();
    seed.hash(&mut hasher);
    step.hash(&mut hasher);
    doc_id.hash(&mut hasher);
    ChaCha8Rng::seed_from_u64(hasher.finish())
}

fn fresh_variant(gold: &str, memory_view: &[Label], rng: &mut ChaCha8Rng) -> String {
    loop {
        let n: u32 = rng.gen_range(2..1_000_000);
        let name = format!("{gold} (variant {n})");
        let candidate = normalize_label(&name).expect("variant name is non-empty");
        if !memory_view.contains(&candidate) {
            return name;
        }
    }
}

fn casing_variant(gold: &str) -> String {
    if gold.chars().any(|c| c.is_lowercase()) {
        gold.to_uppercase()
    } else {
        gold.to_lowercase()
    }
}

/// Emits one reply for a document. `allow_split` is cleared by the client
/// adapter when a strict prompt is in effect.
pub fn oracle_complete(
    doc_id: &str,
    step: usize,
    script: &OracleScript,
    memory_view: &[Label],
    allow_split: bool,
) -> Result<String, OracleError> {
    let gold = script
        .labeler
        .get(doc_id)
        .ok_or_else(|| OracleError::UnknownDocument(doc_id.to_string()))?;
    let gold_label = normalize_label(gold).map_err(|_| OracleError::UnknownDocument(doc_id.into()))?;
    let mut rng = call_rng(script.rng_seed, step, doc_id);

    let mut reply = match memory_view.iter().find(|l| **l == gold_label) {
        Some(existing) => {
            if allow_split && rng.gen_bool(script.split_bias) {
                format!("NEW_LABEL: \"{}\"", fresh_variant(gold, memory_view, &mut rng))
            } else {
                format!("ASSIGNED_LABEL: \"{existing}\"")
            }
        }
        None => {
            let name = if rng.gen_bool(script.naming_noise) {
                if rng.gen_bool(0.5) {
                    casing_variant(gold)
                } else {
                    fresh_variant(gold, memory_view, &mut rng)
                }
            } else {
                gold.clone()
            };
            format!("NEW_LABEL: \"{name}\"")
        }
    };

    if let Some(event) = script.merge_events.iter().find(|e| e.step == step) {
        let old: Vec<String> = event.old_labels.iter().map(|l| format!("\"{l}\"")).collect();
        reply.push_str(&format!(
            "\nMERGE_SUGGESTION: MERGE: [{}] INTO: [\"{}\"]",
            old.join(", "),
            event.new_label
        ));
    }
    Ok(reply)
}

/// `ChatClient` adapter around the oracle. It consumes the same prompts the
/// wire client would: memory is read back off the Known-labels line and the
/// mode off the system guideline, so ablations exercise the real surface.
pub struct ScriptedOracle {
    script: OracleScript,
}

impl ScriptedOracle {
    pub fn new(script: OracleScript) -> Result<Self, OracleError> {
        script.validate()?;
        Ok(Self { script })
    }
}

fn extract_memory_view(user_text: &str) -> Vec<Label> {
    for line in user_text.lines() {
        if let Some(rest) = line.strip_prefix("Known labels: ") {
            if let Ok(items) = serde_json::from_str::<Vec<String>>(rest.trim()) {
                return items.iter().filter_map(|s| normalize_label(s).ok()).collect();
            }
        }
    }
    Vec::new()
}

impl ChatClient for ScriptedOracle {
    fn complete(
        &mut self,
        system_text: &str,
        user_text: &str,
        ctx: &CallContext,
    ) -> Result<Completion, GatewayError> {
        let memory_view = extract_memory_view(user_text);
        let strict = system_text.contains("CRITICAL GUIDELINE");
        let text = oracle_complete(&ctx.doc_id, ctx.step, &self.script, &memory_view, !strict)?;
        Ok(Completion { text, meta: None })
    }
}
