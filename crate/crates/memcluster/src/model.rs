//! Domain types shared by every other module.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("label is empty after normalization")]
    EmptyLabel,
    #[error("document {0} already has a live assignment")]
    DuplicateDocument(String),
    #[error("document text is empty")]
    EmptyText,
}

/// One corpus instance, with an optional gold label used only for evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub gold_label: Option<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Result<Self, ModelError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(ModelError::EmptyText);
        }
        Ok(Self { id: id.into(), text, gold_label: None })
    }

    pub fn with_gold(mut self, gold: impl Into<String>) -> Self {
        self.gold_label = Some(gold.into());
        self
    }
}

/// A normalized cluster label. Display preserves first-seen casing;
/// equality and hashing are case-insensitive.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(String);

impl Label {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn key(&self) -> String {
        self.0.to_lowercase()
    }
}

impl PartialEq for Label {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Label {}

impl Hash for Label {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state);
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key().cmp(&other.key()).then_with(|| self.0.cmp(&other.0))
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Trims whitespace, strips one layer of matching surrounding quotes, and
/// collapses internal whitespace runs to single spaces. Case is preserved.
pub fn normalize_label(raw: &str) -> Result<Label, ModelError> {
    let mut s = raw.trim();
    let bytes = s.as_bytes();
    if s.len() >= 2 {
        let (first, last) = (bytes[0], bytes[s.len() - 1]);
        if (first == b'"' && last == b'"') || (first == b'\'' && last == b'\'') {
            s = s[1..s.len() - 1].trim();
        }
    }
    let collapsed: Vec<&str> = s.split_whitespace().collect();
    if collapsed.is_empty() {
        return Err(ModelError::EmptyLabel);
    }
    Ok(Label(collapsed.join(" ")))
}

/// The dynamic label memory: an insertion-ordered, duplicate-free label set
/// with a version counter bumped on every mutation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryState {
    labels: IndexSet<Label>,
    version: u64,
}

impl MemoryState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn contains(&self, label: &Label) -> bool {
        self.labels.contains(label)
    }

    /// Returns the stored (first-seen) form of an equal label, if present.
    pub fn canonical(&self, label: &Label) -> Option<&Label> {
        self.labels.get(label)
    }

    pub fn labels(&self) -> impl Iterator<Item = &Label> {
        self.labels.iter()
    }

    pub fn to_vec(&self) -> Vec<Label> {
        self.labels.iter().cloned().collect()
    }

    /// Inserts a label if absent. Returns true iff it was new.
    pub fn insert(&mut self, label: Label) -> bool {
        let inserted = self.labels.insert(label);
        self.version += 1;
        inserted
    }

    /// Removes every label in `old` and inserts `new`, keeping insertion
    /// order for untouched labels. Returns the removed labels.
    pub fn replace(&mut self, old: &[Label], new: Label) -> Vec<Label> {
        let mut removed = Vec::new();
        for l in old {
            if let Some(found) = self.labels.shift_take(l) {
                removed.push(found);
            }
        }
        self.labels.insert(new);
        self.version += 1;
        removed
    }
}

/// An LLM-proposed consolidation of existing labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeSuggestion {
    pub old_labels: Vec<Label>,
    pub new_label: Label,
}

impl MergeSuggestion {
    pub fn new(old_labels: Vec<Label>, new_label: Label) -> Self {
        debug_assert!(!old_labels.is_empty());
        Self { old_labels, new_label }
    }
}

/// One live assignment record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentEntry {
    pub doc_id: String,
    pub label: Label,
    pub step: usize,
}

/// The evolving set of (document, label) pairs, retroactively rewritable.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AssignmentLog {
    entries: Vec<AssignmentEntry>,
    rewrite_count: usize,
}

impl AssignmentLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn rewrite_count(&self) -> usize {
        self.rewrite_count
    }

    pub fn entries(&self) -> &[AssignmentEntry] {
        &self.entries
    }

    pub fn contains_doc(&self, doc_id: &str) -> bool {
        self.entries.iter().any(|e| e.doc_id == doc_id)
    }

    pub fn push(&mut self, doc_id: &str, label: Label, step: usize) -> Result<(), ModelError> {
        if self.contains_doc(doc_id) {
            return Err(ModelError::DuplicateDocument(doc_id.to_string()));
        }
        if let Some(last) = self.entries.last() {
            debug_assert!(step > last.step, "step_index must be strictly increasing");
        }
        self.entries.push(AssignmentEntry { doc_id: doc_id.to_string(), label, step });
        Ok(())
    }

    /// Rewrites every live entry whose label is in `old` to `new`.
    /// Returns the number of rewritten entries.
    pub fn rewrite(&mut self, old: &[Label], new: &Label) -> usize {
        let mut n = 0;
        for entry in &mut self.entries {
            if old.contains(&entry.label) {
                entry.label = new.clone();
                n += 1;
            }
        }
        self.rewrite_count += n;
        n
    }
}

/// A finished partition: clusters keyed by label, covering every processed
/// document exactly once.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub clusters: BTreeMap<Label, BTreeSet<String>>,
}

impl Partition {
    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn num_documents(&self) -> usize {
        self.clusters.values().map(|s| s.len()).sum()
    }

    pub fn label_of(&self, doc_id: &str) -> Option<&Label> {
        self.clusters.iter().find(|(_, docs)| docs.contains(doc_id)).map(|(l, _)| l)
    }
}

/// The prompt mode active at one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Relaxed,
    Strict,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Relaxed => f.write_str("relaxed"),
            Mode::Strict => f.write_str("strict"),
        }
    }
}

/// A static few-shot exemplar: input text plus the verbatim response line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exemplar {
    pub text: String,
    pub response: String,
}

/// Provider settings for the chat-completion client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmSettings {
    pub base_url: String,
    pub model: String,
    pub temperature: f64,
    pub timeout_secs: u64,
    pub max_transport_retries: u32,
    pub backoff_ms: u64,
}

impl Default for LlmSettings {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com".to_string(),
            model: "gpt-4.1-mini".to_string(),
            temperature: 0.0,
            timeout_secs: 60,
            max_transport_retries: 3,
            backoff_ms: 250,
        }
    }
}

pub const DEFAULT_MAX_TEXT_CHARS: usize = 4000;

/// Full configuration of one clustering run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub k_min: usize,
    pub k_max: usize,
    /// Signed shift applied to the relaxed-to-strict switching threshold.
    pub offset: i64,
    pub use_memory: bool,
    pub use_fewshot: bool,
    pub forced_mode: Option<Mode>,
    pub exemplars: Vec<Exemplar>,
    pub max_parse_retries: u32,
    pub max_text_chars: usize,
    pub shuffle: bool,
    pub llm_settings: LlmSettings,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            k_min: 1,
            k_max: 1,
            offset: 0,
            use_memory: true,
            use_fewshot: true,
            forced_mode: None,
            exemplars: Vec::new(),
            max_parse_retries: 2,
            max_text_chars: DEFAULT_MAX_TEXT_CHARS,
            shuffle: false,
            llm_settings: LlmSettings::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("k_min must be >= 1")]
    KMinTooSmall,
    #[error("k_max ({k_max}) must be >= k_min ({k_min})")]
    KRangeInverted { k_min: usize, k_max: usize },
    #[error("effective threshold k_max + offset ({0}) must be >= 1")]
    ThresholdTooSmall(i64),
}

impl RunConfig {
    pub fn with_k_range(k_min: usize, k_max: usize) -> Self {
        Self { k_min, k_max, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.k_min < 1 {
            return Err(ConfigError::KMinTooSmall);
        }
        if self.k_max < self.k_min {
            return Err(ConfigError::KRangeInverted { k_min: self.k_min, k_max: self.k_max });
        }
        let threshold = self.k_max as i64 + self.offset;
        if threshold < 1 {
            return Err(ConfigError::ThresholdTooSmall(threshold));
        }
        Ok(())
    }

    /// The memory size at which the controller switches to Strict mode.
    pub fn threshold(&self) -> usize {
        (self.k_max as i64 + self.offset).max(1) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_strips_quotes() {
        assert_eq!(normalize_label("\"Arts\"").unwrap().as_str(), "Arts");
        assert_eq!(normalize_label("'Arts'").unwrap().as_str(), "Arts");
    }

    #[test]
    fn normalize_trims() {
        assert_eq!(normalize_label("  alarm_set ").unwrap().as_str(), "alarm_set");
    }

    #[test]
    fn normalize_collapses_whitespace() {
        assert_eq!(normalize_label("a  b\t c").unwrap().as_str(), "a b c");
    }

    #[test]
    fn normalize_rejects_empty() {
        assert_eq!(normalize_label("  \"\"  "), Err(ModelError::EmptyLabel));
        assert_eq!(normalize_label(""), Err(ModelError::EmptyLabel));
    }

    #[test]
    fn label_equality_is_case_insensitive() {
        let a = normalize_label("ML").unwrap();
        let b = normalize_label("ml").unwrap();
        assert_eq!(a, b);
        // Display keeps original casing.
        assert_eq!(a.as_str(), "ML");
        assert_eq!(b.as_str(), "ml");
    }

    #[test]
    fn memory_dedupes_case_insensitively() {
        let mut m = MemoryState::new();
        assert!(m.insert(normalize_label("Arts").unwrap()));
        assert!(!m.insert(normalize_label("arts").unwrap()));
        assert_eq!(m.len(), 1);
        assert_eq!(m.canonical(&normalize_label("ARTS").unwrap()).unwrap().as_str(), "Arts");
    }

    #[test]
    fn memory_version_increases_on_every_mutation() {
        let mut m = MemoryState::new();
        let v0 = m.version();
        m.insert(normalize_label("A").unwrap());
        let v1 = m.version();
        m.insert(normalize_label("a").unwrap()); // no-op insert still mutates version
        let v2 = m.version();
        assert!(v1 > v0 && v2 > v1);
    }

    #[test]
    fn log_rejects_duplicate_document() {
        let mut log = AssignmentLog::new();
        let l = normalize_label("A").unwrap();
        log.push("d1", l.clone(), 1).unwrap();
        assert_eq!(log.push("d1", l, 2), Err(ModelError::DuplicateDocument("d1".into())));
    }

    #[test]
    fn config_threshold_validation() {
        let mut c = RunConfig::with_k_range(1, 5);
        c.offset = -5;
        assert_eq!(c.validate(), Err(ConfigError::ThresholdTooSmall(0)));
        c.offset = -4;
        assert!(c.validate().is_ok());
        assert_eq!(c.threshold(), 1);
    }

    #[test]
    fn document_requires_text() {
        assert_eq!(Document::new("d", "  ").unwrap_err(), ModelError::EmptyText);
    }
}
