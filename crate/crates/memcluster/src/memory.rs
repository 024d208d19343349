//! The stateful transition engine: reuse/create, merge/refine, and the
//! retroactive rewrite of historical assignments.

use serde::{Deserialize, Serialize};

use crate::gateway::ParsedResponse;
use crate::model::{
    AssignmentLog, Document, Label, MemoryState, MergeSuggestion, ModelError, Partition,
};

/// Audit record of one engine step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub assigned: Label,
    pub created_new: bool,
    /// The merge as applied: only the labels that were actually in memory.
    pub merge_applied: Option<MergeSuggestion>,
    pub rewrites: usize,
}

/// Records the assignment and grows memory iff the label was absent.
pub fn apply_assignment(
    memory: &mut MemoryState,
    log: &mut AssignmentLog,
    doc_id: &str,
    label: &Label,
    step: usize,
) -> Result<bool, ModelError> {
    // Reuse the stored casing when an equal label already exists.
    let (canonical, created_new) = match memory.canonical(label) {
        Some(existing) => (existing.clone(), false),
        None => (label.clone(), true),
    };
    log.push(doc_id, canonical.clone(), step)?;
    if created_new {
        memory.insert(canonical);
    }
    Ok(created_new)
}

/// Applies a merge suggestion. Members absent from memory are dropped; if
/// nothing remains the merge is skipped entirely so the label set stays in
/// sync with the live log. Returns (applied, rewrites).
pub fn apply_merge(
    memory: &mut MemoryState,
    log: &mut AssignmentLog,
    suggestion: &MergeSuggestion,
) -> (bool, usize) {
    let effective: Vec<Label> = suggestion
        .old_labels
        .iter()
        .filter_map(|l| memory.canonical(l).cloned())
        .collect();
    if effective.len() < suggestion.old_labels.len() {
        log::warn!(
            "merge suggestion references {} unknown label(s); dropping them",
            suggestion.old_labels.len() - effective.len()
        );
    }
    if effective.is_empty() {
        return (false, 0);
    }
    memory.replace(&effective, suggestion.new_label.clone());
    let rewrites = log.rewrite(&effective, &suggestion.new_label);
    (true, rewrites)
}

/// One full engine step: assignment first, then the optional merge, so a
/// merge can immediately absorb the just-assigned label.
pub fn core_step(
    memory: &mut MemoryState,
    log: &mut AssignmentLog,
    doc: &Document,
    response: &ParsedResponse,
    step: usize,
) -> Result<StepOutcome, ModelError> {
    let created_new = apply_assignment(memory, log, &doc.id, &response.label, step)?;
    let mut merge_applied = None;
    let mut rewrites = 0;
    if let Some(suggestion) = &response.merge {
        let effective: Vec<Label> = suggestion
            .old_labels
            .iter()
            .filter_map(|l| memory.canonical(l).cloned())
            .collect();
        let (applied, n) = apply_merge(memory, log, suggestion);
        if applied {
            merge_applied = Some(MergeSuggestion::new(effective, suggestion.new_label.clone()));
            rewrites = n;
        }
    }
    Ok(StepOutcome { assigned: response.label.clone(), created_new, merge_applied, rewrites })
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("assignment log is empty")]
pub struct EmptyLog;

/// Groups live log entries by label into the final partition.
pub fn derive_partition(log: &AssignmentLog) -> Result<Partition, EmptyLog> {
    if log.is_empty() {
        return Err(EmptyLog);
    }
    let mut partition = Partition::default();
    for entry in log.entries() {
        partition
            .clusters
            .entry(entry.label.clone())
            .or_default()
            .insert(entry.doc_id.clone());
    }
    Ok(partition)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::ResponseKind;
    use crate::model::normalize_label;

    fn label(s: &str) -> Label {
        normalize_label(s).unwrap()
    }

    fn doc(id: &str) -> Document {
        Document::new(id, format!("text {id}")).unwrap()
    }

    #[test]
    fn assignment_creates_absent_label() {
        let mut mem = MemoryState::new();
        mem.insert(label("Arts"));
        let mut log = AssignmentLog::new();
        let created = apply_assignment(&mut mem, &mut log, "d1", &label("Science"), 1).unwrap();
        assert!(created);
        assert_eq!(mem.to_vec(), vec![label("Arts"), label("Science")]);
    }

    #[test]
    fn assignment_reuses_existing_label() {
        let mut mem = MemoryState::new();
        mem.insert(label("Arts"));
        let mut log = AssignmentLog::new();
        let created = apply_assignment(&mut mem, &mut log, "d1", &label("Arts"), 1).unwrap();
        assert!(!created);
        assert_eq!(mem.len(), 1);
    }

    #[test]
    fn assignment_on_empty_memory() {
        let mut mem = MemoryState::new();
        let mut log = AssignmentLog::new();
        let created = apply_assignment(&mut mem, &mut log, "d1", &label("Weather"), 1).unwrap();
        assert!(created);
        assert_eq!(mem.to_vec(), vec![label("Weather")]);
    }

    #[test]
    fn merge_rewrites_history() {
        let mut mem = MemoryState::new();
        for l in ["ML", "DL", "NLP"] {
            mem.insert(label(l));
        }
        let mut log = AssignmentLog::new();
        for (i, l) in ["ML", "ML", "ML", "DL", "DL"].iter().enumerate() {
            log.push(&format!("d{i}"), label(l), i + 1).unwrap();
        }
        let s = MergeSuggestion::new(vec![label("ML"), label("DL")], label("AI"));
        let (applied, rewrites) = apply_merge(&mut mem, &mut log, &s);
        assert!(applied);
        assert_eq!(rewrites, 5);
        assert_eq!(mem.to_vec(), vec![label("NLP"), label("AI")]);
        assert!(log.entries().iter().all(|e| e.label == label("AI")));
    }

    #[test]
    fn merge_with_unknown_labels_is_skipped() {
        let mut mem = MemoryState::new();
        mem.insert(label("A"));
        let mut log = AssignmentLog::new();
        log.push("d1", label("A"), 1).unwrap();
        let before = mem.clone();
        let s = MergeSuggestion::new(vec![label("Ghost")], label("X"));
        let (applied, rewrites) = apply_merge(&mut mem, &mut log, &s);
        assert!(!applied);
        assert_eq!(rewrites, 0);
        assert_eq!(mem.to_vec(), before.to_vec());
    }

    #[test]
    fn self_absorbing_merge() {
        let mut mem = MemoryState::new();
        mem.insert(label("A"));
        mem.insert(label("B"));
        let mut log = AssignmentLog::new();
        log.push("d1", label("B"), 1).unwrap();
        let s = MergeSuggestion::new(vec![label("A"), label("B")], label("A"));
        let (applied, rewrites) = apply_merge(&mut mem, &mut log, &s);
        assert!(applied);
        assert_eq!(rewrites, 1);
        assert_eq!(mem.to_vec(), vec![label("A")]);
        assert_eq!(log.entries()[0].label, label("A"));
    }

    #[test]
    fn core_step_without_merge() {
        let mut mem = MemoryState::new();
        let mut log = AssignmentLog::new();
        let resp = ParsedResponse {
            kind: ResponseKind::Assigned,
            label: label("Arts"),
            merge: None,
            raw: String::new(),
        };
        let out = core_step(&mut mem, &mut log, &doc("d1"), &resp, 1).unwrap();
        assert!(out.created_new);
        assert!(out.merge_applied.is_none());
        assert_eq!(out.rewrites, 0);
    }

    #[test]
    fn core_step_with_merge_absorbing_assignment() {
        // Hand trace of the two-label state: assign "AI" then merge
        // {"ML","DL"} -> "AI"; final memory must be exactly {"AI"}.
        let mut mem = MemoryState::new();
        mem.insert(label("ML"));
        mem.insert(label("DL"));
        let mut log = AssignmentLog::new();
        log.push("m1", label("ML"), 1).unwrap();
        log.push("m2", label("DL"), 2).unwrap();
        let resp = ParsedResponse {
            kind: ResponseKind::NewLabel,
            label: label("AI"),
            merge: Some(MergeSuggestion::new(vec![label("ML"), label("DL")], label("AI"))),
            raw: String::new(),
        };
        let out = core_step(&mut mem, &mut log, &doc("d3"), &resp, 3).unwrap();
        assert!(out.created_new);
        assert_eq!(out.rewrites, 2);
        assert_eq!(mem.to_vec(), vec![label("AI")]);
        assert!(log.entries().iter().all(|e| e.label == label("AI")));
        assert_eq!(log.len(), 3);
    }

    #[test]
    fn core_step_rejects_duplicate_doc() {
        let mut mem = MemoryState::new();
        let mut log = AssignmentLog::new();
        let resp = ParsedResponse {
            kind: ResponseKind::Assigned,
            label: label("A"),
            merge: None,
            raw: String::new(),
        };
        core_step(&mut mem, &mut log, &doc("d1"), &resp, 1).unwrap();
        assert!(core_step(&mut mem, &mut log, &doc("d1"), &resp, 2).is_err());
    }

    #[test]
    fn idempotent_re_merge() {
        let mut mem = MemoryState::new();
        mem.insert(label("A"));
        mem.insert(label("B"));
        let mut log = AssignmentLog::new();
        log.push("d1", label("B"), 1).unwrap();
        let s = MergeSuggestion::new(vec![label("A"), label("B")], label("C"));
        apply_merge(&mut mem, &mut log, &s);
        let snapshot = (mem.to_vec(), log.entries().to_vec());
        let (applied, rewrites) = apply_merge(&mut mem, &mut log, &s);
        assert!(!applied);
        assert_eq!(rewrites, 0);
        assert_eq!((mem.to_vec(), log.entries().to_vec()), snapshot);
    }

    #[test]
    fn partition_groups_by_label() {
        let mut log = AssignmentLog::new();
        log.push("d1", label("A"), 1).unwrap();
        log.push("d2", label("A"), 2).unwrap();
        log.push("d3", label("B"), 3).unwrap();
        let p = derive_partition(&log).unwrap();
        assert_eq!(p.num_clusters(), 2);
        assert_eq!(p.clusters[&label("A")].len(), 2);
        assert_eq!(p.clusters[&label("B")].len(), 1);
    }

    #[test]
    fn partition_bounds() {
        let mut log = AssignmentLog::new();
        log.push("d1", label("only"), 1).unwrap();
        assert_eq!(derive_partition(&log).unwrap().num_clusters(), 1);

        let mut log = AssignmentLog::new();
        for i in 0..5 {
            log.push(&format!("d{i}"), label(&format!("l{i}")), i + 1).unwrap();
        }
        assert_eq!(derive_partition(&log).unwrap().num_clusters(), 5);

        assert_eq!(derive_partition(&AssignmentLog::new()), Err(EmptyLog));
    }
}
