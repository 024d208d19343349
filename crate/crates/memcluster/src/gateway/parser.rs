//! Strict parser for the reply grammar: exactly one primary line
//! (`ASSIGNED_LABEL:` or `NEW_LABEL:`), optionally one `MERGE_SUGGESTION:`
//! line. Tolerant of surrounding prose and markdown fences.

use regex::Regex;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;
use thiserror::Error;

use crate::model::{normalize_label, Label, MergeSuggestion};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResponseKind {
    Assigned,
    NewLabel,
}

/// Structured decoding of one LLM reply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedResponse {
    pub kind: ResponseKind,
    pub label: Label,
    pub merge: Option<MergeSuggestion>,
    pub raw: String,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("reply contains no ASSIGNED_LABEL or NEW_LABEL line")]
    NoPrimaryLine,
    #[error("reply contains {0} primary lines, expected exactly one")]
    MultiplePrimaryLines(usize),
    #[error("primary line carries an empty label")]
    EmptyLabel,
}

const ASSIGNED_MARKER: &str = "ASSIGNED_LABEL:";
const NEW_MARKER: &str = "NEW_LABEL:";
const MERGE_MARKER: &str = "MERGE_SUGGESTION:";

fn merge_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"MERGE:\s*\[([^\]]*)\]\s*INTO:\s*\[([^\]]*)\]").expect("valid regex")
    })
}

fn parse_merge_line(line: &str) -> Option<MergeSuggestion> {
    let caps = merge_regex().captures(line)?;
    let old_labels: Vec<Label> = caps[1]
        .split(',')
        .filter_map(|item| normalize_label(item).ok())
        .collect();
    let new_label = normalize_label(&caps[2]).ok()?;
    if old_labels.is_empty() {
        return None;
    }
    Some(MergeSuggestion::new(old_labels, new_label))
}

pub fn parse_response(raw: &str) -> Result<ParsedResponse, ParseError> {
    let mut primaries: Vec<(ResponseKind, String)> = Vec::new();
    let mut merge: Option<MergeSuggestion> = None;
    let mut merge_lines_seen = 0usize;

    for line in raw.lines() {
        let line = line.trim();
        if line.starts_with("```") {
            continue;
        }
        if let Some(pos) = line.find(MERGE_MARKER) {
            merge_lines_seen += 1;
            if merge_lines_seen == 1 {
                merge = parse_merge_line(&line[pos..]);
                if merge.is_none() {
                    log::warn!("malformed merge line dropped: {line}");
                }
            }
            continue;
        }
        if let Some(pos) = line.find(ASSIGNED_MARKER) {
            primaries.push((ResponseKind::Assigned, line[pos + ASSIGNED_MARKER.len()..].to_string()));
        } else if let Some(pos) = line.find(NEW_MARKER) {
            primaries.push((ResponseKind::NewLabel, line[pos + NEW_MARKER.len()..].to_string()));
        }
    }

    if merge_lines_seen > 1 {
        log::warn!("{} extra merge line(s) ignored, only the first is honored", merge_lines_seen - 1);
    }

    match primaries.len() {
        0 => return Err(ParseError::NoPrimaryLine),
        1 => {}
        n => return Err(ParseError::MultiplePrimaryLines(n)),
    }

    let (kind, rest) = primaries.into_iter().next().expect("checked above");
    let label = normalize_label(&rest).map_err(|_| ParseError::EmptyLabel)?;
    Ok(ParsedResponse { kind, label, merge, raw: raw.to_string() })
}

/// Canonical text form of a parsed response; parsing it yields the input back.
pub fn render_canonical(response: &ParsedResponse) -> String {
    let mut out = match response.kind {
        ResponseKind::Assigned => format!("ASSIGNED_LABEL: \"{}\"", response.label),
        ResponseKind::NewLabel => format!("NEW_LABEL: \"{}\"", response.label),
    };
    if let Some(merge) = &response.merge {
        let old: Vec<String> = merge.old_labels.iter().map(|l| format!("\"{l}\"")).collect();
        out.push_str(&format!(
            "\nMERGE_SUGGESTION: MERGE: [{}] INTO: [\"{}\"]",
            old.join(", "),
            merge.new_label
        ));
    }
    out
}
