//! Newline-delimited JSON corpus ingestion.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::model::Document;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
    #[error("line {line}: duplicate document id {id}")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: missing or empty text field")]
    MissingText { line: usize },
}

#[derive(Debug, Deserialize)]
struct RawLine {
    #[serde(default)]
    id: Option<String>,
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    label: Option<String>,
}

pub fn ingest_corpus(path: &Path) -> Result<Vec<Document>, CorpusError> {
    let file = std::fs::File::open(path)?;
    ingest_reader(file)
}

pub fn ingest_reader<R: Read>(reader: R) -> Result<Vec<Document>, CorpusError> {
    let mut docs = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawLine = serde_json::from_str(&line)
            .map_err(|source| CorpusError::Parse { line: line_no, source })?;
        let text = match raw.text {
            Some(t) if !t.trim().is_empty() => t,
            _ => return Err(CorpusError::MissingText { line: line_no }),
        };
        let id = raw.id.unwrap_or_else(|| format!("{:06}", docs.len()));
        if !seen.insert(id.clone()) {
            return Err(CorpusError::DuplicateId { line: line_no, id });
        }
        let mut doc = Document::new(id, text).map_err(|_| CorpusError::MissingText { line: line_no })?;
        doc.gold_label = raw.label;
        docs.push(doc);
    }
    Ok(docs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maps_fields_and_autogenerates_ids() {
        let input = "{\"text\":\"set alarm\",\"label\":\"alarm_set\"}\n";
        let docs = ingest_reader(input.as_bytes()).unwrap();
        assert_eq!(docs.len(), 1);
        assert_eq!(docs[0].id, "000000");
        assert_eq!(docs[0].text, "set alarm");
        assert_eq!(docs[0].gold_label.as_deref(), Some("alarm_set"));
    }

    #[test]
    fn rejects_duplicate_explicit_ids() {
        let input = "{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"a\",\"text\":\"y\"}\n";
        assert!(matches!(
            ingest_reader(input.as_bytes()),
            Err(CorpusError::DuplicateId { line: 2, .. })
        ));
    }

    #[test]
    fn rejects_missing_text() {
        let input = "{\"id\":\"a\"}\n";
        assert!(matches!(ingest_reader(input.as_bytes()), Err(CorpusError::MissingText { line: 1 })));
    }

    #[test]
    fn reports_parse_error_line_number() {
        let input = "{\"text\":\"ok\"}\nnot json\n";
        assert!(matches!(ingest_reader(input.as_bytes()), Err(CorpusError::Parse { line: 2, .. })));
    }

    #[test]
    fn empty_input_yields_empty_corpus() {
        assert!(ingest_reader("".as_bytes()).unwrap().is_empty());
    }
}
