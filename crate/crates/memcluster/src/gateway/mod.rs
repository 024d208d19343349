//! The LLM boundary: a chat-completion client abstraction, the reply-grammar
//! parser, retry/fallback policy, and a deterministic scripted oracle.

mod http;
mod oracle;
mod parser;

pub use http::HttpChatClient;
pub use oracle::{oracle_complete, MergeEvent, OracleError, OracleScript, ScriptedOracle};
pub use parser::{parse_response, render_canonical, ParseError, ParsedResponse, ResponseKind};

use thiserror::Error;

use crate::model::{normalize_label, Document, RunConfig};
use crate::prompt::PromptPair;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("authentication rejected by provider")]
    Auth,
    #[error("provider error (status {status}): {body}")]
    Provider { status: u16, body: String },
    #[error("oracle: {0}")]
    Oracle(#[from] OracleError),
}

/// Per-call bookkeeping the pipeline needs for step numbering and for
/// letting scripted test doubles stay deterministic across resume.
#[derive(Debug, Clone)]
pub struct CallContext {
    pub step: usize,
    pub doc_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct CallMeta {
    pub request_digest: String,
    pub response_digest: String,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
    pub transport_retries: u32,
}

#[derive(Debug, Clone)]
pub struct Completion {
    pub text: String,
    pub meta: Option<CallMeta>,
}

/// One chat completion per document; implementations are the wire client and
/// the scripted oracle.
pub trait ChatClient {
    fn complete(
        &mut self,
        system_text: &str,
        user_text: &str,
        ctx: &CallContext,
    ) -> Result<Completion, GatewayError>;
}

const FORMAT_REMINDER: &str = "\nREMINDER: Reply with exactly ONE 'ASSIGNED_LABEL:' or 'NEW_LABEL:' line, and at most one 'MERGE_SUGGESTION:' line.";

/// Number of leading text tokens used for the deterministic fallback label.
const FALLBACK_TOKENS: usize = 6;

pub fn fallback_label(doc: &Document) -> ParsedResponse {
    let tokens: Vec<&str> = doc.text.split_whitespace().take(FALLBACK_TOKENS).collect();
    let raw = format!("auto: {}", tokens.join(" "));
    let label = normalize_label(&raw).unwrap_or_else(|_| normalize_label("auto: empty").unwrap());
    ParsedResponse { kind: ResponseKind::NewLabel, label, merge: None, raw: String::new() }
}

#[derive(Debug, Clone)]
pub struct ClassifyResult {
    pub response: ParsedResponse,
    pub parse_retries: u32,
    pub meta: Option<CallMeta>,
    pub used_fallback: bool,
}

/// Calls the client and parses the reply, re-sending with a format reminder
/// on parse failures. Exhausted retries fall back to a deterministic label so
/// every document is guaranteed an assignment.
pub fn classify_with_retry(
    doc: &Document,
    prompt: &PromptPair,
    client: &mut dyn ChatClient,
    config: &RunConfig,
    ctx: &CallContext,
) -> Result<ClassifyResult, GatewayError> {
    let mut user_text = prompt.user_text.clone();
    let mut meta = None;
    for attempt in 0..=config.max_parse_retries {
        let completion = client.complete(&prompt.system_text, &user_text, ctx)?;
        meta = completion.meta.clone();
        match parse_response(&completion.text) {
            Ok(response) => {
                return Ok(ClassifyResult {
                    response,
                    parse_retries: attempt,
                    meta,
                    used_fallback: false,
                })
            }
            Err(err) => {
                log::warn!("step {}: malformed reply ({err}); retrying", ctx.step);
                user_text.push_str(FORMAT_REMINDER);
            }
        }
    }
    log::warn!("step {}: all parse retries exhausted, using fallback label", ctx.step);
    Ok(ClassifyResult {
        response: fallback_label(doc),
        parse_retries: config.max_parse_retries,
        meta,
        used_fallback: true,
    })
}
