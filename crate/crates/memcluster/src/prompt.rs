//! Rendering of the unified prompt templates. The golden template files live
//! under `templates/` and are compiled in verbatim; rendering only touches
//! the substitution sites so tests can diff output against the originals.

use crate::granularity::range_description;
use crate::model::{Document, Exemplar, Label, Mode, RunConfig};

pub const SYSTEM_TEMPLATE: &str = include_str!("../templates/system.txt");
pub const USER_TEMPLATE: &str = include_str!("../templates/user.txt");
pub const GUIDELINE_RELAXED: &str = include_str!("../templates/guideline_relaxed.txt");
pub const GUIDELINE_STRICT: &str = include_str!("../templates/guideline_strict.txt");
pub const CONSTRAINT_RELAXED: &str = include_str!("../templates/constraint_relaxed.txt");
pub const CONSTRAINT_STRICT: &str = include_str!("../templates/constraint_strict.txt");

const KNOWN_LABELS_SITE: &str = r#"Known labels: ["label_1", "label_2", ...]"#;
const EXAMPLES_SITE: &str = "Examples:\nInput: \"Example text 1\" -> Output: ASSIGNED_LABEL: \"label_A\"\nInput: \"Example text 2\" -> Output: NEW_LABEL: \"label_B\"\n\n";
const INPUT_SITE: &str = r#"Input to process: "text_to_cluster""#;
const GUIDELINE_SITE: &str = "[SYSTEM_GUIDELINE]";
const CONSTRAINT_SITE: &str = "[USER_CONSTRAINT]";

/// One rendered prompt, ready for the chat endpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptPair {
    pub system_text: String,
    pub user_text: String,
    pub mode: Mode,
    pub injected_labels: Vec<Label>,
}

pub fn build_system_prompt(mode: Mode, config: &RunConfig) -> String {
    let guideline = match mode {
        Mode::Relaxed => GUIDELINE_RELAXED,
        Mode::Strict => GUIDELINE_STRICT,
    };
    let guideline =
        guideline.trim_end().replace("{range_desc}", &range_description(config.k_min, config.k_max));
    SYSTEM_TEMPLATE.replace(GUIDELINE_SITE, &guideline)
}

/// Serializes memory labels as the bracketed, double-quoted, insertion-ordered
/// list shown on the Known-labels line. Empty memory renders `[]`.
pub fn known_labels_line(labels: &[Label]) -> String {
    let items: Vec<String> = labels.iter().map(|l| format!("\"{}\"", l.as_str())).collect();
    format!("[{}]", items.join(", "))
}

fn render_exemplar(e: &Exemplar) -> String {
    format!("Input: \"{}\" -> Output: {}", escape_text(&e.text), e.response)
}

fn escape_text(text: &str) -> String {
    text.replace('"', "\\\"")
}

fn truncate_text(text: &str, max_chars: usize) -> String {
    if text.chars().count() <= max_chars {
        return text.to_string();
    }
    let truncated: String = text.chars().take(max_chars).collect();
    format!("{truncated}...")
}

pub fn build_user_prompt(
    doc: &Document,
    memory_view: &[Label],
    mode: Mode,
    config: &RunConfig,
) -> String {
    let mut out = USER_TEMPLATE.replace(
        KNOWN_LABELS_SITE,
        &format!("Known labels: {}", known_labels_line(memory_view)),
    );

    if config.use_fewshot {
        // The template's own two generic lines double as the default exemplars.
        if !config.exemplars.is_empty() {
            let lines: Vec<String> = config.exemplars.iter().map(render_exemplar).collect();
            out = out.replace(EXAMPLES_SITE, &format!("Examples:\n{}\n\n", lines.join("\n")));
        }
    } else {
        out = out.replace(EXAMPLES_SITE, "");
    }

    let text = escape_text(&truncate_text(&doc.text, config.max_text_chars));
    out = out.replace(INPUT_SITE, &format!("Input to process: \"{text}\""));

    let constraint = match mode {
        Mode::Relaxed => CONSTRAINT_RELAXED,
        Mode::Strict => CONSTRAINT_STRICT,
    };
    let constraint =
        constraint.trim_end().replace("{target_max_clusters}", &config.k_max.to_string());
    out.replace(CONSTRAINT_SITE, &constraint)
}

pub fn build_prompt_pair(
    doc: &Document,
    memory_view: &[Label],
    mode: Mode,
    config: &RunConfig,
) -> PromptPair {
    PromptPair {
        system_text: build_system_prompt(mode, config),
        user_text: build_user_prompt(doc, memory_view, mode, config),
        mode,
        injected_labels: memory_view.to_vec(),
    }
}
