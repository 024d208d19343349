//! Relaxed/strict mode selection against the (offset-shifted) upper bound,
//! and the cluster-range phrase injected into the prompt templates.

use serde::{Deserialize, Serialize};

use crate::model::{Mode, RunConfig};

/// The per-step mode decision, logged for audit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeDecision {
    pub mode: Mode,
    pub memory_size: usize,
    pub threshold: usize,
}

/// Strict iff the live label count has reached k_max + offset; a forced
/// mode (single-prompt ablations) overrides the predicate entirely.
pub fn select_mode(memory_size: usize, config: &RunConfig) -> ModeDecision {
    let threshold = config.threshold();
    let mode = match config.forced_mode {
        Some(forced) => forced,
        None if memory_size >= threshold => Mode::Strict,
        None => Mode::Relaxed,
    };
    ModeDecision { mode, memory_size, threshold }
}

pub fn range_description(k_min: usize, k_max: usize) -> String {
    debug_assert!(k_min <= k_max);
    format!("within the range of {k_min} to {k_max}")
}
