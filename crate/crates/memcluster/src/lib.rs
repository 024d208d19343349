//! Single-pass, stateful text clustering with an LLM as the assignment
//! agent. A dynamic label memory carries state across steps, a dual-prompt
//! controller steers cluster granularity toward a target range, and every
//! step is persisted to an append-only event log for audit and resume.

pub mod gateway;
pub mod granularity;
pub mod memory;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod prompt;
