use thiserror::Error;

use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution `{name}`: {reason}")]
    InvalidDistribution { name: String, reason: String },

    #[error("cannot condition on {elapsed} elapsed steps: completion is already certain")]
    ImpossibleConditioning { elapsed: u32 },

    #[error("estimation needs at least one sample or a positive smoothing weight")]
    EmptyEstimate,

    #[error("invalid sample {0}: durations start at 1")]
    InvalidSample(u32),

    #[error("{what} index {index} out of range (limit {limit})")]
    OutOfRange { what: &'static str, index: usize, limit: usize },

    #[error("impossible state: planning already certain after {elapsed} steps")]
    ImpossibleState { elapsed: u32 },

    #[error("skeleton {skeleton} is not available in this state")]
    UnavailableAction { skeleton: usize },

    #[error("state is terminal")]
    TerminalState,

    #[error("state space too large: explored {explored} states, cap is {cap} (upper bound estimate {estimate})")]
    Capacity { explored: usize, cap: usize, estimate: String },

    #[error("DP policies require tree-structured action sharing")]
    UnsupportedStructure,

    #[error("search budget must be positive")]
    ZeroBudget,

    #[error("policy selected unavailable skeleton {skeleton} at step {step}")]
    Protocol { step: u32, skeleton: usize },

    #[error("subset weight {weight} exceeds capacity {capacity}")]
    InfeasibleSubset { weight: u64, capacity: u32 },

    #[error("invalid knapsack instance: {0}")]
    InvalidKnapsack(String),

    #[error("unknown instance `{0}`")]
    UnknownInstance(String),

    #[error("unknown policy `{0}`")]
    UnknownPolicy(String),

    #[error("invalid instance:\n{}", format_violations(.0))]
    InvalidInstance(Vec<Violation>),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| format!("  - {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}
