//! Allocation policies behind a common decision contract.
//!
//! A policy sees the current [`MdpState`] plus a small per-episode
//! [`Memory`] and names the skeleton that receives the next step. Returning
//! `None` abandons the episode, which then counts as a failure.

mod baselines;
mod dp;
mod optimal;

use std::fmt;
use std::str::FromStr;

pub use baselines::{greedy_scores, GreedyPolicy, RoundRobinPolicy};
pub use dp::{dp_policy, solve_dp, DpModel, DpPolicy, DpRerunPolicy, DpSolver, DpTable};
pub use optimal::ExactPolicy;

use crate::error::{Error, Result};
use crate::mcts::{MctsConfig, MctsPolicy};
use crate::mdp::MdpState;
use crate::model::ProblemInstance;

/// The skeleton granted the next unit of refinement effort.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PolicyDecision {
    pub skeleton: usize,
}

impl PolicyDecision {
    pub fn new(skeleton: usize) -> Self {
        Self { skeleton }
    }
}

/// Per-episode memory carried between decisions. `anchor` holds a skeleton
/// index and a refinement count whose meaning is policy-specific.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Memory {
    pub anchor: Option<(usize, u32)>,
}

pub trait Policy: Send + Sync {
    fn name(&self) -> String;

    fn decide(&self, state: &MdpState, memory: &mut Memory) -> Result<Option<PolicyDecision>>;
}

/// Policy selector used by the CLI and the benchmark harness.
#[derive(Clone, Debug, PartialEq)]
pub enum PolicyKind {
    Exact,
    Dp,
    DpRerun,
    Greedy { static_scores: bool },
    RoundRobin,
    Mcts(MctsConfig),
}

impl PolicyKind {
    pub fn build(&self, inst: &ProblemInstance) -> Result<Box<dyn Policy>> {
        Ok(match self {
            PolicyKind::Exact => Box::new(ExactPolicy::new(inst)?),
            PolicyKind::Dp => Box::new(DpPolicy::new(inst)?),
            PolicyKind::DpRerun => Box::new(DpRerunPolicy::new(inst)?),
            PolicyKind::Greedy { static_scores } => Box::new(GreedyPolicy::new(inst, *static_scores)?),
            PolicyKind::RoundRobin => Box::new(RoundRobinPolicy::new(inst)?),
            PolicyKind::Mcts(cfg) => Box::new(MctsPolicy::new(inst, cfg.clone())?),
        })
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyKind::Exact => f.write_str("exact"),
            PolicyKind::Dp => f.write_str("dp"),
            PolicyKind::DpRerun => f.write_str("dp-rerun"),
            PolicyKind::Greedy { static_scores: false } => f.write_str("greedy"),
            PolicyKind::Greedy { static_scores: true } => f.write_str("greedy-static"),
            PolicyKind::RoundRobin => f.write_str("round-robin"),
            PolicyKind::Mcts(cfg) => write!(f, "mcts@{}", cfg.budget),
        }
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "exact" => PolicyKind::Exact,
            "dp" => PolicyKind::Dp,
            "dp-rerun" | "dp_rerun" => PolicyKind::DpRerun,
            "greedy" => PolicyKind::Greedy { static_scores: false },
            "greedy-static" => PolicyKind::Greedy { static_scores: true },
            "round-robin" | "rr" => PolicyKind::RoundRobin,
            "mcts" => PolicyKind::Mcts(MctsConfig::default()),
            other => return Err(Error::UnknownPolicy(other.to_string())),
        })
    }
}

/// Index of the largest score; ties go to the earliest entry.
pub(crate) fn argmax_by<T>(items: impl IntoIterator<Item = (usize, T)>, gt: impl Fn(&T, &T) -> bool) -> Option<(usize, T)> {
    let mut best: Option<(usize, T)> = None;
    for (k, v) in items {
        if best.as_ref().is_none_or(|(_, b)| gt(&v, b)) {
            best = Some((k, v));
        }
    }
    best
}
