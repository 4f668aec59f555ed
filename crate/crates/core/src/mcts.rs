//! UCT Monte Carlo tree search over the effort-allocation MDP.
//!
//! Chance outcomes are sampled during descent and children are keyed by the
//! resulting state under each action edge. Rollouts pick uniformly among
//! available skeletons. The search returns the most visited root action.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mdp::{Kernel, MdpState, Terminal};
use crate::model::ProblemInstance;
use crate::policies::{Memory, Policy, PolicyDecision};

pub const DEFAULT_EXPLORATION: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Budget {
    Iterations(u64),
    WallTime(Duration),
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Budget::Iterations(n) => write!(f, "{n}"),
            Budget::WallTime(d) => write!(f, "{}ms", d.as_millis()),
        }
    }
}

impl FromStr for Budget {
    type Err = Error;

    /// `10000` or `10000it` for iterations, `50ms` for wall time.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("invalid search budget `{s}`"));
        if let Some(ms) = s.strip_suffix("ms") {
            return Ok(Budget::WallTime(Duration::from_millis(ms.parse().map_err(|_| bad())?)));
        }
        let n = s.strip_suffix("it").unwrap_or(s);
        let n: f64 = n.parse().map_err(|_| bad())?;
        if !(n >= 0.0 && n.fract() == 0.0) {
            return Err(bad());
        }
        Ok(Budget::Iterations(n as u64))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MctsConfig {
    pub budget: Budget,
    /// Exploration constant `C`.
    pub c: f64,
    pub seed: u64,
    /// Reuse decisions for states already searched. The policy is a
    /// deterministic function of the state either way.
    pub cache: bool,
}

impl Default for MctsConfig {
    fn default() -> Self {
        Self { budget: Budget::Iterations(10_000), c: DEFAULT_EXPLORATION, seed: 0, cache: true }
    }
}

/// Statistics of one action edge.
#[derive(Clone, Debug, Default)]
pub struct ActionStats {
    pub visits: u64,
    /// Mean return `Q(s, a)`.
    pub mean: f64,
    /// Child node per sampled successor state.
    pub children: HashMap<MdpState, usize>,
}

#[derive(Clone, Debug)]
pub struct SearchNode {
    pub state: MdpState,
    pub visits: u64,
    /// Available skeletons, in index order.
    pub actions: Vec<usize>,
    pub stats: Vec<ActionStats>,
}

impl SearchNode {
    /// Skeletons with the same frontier action lead to identical
    /// transitions, so only the lowest-indexed one becomes an edge.
    pub fn new(kernel: &Kernel<f64>, state: MdpState) -> Self {
        let mut actions: Vec<usize> = Vec::new();
        if !state.is_terminal() {
            for k in kernel.available(&state) {
                let a = kernel.frontier(&state, k);
                if !actions.iter().any(|&m| kernel.frontier(&state, m) == a) {
                    actions.push(k);
                }
            }
        }
        let stats = vec![ActionStats::default(); actions.len()];
        Self { state, visits: 0, actions, stats }
    }

    /// Node with preset `(skeleton, Q, N)` statistics.
    pub fn with_stats(state: MdpState, stats: &[(usize, f64, u64)]) -> Self {
        let visits = stats.iter().map(|s| s.2).sum();
        Self {
            state,
            visits,
            actions: stats.iter().map(|s| s.0).collect(),
            stats: stats
                .iter()
                .map(|&(_, mean, visits)| ActionStats { visits, mean, children: HashMap::new() })
                .collect(),
        }
    }

    /// `Σ N(s,a) Q(s,a) / N(s)`.
    pub fn value(&self) -> f64 {
        if self.visits == 0 {
            return 0.0;
        }
        self.stats.iter().map(|s| s.visits as f64 * s.mean).sum::<f64>() / self.visits as f64
    }
}

fn select_position(node: &SearchNode, c: f64) -> Result<usize> {
    if node.state.is_terminal() || node.actions.is_empty() {
        return Err(Error::TerminalState);
    }
    if let Some(pos) = node.stats.iter().position(|s| s.visits == 0) {
        return Ok(pos);
    }
    let ln_n = (node.visits as f64).ln();
    let mut best = (0, f64::NEG_INFINITY);
    for (pos, s) in node.stats.iter().enumerate() {
        let score = s.mean + c * (ln_n / s.visits as f64).sqrt();
        if score > best.1 {
            best = (pos, score);
        }
    }
    Ok(best.0)
}

/// UCT choice `argmax Q(s,a) + C sqrt(ln N(s) / N(s,a))`; unvisited actions
/// come first in index order.
pub fn uct_select(node: &SearchNode, c: f64) -> Result<usize> {
    Ok(node.actions[select_position(node, c)?])
}

#[derive(Clone, Debug, PartialEq)]
pub struct EdgeSummary {
    pub skeleton: usize,
    pub visits: u64,
    pub mean: f64,
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub decision: PolicyDecision,
    pub iterations: u64,
    pub root_visits: u64,
    pub root_value: f64,
    pub edges: Vec<EdgeSummary>,
    pub nodes: usize,
}

fn terminal_value(state: &MdpState) -> Option<f64> {
    match state.terminal {
        Some(Terminal::Success) => Some(1.0),
        Some(Terminal::Failure) => Some(0.0),
        None => None,
    }
}

fn rollout<R: Rng>(kernel: &Kernel<f64>, mut state: MdpState, rng: &mut R) -> f64 {
    loop {
        if let Some(v) = terminal_value(&state) {
            return v;
        }
        let avail = kernel.available(&state);
        let k = avail[rng.gen_range(0..avail.len())];
        let outcome = kernel.sample_outcome(&state, k, rng);
        state = kernel.apply(&state, k, outcome);
    }
}

/// Runs UCT from `root` until the budget is spent.
pub fn mcts_search(kernel: &Kernel<f64>, root: &MdpState, budget: Budget, c: f64, seed: u64) -> Result<SearchResult> {
    if root.is_terminal() {
        return Err(Error::TerminalState);
    }
    match budget {
        Budget::Iterations(0) => return Err(Error::ZeroBudget),
        Budget::WallTime(d) if d.is_zero() => return Err(Error::ZeroBudget),
        _ => {}
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes = vec![SearchNode::new(kernel, root.clone())];
    let start = Instant::now();
    let mut iterations = 0u64;
    let mut path: Vec<(usize, usize)> = Vec::new();
    loop {
        let done = match budget {
            Budget::Iterations(n) => iterations >= n,
            Budget::WallTime(d) => iterations > 0 && start.elapsed() >= d,
        };
        if done {
            break;
        }
        path.clear();
        let mut current = 0;
        let value = loop {
            if let Some(v) = terminal_value(&nodes[current].state) {
                break v;
            }
            let pos = select_position(&nodes[current], c)?;
            let k = nodes[current].actions[pos];
            let outcome = kernel.sample_outcome(&nodes[current].state, k, &mut rng);
            let next = kernel.apply(&nodes[current].state, k, outcome);
            path.push((current, pos));
            if let Some(&child) = nodes[current].stats[pos].children.get(&next) {
                current = child;
                continue;
            }
            let id = nodes.len();
            nodes[current].stats[pos].children.insert(next.clone(), id);
            nodes.push(SearchNode::new(kernel, next.clone()));
            break rollout(kernel, next, &mut rng);
        };
        for &(n, pos) in &path {
            let node = &mut nodes[n];
            node.visits += 1;
            let s = &mut node.stats[pos];
            s.visits += 1;
            s.mean += (value - s.mean) / s.visits as f64;
        }
        iterations += 1;
    }
    let root_node = &nodes[0];
    let mut best = 0;
    for (pos, s) in root_node.stats.iter().enumerate() {
        if s.visits > root_node.stats[best].visits {
            best = pos;
        }
    }
    Ok(SearchResult {
        decision: PolicyDecision::new(root_node.actions[best]),
        iterations,
        root_visits: root_node.visits,
        root_value: root_node.value(),
        edges: root_node
            .actions
            .iter()
            .zip(&root_node.stats)
            .map(|(&skeleton, s)| EdgeSummary { skeleton, visits: s.visits, mean: s.mean })
            .collect(),
        nodes: nodes.len(),
    })
}

fn mix(seed: u64, fingerprint: u64) -> u64 {
    let mut z = seed ^ fingerprint.rotate_left(17);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Runs a fresh search at every decision. Each search is seeded from the
/// configured seed and the state, so decisions depend only on the state.
pub struct MctsPolicy {
    kernel: Kernel<f64>,
    config: MctsConfig,
    cache: Mutex<HashMap<MdpState, usize>>,
}

impl MctsPolicy {
    pub fn new(inst: &ProblemInstance, config: MctsConfig) -> Result<Self> {
        match config.budget {
            Budget::Iterations(0) => return Err(Error::ZeroBudget),
            Budget::WallTime(d) if d.is_zero() => return Err(Error::ZeroBudget),
            _ => {}
        }
        Ok(Self { kernel: Kernel::new(inst)?, config, cache: Mutex::new(HashMap::new()) })
    }

    pub fn config(&self) -> &MctsConfig {
        &self.config
    }

    /// Full search result for `state`, bypassing the cache.
    pub fn search(&self, state: &MdpState) -> Result<SearchResult> {
        let key = state.canonical();
        let seed = mix(self.config.seed, key.fingerprint());
        mcts_search(&self.kernel, &key, self.config.budget, self.config.c, seed)
    }
}

impl Policy for MctsPolicy {
    fn name(&self) -> String {
        format!("mcts@{}", self.config.budget)
    }

    fn decide(&self, state: &MdpState, _memory: &mut Memory) -> Result<Option<PolicyDecision>> {
        if state.is_terminal() {
            return Ok(None);
        }
        let key = state.canonical();
        if self.config.cache {
            if let Some(&k) = self.cache.lock().expect("cache lock").get(&key) {
                return Ok(Some(PolicyDecision::new(k)));
            }
        }
        let k = self.search(state)?.decision.skeleton;
        if self.config.cache {
            self.cache.lock().expect("cache lock").insert(key, k);
        }
        Ok(Some(PolicyDecision::new(k)))
    }
}
