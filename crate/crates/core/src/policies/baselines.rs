use crate::error::Result;
use crate::mdp::{Kernel, MdpState};
use crate::model::ProblemInstance;
use crate::policies::{Memory, Policy, PolicyDecision};
use crate::prob::Prob;

/// Picks the skeleton with the smallest expected remaining time: realised
/// execution so far plus mean planning and execution of every unrefined
/// action. The never mass counts as `D + 1` steps.
pub struct GreedyPolicy {
    kernel: Kernel<f64>,
    /// `plan_mean[a][pt]`: mean additional planning after `pt` failed steps.
    plan_mean: Vec<Vec<Option<f64>>>,
    exec_mean: Vec<f64>,
    static_scores: Option<Vec<f64>>,
}

impl GreedyPolicy {
    /// With `static_scores`, scores are computed once from the initial state
    /// and never updated.
    pub fn new(inst: &ProblemInstance, static_scores: bool) -> Result<Self> {
        let kernel = Kernel::<f64>::new(inst)?;
        let inst = kernel.instance();
        let sentinel = inst.deadline() + 1;
        let plan_mean = inst
            .catalog()
            .iter()
            .map(|a| {
                (0..inst.deadline())
                    .map(|pt| a.planning.condition_on_elapsed(pt).ok().map(|d| d.mean(sentinel).to_f64()))
                    .collect()
            })
            .collect();
        let exec_mean = inst.catalog().iter().map(|a| a.execution.mean(sentinel).to_f64()).collect();
        let mut policy = Self { kernel, plan_mean, exec_mean, static_scores: None };
        if static_scores {
            let root = policy.kernel.initial_state();
            let all = (0..policy.kernel.num_skeletons()).map(|k| policy.score(&root, k)).collect();
            policy.static_scores = Some(all);
        }
        Ok(policy)
    }

    /// Score of skeleton `k`, whether or not it is available.
    pub fn score(&self, state: &MdpState, k: usize) -> f64 {
        let p = &state.skeletons[k];
        let plan = &self.kernel.plans()[k];
        let mut total = p.exec_total as f64;
        for (j, &a) in plan.iter().enumerate().skip(p.refined as usize) {
            let pt = if j == p.refined as usize { p.planned } else { 0 };
            let plan_mean = self.plan_mean[a].get(pt as usize).copied().flatten().unwrap_or(f64::INFINITY);
            total += plan_mean + self.exec_mean[a];
        }
        total
    }

    /// Score of every available skeleton in `state`.
    pub fn scores(&self, state: &MdpState) -> Vec<(usize, f64)> {
        self.kernel
            .available(state)
            .into_iter()
            .map(|k| match &self.static_scores {
                Some(s) => (k, s[k]),
                None => (k, self.score(state, k)),
            })
            .collect()
    }
}

/// Greedy scores in `state` with recomputed conditioned means.
pub fn greedy_scores(inst: &ProblemInstance, state: &MdpState) -> Result<Vec<(usize, f64)>> {
    Ok(GreedyPolicy::new(inst, false)?.scores(state))
}

impl Policy for GreedyPolicy {
    fn name(&self) -> String {
        if self.static_scores.is_some() { "greedy-static".into() } else { "greedy".into() }
    }

    fn decide(&self, state: &MdpState, _memory: &mut Memory) -> Result<Option<PolicyDecision>> {
        let mut best: Option<(usize, f64)> = None;
        for (k, v) in self.scores(state) {
            if best.is_none_or(|(_, b)| b.definitely_gt(&v)) {
                best = Some((k, v));
            }
        }
        Ok(best.map(|(k, _)| PolicyDecision::new(k)))
    }
}

/// Cycles through the skeletons in index order, skipping unavailable ones.
pub struct RoundRobinPolicy {
    kernel: Kernel<f64>,
}

impl RoundRobinPolicy {
    pub fn new(inst: &ProblemInstance) -> Result<Self> {
        Ok(Self { kernel: Kernel::new(inst)? })
    }
}

impl Policy for RoundRobinPolicy {
    fn name(&self) -> String {
        "round-robin".into()
    }

    fn decide(&self, state: &MdpState, memory: &mut Memory) -> Result<Option<PolicyDecision>> {
        let n = self.kernel.num_skeletons();
        let start = memory.anchor.map_or(0, |(k, _)| k + 1);
        let next = (0..n).map(|i| (start + i) % n).find(|&k| self.kernel.is_available(state, k));
        if let Some(k) = next {
            memory.anchor = Some((k, 0));
        }
        Ok(next.map(PolicyDecision::new))
    }
}
