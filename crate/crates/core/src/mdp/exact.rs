use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::mdp::{Kernel, MdpState, Terminal};
use crate::model::ProblemInstance;
use crate::policies::{Memory, Policy};
use crate::prob::Prob;

/// Default bound on memoised states.
pub const DEFAULT_STATE_CAP: usize = 10_000_000;

/// Optimal success probability together with the optimal action of every
/// reachable non-terminal state.
#[derive(Clone, Debug)]
pub struct ExactSolution<P> {
    pub value: P,
    pub root_action: Option<usize>,
    pub explored: usize,
    policy: HashMap<MdpState, usize>,
}

impl<P> ExactSolution<P> {
    /// Optimal action in `state`, if the state was reached during solving.
    pub fn action(&self, state: &MdpState) -> Option<usize> {
        self.policy.get(&state.canonical()).copied()
    }
}

/// Crude upper bound on the number of states, for error messages.
fn state_bound(kernel_deadline: u32, lengths: impl Iterator<Item = usize>) -> String {
    let d = kernel_deadline as f64;
    let bound = lengths.fold(d + 1.0, |acc, a| acc * ((a as f64 + 1.0) * (d + 1.0) * (d + 2.0) + 1.0));
    format!("{bound:.3e}")
}

struct Solver<'k, P> {
    kernel: &'k Kernel<P>,
    cap: usize,
    memo: HashMap<MdpState, (P, usize)>,
}

impl<P: Prob> Solver<'_, P> {
    fn cap_error(&self) -> Error {
        Error::Capacity {
            explored: self.memo.len(),
            cap: self.cap,
            estimate: state_bound(self.kernel.deadline(), self.kernel.plans().iter().map(Vec::len)),
        }
    }

    fn value(&mut self, state: &MdpState) -> Result<P> {
        match state.terminal {
            Some(Terminal::Success) => return Ok(P::one()),
            Some(Terminal::Failure) => return Ok(P::zero()),
            None => {}
        }
        let key = state.canonical();
        if let Some((v, _)) = self.memo.get(&key) {
            return Ok(v.clone());
        }
        let mut best: Option<(P, usize)> = None;
        for k in self.kernel.available(state) {
            let mut q = P::zero();
            for t in self.kernel.successors(state, k)? {
                q = q + t.prob * self.value(&t.next)?;
            }
            if best.as_ref().is_none_or(|(b, _)| q.definitely_gt(b)) {
                best = Some((q, k));
            }
        }
        let (v, k) = best.expect("non-terminal states have an available action");
        if self.memo.len() >= self.cap {
            return Err(self.cap_error());
        }
        self.memo.insert(key, (v.clone(), k));
        Ok(v)
    }
}

/// Memoised expectimax over all reachable states; ties go to the lowest
/// skeleton index. Refuses once more than `cap` states are memoised.
pub fn solve_exact<P: Prob>(kernel: &Kernel<P>, cap: usize) -> Result<ExactSolution<P>> {
    let mut solver = Solver { kernel, cap, memo: HashMap::new() };
    let root = kernel.initial_state();
    let value = solver.value(&root)?;
    let root_action = solver.memo.get(&root.canonical()).map(|(_, k)| *k);
    let explored = solver.memo.len();
    let policy = solver.memo.into_iter().map(|(s, (_, k))| (s, k)).collect();
    Ok(ExactSolution { value, root_action, explored, policy })
}

/// Optimal success probability of `inst` (see [`solve_exact`]).
pub fn exact_value<P: Prob>(inst: &ProblemInstance, cap: usize) -> Result<ExactSolution<P>> {
    solve_exact(&Kernel::<P>::new(inst)?, cap)
}

/// Success probability of following `policy`, computed by enumerating
/// transitions. A policy that abandons the episode scores zero from there.
pub fn policy_value<P: Prob>(kernel: &Kernel<P>, policy: &dyn Policy, cap: usize) -> Result<P> {
    fn go<P: Prob>(
        kernel: &Kernel<P>,
        policy: &dyn Policy,
        state: &MdpState,
        memory: Memory,
        memo: &mut HashMap<(MdpState, Memory), P>,
        cap: usize,
    ) -> Result<P> {
        match state.terminal {
            Some(Terminal::Success) => return Ok(P::one()),
            Some(Terminal::Failure) => return Ok(P::zero()),
            None => {}
        }
        let key = (state.clone(), memory);
        if let Some(v) = memo.get(&key) {
            return Ok(v.clone());
        }
        let mut mem = memory;
        let v = match policy.decide(state, &mut mem)? {
            None => P::zero(),
            Some(d) => {
                let mut v = P::zero();
                for t in kernel.successors(state, d.skeleton)? {
                    v = v + t.prob * go(kernel, policy, &t.next, mem, memo, cap)?;
                }
                v
            }
        };
        if memo.len() >= cap {
            return Err(Error::Capacity {
                explored: memo.len(),
                cap,
                estimate: state_bound(kernel.deadline(), kernel.plans().iter().map(Vec::len)),
            });
        }
        memo.insert(key, v.clone());
        Ok(v)
    }
    let mut memo = HashMap::new();
    go(kernel, policy, &kernel.initial_state(), Memory::default(), &mut memo, cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;
    use crate::model::{ActionSpec, DiscreteDist, PlanSkeleton};
    use crate::prob::{ratio, Rational};

    #[test]
    fn figure_instance_optimum() {
        let sol = exact_value::<Rational>(&instances::fig3(), DEFAULT_STATE_CAP).unwrap();
        assert_eq!(sol.value, ratio(9, 16));
        assert_eq!(sol.root_action, Some(0));
    }

    #[test]
    fn figure_instance_policy_shape() {
        let kernel: Kernel<Rational> = Kernel::new(&instances::fig3()).unwrap();
        let sol = solve_exact(&kernel, DEFAULT_STATE_CAP).unwrap();
        let root = kernel.initial_state();
        // After the shared action stalls, switch to the deterministic skeleton.
        let stalled = kernel.apply(&root, 0, crate::mdp::Outcome::Stalled);
        assert_eq!(sol.action(&stalled), Some(2));
        // After a fast refinement, keep refining the first skeleton.
        let fast = kernel.apply(&root, 0, crate::mdp::Outcome::Refined { exec: 1 });
        assert_eq!(sol.action(&fast), Some(0));
    }

    #[test]
    fn guaranteed_success() {
        let a = ActionSpec::new("a", DiscreteDist::point(2, 1), DiscreteDist::point(2, 1));
        let inst = ProblemInstance::new(2, vec![a], vec![PlanSkeleton::new(["a"])]);
        let sol = exact_value::<Rational>(&inst, DEFAULT_STATE_CAP).unwrap();
        assert_eq!(sol.value, ratio(1, 1));
    }

    #[test]
    fn float_mode_agrees() {
        let sol = exact_value::<f64>(&instances::fig3(), DEFAULT_STATE_CAP).unwrap();
        assert!((sol.value - 0.5625).abs() < 1e-12);
    }

    #[test]
    fn capacity_is_enforced() {
        let err = exact_value::<f64>(&instances::fig3(), 2).unwrap_err();
        assert!(matches!(err, Error::Capacity { cap: 2, .. }));
    }
}
