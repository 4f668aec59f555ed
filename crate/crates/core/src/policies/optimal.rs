use crate::error::Result;
use crate::mdp::{solve_exact, ExactSolution, Kernel, MdpState, DEFAULT_STATE_CAP};
use crate::model::ProblemInstance;
use crate::policies::{Memory, Policy, PolicyDecision};

/// Follows the action map of the exact expectimax solution.
pub struct ExactPolicy {
    solution: ExactSolution<f64>,
}

impl ExactPolicy {
    pub fn new(inst: &ProblemInstance) -> Result<Self> {
        Self::with_cap(inst, DEFAULT_STATE_CAP)
    }

    pub fn with_cap(inst: &ProblemInstance, cap: usize) -> Result<Self> {
        let kernel = Kernel::<f64>::new(inst)?;
        Ok(Self { solution: solve_exact(&kernel, cap)? })
    }

    pub fn value(&self) -> f64 {
        self.solution.value
    }
}

impl Policy for ExactPolicy {
    fn name(&self) -> String {
        "exact".into()
    }

    fn decide(&self, state: &MdpState, _memory: &mut Memory) -> Result<Option<PolicyDecision>> {
        Ok(self.solution.action(state).map(PolicyDecision::new))
    }
}
