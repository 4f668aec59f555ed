//! The effort-allocation MDP: states, transitions and the exact oracle.

mod exact;
mod kernel;
mod state;

pub use exact::{exact_value, policy_value, solve_exact, ExactSolution, DEFAULT_STATE_CAP};
pub use kernel::{hazard, Kernel, Outcome, Transition};
pub use state::{MdpState, SkeletonProgress, Terminal};
