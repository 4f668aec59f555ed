//! Deadline-aware effort allocation among candidate plan skeletons.
//!
//! Several plan skeletons compete for one unit of refinement effort per time
//! step. Each abstract action has a stochastic planning time and a stochastic
//! execution time; the goal is to fully refine some skeleton early enough that
//! its accumulated execution time still fits before the deadline.
//!
//! The crate is organised as:
//!
//! * [`model`]: distributions, actions, skeletons, instance validation and I/O.
//! * [`mdp`]: the effort-allocation MDP kernel and the exact expectimax oracle.
//! * [`policies`]: the linear-contiguous DP, DP re-run, Greedy and Round Robin.
//! * [`mcts`]: UCT search over the expectimax tree.
//! * [`sim`]: episode simulator and Monte Carlo evaluator.
//! * [`reduction`]: knapsack instances mapped onto effort-allocation instances.
//! * [`instances`]: built-in benchmark instances and a random generator.

pub mod error;
pub mod instances;
pub mod mcts;
pub mod mdp;
pub mod model;
pub mod policies;
pub mod prob;
pub mod reduction;
pub mod sim;

pub use error::{Error, Result};
pub use mdp::{Kernel, MdpState, Terminal};
pub use model::{ActionSpec, DiscreteDist, PlanSkeleton, ProblemInstance};
pub use policies::{Policy, PolicyDecision, PolicyKind};
pub use prob::{Prob, Rational};
