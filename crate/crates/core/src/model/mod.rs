//! Problem representation: distributions, actions, skeletons, estimation.

mod dist;
mod estimate;
mod instance;
pub mod json;

pub use dist::{DiscreteDist, SUM_TOLERANCE};
pub use estimate::estimate_dist;
pub use instance::{ActionSpec, PlanSkeleton, ProblemInstance, Violation};
