use std::collections::HashMap;
use std::fmt;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::model::DiscreteDist;

/// An abstract action with its planning and execution time distributions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionSpec {
    pub id: String,
    pub planning: DiscreteDist,
    pub execution: DiscreteDist,
}

impl ActionSpec {
    pub fn new(id: impl Into<String>, planning: DiscreteDist, execution: DiscreteDist) -> Self {
        Self { id: id.into(), planning, execution }
    }
}

/// Ordered action ids. Skeletons that list the same id share that action.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanSkeleton {
    pub actions: Vec<String>,
}

impl PlanSkeleton {
    pub fn new<S: Into<String>>(actions: impl IntoIterator<Item = S>) -> Self {
        Self { actions: actions.into_iter().map(Into::into).collect() }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// One invariant breach found by [`ProblemInstance::validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Deadline, action catalog and candidate skeletons.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProblemInstance {
    deadline: u32,
    catalog: Vec<ActionSpec>,
    index: HashMap<String, usize>,
    skeletons: Vec<PlanSkeleton>,
    shared_prefix_ok: bool,
}

impl ProblemInstance {
    /// Assembles an instance without validating it; see [`Self::validate`].
    pub fn new(deadline: u32, catalog: Vec<ActionSpec>, skeletons: Vec<PlanSkeleton>) -> Self {
        let mut index = HashMap::new();
        for (i, a) in catalog.iter().enumerate() {
            index.entry(a.id.clone()).or_insert(i);
        }
        let shared_prefix_ok = tree_structured(&skeletons);
        Self { deadline, catalog, index, skeletons, shared_prefix_ok }
    }

    /// Like [`Self::new`] but fails with every violation found.
    pub fn checked(deadline: u32, catalog: Vec<ActionSpec>, skeletons: Vec<PlanSkeleton>) -> Result<Self> {
        Self::new(deadline, catalog, skeletons).validated()
    }

    pub fn validated(self) -> Result<Self> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidInstance(violations))
        }
    }

    pub fn deadline(&self) -> u32 {
        self.deadline
    }

    pub fn catalog(&self) -> &[ActionSpec] {
        &self.catalog
    }

    pub fn skeletons(&self) -> &[PlanSkeleton] {
        &self.skeletons
    }

    pub fn num_skeletons(&self) -> usize {
        self.skeletons.len()
    }

    /// True when action sharing is tree-shaped: every shared action sits at
    /// the same position in each skeleton using it, behind identical
    /// prefixes, and no skeleton repeats an action.
    pub fn shared_prefix_ok(&self) -> bool {
        self.shared_prefix_ok
    }

    pub fn action_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn action(&self, id: &str) -> Option<&ActionSpec> {
        self.action_index(id).map(|i| &self.catalog[i])
    }

    /// Skeletons holding the same action as skeleton `k` at position `j`
    /// (both zero-based). Always contains `k`.
    pub fn sharing_set(&self, k: usize, j: usize) -> Result<Vec<usize>> {
        let skel = self.skeletons.get(k).ok_or(Error::OutOfRange {
            what: "skeleton",
            index: k,
            limit: self.skeletons.len(),
        })?;
        let id = skel.actions.get(j).ok_or(Error::OutOfRange {
            what: "action position",
            index: j,
            limit: skel.len(),
        })?;
        Ok(self
            .skeletons
            .iter()
            .enumerate()
            .filter(|(_, s)| s.actions.get(j) == Some(id))
            .map(|(m, _)| m)
            .collect())
    }

    /// Lists every invariant breach; empty means the instance is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |field: String, message: String| out.push(Violation { field, message });
        if self.deadline == 0 {
            push("deadline".into(), "must be at least 1".into());
        }
        if self.skeletons.is_empty() {
            push("skeletons".into(), "at least one skeleton is required".into());
        }
        let mut seen = HashMap::new();
        for a in &self.catalog {
            if seen.insert(a.id.as_str(), ()).is_some() {
                push(format!("actions.{}", a.id), "duplicate action id".into());
            }
            for (kind, d) in [("planning", &a.planning), ("execution", &a.execution)] {
                if let Some(reason) = d.check() {
                    push(format!("actions.{}.{kind}", a.id), reason);
                }
                if d.horizon() != self.deadline {
                    push(
                        format!("actions.{}.{kind}", a.id),
                        format!("horizon {} differs from deadline {}", d.horizon(), self.deadline),
                    );
                }
            }
            if !a.planning.prob(0).is_zero() {
                push(
                    format!("actions.{}.planning", a.id),
                    "planning takes at least one step; step 0 must carry no mass".into(),
                );
            }
        }
        for (k, s) in self.skeletons.iter().enumerate() {
            if s.is_empty() {
                push(format!("skeletons[{k}]"), "skeleton has no actions".into());
            }
            for (j, id) in s.actions.iter().enumerate() {
                if !self.index.contains_key(id) {
                    push(format!("skeletons[{k}][{j}]"), format!("unknown action id `{id}`"));
                }
            }
        }
        out
    }
}

fn tree_structured(skeletons: &[PlanSkeleton]) -> bool {
    let mut first_use: HashMap<&str, (usize, usize)> = HashMap::new();
    for (k, s) in skeletons.iter().enumerate() {
        for (j, id) in s.actions.iter().enumerate() {
            match first_use.get(id.as_str()) {
                None => {
                    first_use.insert(id, (k, j));
                }
                Some(&(k0, j0)) => {
                    if k0 == k || j0 != j || skeletons[k0].actions[..j] != s.actions[..j] {
                        return false;
                    }
                }
            }
        }
    }
    true
}
