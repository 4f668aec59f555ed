//! Probability-of-success recursion and the two policies built on it.
//!
//! `PS(k, l, CT, ET)` is the probability that skeleton `k`, with `l` actions
//! refined, `CT` steps used and `ET` steps of execution committed, finishes
//! in time when effort goes contiguously to its remaining actions. Where a
//! refined action is shared, the recursion continues with the best of the
//! sharing skeletons.
//!
//! Hand evaluation on the three-skeleton figure instance (`D = 5`):
//!
//! * `PS(σ3, 0, 0, 0)`: planning takes 3 steps with certainty, leaving 2
//!   steps to execute; execution takes 1 step with probability 0.5, so 0.5.
//! * `PS(σ1, 0, 0, 0)`: only a 1-step plan (0.5) followed by a 1-step
//!   execution (0.5) leaves room for the second action, whose value is 0.5
//!   for either continuation, giving `0.5 * 0.5 * 0.5 = 0.125`.

use std::collections::HashMap;
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::mdp::{Kernel, MdpState};
use crate::model::{DiscreteDist, ProblemInstance};
use crate::policies::{argmax_by, Memory, Policy, PolicyDecision};
use crate::prob::Prob;

/// Dense memo over `(k, l, CT, ET)`, with `CT, ET` in `0..=D`. A slot is
/// live only when its stamp matches the current generation, so the table
/// can be cleared in constant time and reused.
#[derive(Clone, Debug)]
pub struct DpTable<P> {
    lens: Vec<usize>,
    width: usize,
    slots: Vec<Option<P>>,
    stamps: Vec<u32>,
    generation: u32,
    offsets: Vec<usize>,
}

impl<P: Clone> DpTable<P> {
    fn new(lens: Vec<usize>, deadline: u32) -> Self {
        let width = deadline as usize + 1;
        let mut offsets = Vec::with_capacity(lens.len());
        let mut total = 0;
        for &a in &lens {
            offsets.push(total);
            total += (a + 1) * width * width;
        }
        Self { lens, width, slots: vec![None; total], stamps: vec![0; total], generation: 1, offsets }
    }

    fn clear(&mut self) {
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.stamps.fill(0);
            self.generation = 1;
        }
    }

    fn live(&self, i: usize) -> Option<&P> {
        if self.stamps[i] == self.generation { self.slots[i].as_ref() } else { None }
    }

    fn store(&mut self, i: usize, v: P) {
        self.slots[i] = Some(v);
        self.stamps[i] = self.generation;
    }

    fn slot(&self, k: usize, l: usize, ct: u32, et: u32) -> usize {
        self.offsets[k] + (l * self.width + ct as usize) * self.width + et as usize
    }

    pub fn get(&self, k: usize, l: usize, ct: u32, et: u32) -> Option<&P> {
        if k >= self.lens.len() || l > self.lens[k] || ct as usize >= self.width || et as usize >= self.width {
            return None;
        }
        self.live(self.slot(k, l, ct, et))
    }

    /// Every memoised `((k, l, CT, ET), PS)` entry.
    pub fn entries(&self) -> impl Iterator<Item = ((usize, usize, u32, u32), &P)> + '_ {
        let w = self.width;
        self.lens.iter().enumerate().flat_map(move |(k, &a)| {
            (0..=a).flat_map(move |l| {
                (0..w).flat_map(move |ct| {
                    (0..w).filter_map(move |et| {
                        self.live(self.slot(k, l, ct as u32, et as u32))
                            .map(|v| ((k, l, ct as u32, et as u32), v))
                    })
                })
            })
        })
    }

    pub fn len(&self) -> usize {
        (0..self.slots.len()).filter(|&i| self.live(i).is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Per-instance tables for the recursion, converted to `P` once.
#[derive(Clone, Debug)]
pub struct DpModel<P> {
    instance: ProblemInstance,
    deadline: u32,
    plans: Vec<Vec<usize>>,
    /// `planning[a][pt][t]`: probability that action `a` needs exactly `t`
    /// more steps after `pt` unsuccessful ones; empty when `pt` is impossible.
    planning: Vec<Vec<Vec<P>>>,
    /// Execution atoms within the deadline.
    exec: Vec<Vec<(u32, P)>>,
    /// `exec_cdf[a][x]`: probability execution takes at most `x` steps.
    exec_cdf: Vec<Vec<P>>,
    /// `sharing[k][j]`: skeletons holding skeleton `k`'s `j`-th action at `j`.
    sharing: Vec<Vec<Vec<usize>>>,
}

fn to_vec<P: Prob>(d: &DiscreteDist, deadline: u32) -> Vec<P> {
    (0..=deadline).map(|t| P::from_rational(&d.prob(t))).collect()
}

impl<P: Prob> DpModel<P> {
    pub fn new(inst: &ProblemInstance) -> Result<Self> {
        let instance = inst.clone().validated()?;
        if !instance.shared_prefix_ok() {
            return Err(Error::UnsupportedStructure);
        }
        let d = instance.deadline();
        let plans: Vec<Vec<usize>> = instance
            .skeletons()
            .iter()
            .map(|s| s.actions.iter().map(|id| instance.action_index(id).expect("validated")).collect())
            .collect();
        let mut planning = Vec::new();
        let mut exec = Vec::new();
        let mut exec_cdf = Vec::new();
        for a in instance.catalog() {
            let rows = (0..d)
                .map(|pt| a.planning.condition_on_elapsed(pt).map(|c| to_vec(&c, d)).unwrap_or_default())
                .collect();
            planning.push(rows);
            let atoms: Vec<(u32, P)> = a
                .execution
                .atoms()
                .filter(|(x, _)| *x <= d)
                .map(|(x, p)| (x, P::from_rational(p)))
                .collect();
            let mut acc = P::zero();
            let mut cdf = Vec::with_capacity(d as usize + 1);
            for x in 0..=d {
                if let Some((_, p)) = atoms.iter().find(|(y, _)| *y == x) {
                    acc = acc + p.clone();
                }
                cdf.push(acc.clone());
            }
            exec.push(atoms);
            exec_cdf.push(cdf);
        }
        let sharing = (0..plans.len())
            .map(|k| (0..plans[k].len()).map(|j| instance.sharing_set(k, j).expect("in range")).collect())
            .collect();
        Ok(Self { instance, deadline: d, plans, planning, exec, exec_cdf, sharing })
    }

    pub fn instance(&self) -> &ProblemInstance {
        &self.instance
    }

    pub fn sharing(&self, k: usize, j: usize) -> &[usize] {
        &self.sharing[k][j]
    }

    /// Solver with no conditioned distributions.
    pub fn solver(&self) -> DpSolver<'_, P> {
        self.solver_in(self.empty_table())
    }

    fn empty_table(&self) -> DpTable<P> {
        DpTable::new(self.plans.iter().map(Vec::len).collect(), self.deadline)
    }

    fn solver_in(&self, mut table: DpTable<P>) -> DpSolver<'_, P> {
        table.clear();
        DpSolver {
            model: self,
            overrides: vec![None; self.planning.len()],
            elapsed: vec![0; self.planning.len()],
            table,
        }
    }

    /// Solver whose planning distributions for the given catalog indices are
    /// replaced, typically by [`DiscreteDist::condition_on_elapsed`] results.
    pub fn solver_with(&self, overrides: &HashMap<usize, DiscreteDist>) -> DpSolver<'_, P> {
        let mut s = self.solver();
        for (&a, d) in overrides {
            s.overrides[a] = Some(to_vec(d, self.deadline));
        }
        s
    }

    /// Solver in which every available frontier action of `state` is
    /// conditioned on its elapsed planning steps.
    fn conditioned(
        &self,
        kernel: &Kernel<f64>,
        state: &MdpState,
        available: &[usize],
        table: DpTable<P>,
    ) -> Result<DpSolver<'_, P>> {
        let mut s = self.solver_in(table);
        for &k in available {
            let pt = state.skeletons[k].planned;
            let a = kernel.frontier(state, k).expect("available");
            if self.planning[a].get(pt as usize).is_none_or(Vec::is_empty) {
                return Err(Error::ImpossibleConditioning { elapsed: pt });
            }
            s.elapsed[a] = pt as usize;
        }
        Ok(s)
    }
}

/// One evaluation of the recursion with its memo table.
pub struct DpSolver<'m, P> {
    model: &'m DpModel<P>,
    overrides: Vec<Option<Vec<P>>>,
    elapsed: Vec<usize>,
    table: DpTable<P>,
}

impl<P: Prob> DpSolver<'_, P> {
    pub fn table(&self) -> &DpTable<P> {
        &self.table
    }

    fn into_table(self) -> DpTable<P> {
        self.table
    }

    /// `PS(k, l, CT, ET)`; `l` counts refined actions (zero-based frontier).
    pub fn ps(&mut self, k: usize, l: usize, ct: u32, et: u32) -> Result<P> {
        let m = self.model;
        let plan = m.plans.get(k).ok_or(Error::OutOfRange { what: "skeleton", index: k, limit: m.plans.len() })?;
        let d = m.deadline;
        if l > plan.len() {
            return Err(Error::OutOfRange { what: "refined count", index: l, limit: plan.len() });
        }
        if ct > d {
            return Err(Error::OutOfRange { what: "time", index: ct as usize, limit: d as usize });
        }
        if l == plan.len() {
            return Ok(if ct as u64 + et as u64 <= d as u64 { P::one() } else { P::zero() });
        }
        if ct as u64 + et as u64 >= d as u64 {
            return Ok(P::zero());
        }
        if let Some(v) = self.table.get(k, l, ct, et) {
            return Ok(v.clone());
        }
        let a = plan[l];
        let last = l + 1 == plan.len();
        let mut total = P::zero();
        for t in 1..=d - ct {
            let p = match &self.overrides[a] {
                Some(o) => o[t as usize].clone(),
                None => m.planning[a][self.elapsed[a]][t as usize].clone(),
            };
            if p.is_zero() {
                continue;
            }
            if last {
                let slack = d as i64 - t as i64 - ct as i64 - et as i64;
                if slack >= 0 {
                    total = total + p * m.exec_cdf[a][slack as usize].clone();
                }
                continue;
            }
            for (x, e) in &m.exec[a] {
                let mut best = P::zero();
                for &k2 in &m.sharing[k][l] {
                    let v = self.ps(k2, l + 1, ct + t, et.saturating_add(*x))?;
                    if v > best {
                        best = v;
                    }
                }
                total = total + p.clone() * e.clone() * best;
            }
        }
        let slot = self.table.slot(k, l, ct, et);
        self.table.store(slot, total.clone());
        Ok(total)
    }
}

/// `PS(k, l, CT, ET)` for one instance with optional conditioned planning
/// distributions keyed by action id.
pub fn solve_dp<P: Prob>(
    inst: &ProblemInstance,
    k: usize,
    l: usize,
    ct: u32,
    et: u32,
    conditioned: &HashMap<String, DiscreteDist>,
) -> Result<P> {
    let model = DpModel::<P>::new(inst)?;
    let mut overrides = HashMap::new();
    for (id, d) in conditioned {
        let a = model.instance.action_index(id).ok_or_else(|| Error::Parse(format!("unknown action `{id}`")))?;
        overrides.insert(a, d.clone());
    }
    model.solver_with(&overrides).ps(k, l, ct, et)
}

/// Skeleton with the highest `PS(k, 0, 0, 0)` and its value.
pub fn dp_policy<P: Prob>(inst: &ProblemInstance) -> Result<(usize, P)> {
    let model = DpModel::<P>::new(inst)?;
    let mut solver = model.solver();
    let scores = (0..model.plans.len())
        .map(|k| solver.ps(k, 0, 0, 0).map(|v| (k, v)))
        .collect::<Result<Vec<_>>>()?;
    Ok(argmax_by(scores, |a, b| a.definitely_gt(b)).expect("at least one skeleton"))
}

/// Commits to the skeleton picked at the start and refines it contiguously.
///
/// When a shared action completes, the commitment moves to whichever
/// sharing skeleton has the best continuation value, mirroring the inner
/// maximum of the recursion. If the committed skeleton dies the episode is
/// abandoned.
pub struct DpPolicy {
    kernel: Kernel<f64>,
    model: DpModel<f64>,
    first: Option<usize>,
}

impl DpPolicy {
    pub fn new(inst: &ProblemInstance) -> Result<Self> {
        let model = DpModel::<f64>::new(inst)?;
        let kernel = Kernel::<f64>::new(inst)?;
        let root = kernel.initial_state();
        let mut solver = model.solver();
        let scores = kernel
            .available(&root)
            .into_iter()
            .map(|k| solver.ps(k, 0, 0, 0).map(|v| (k, v)))
            .collect::<Result<Vec<_>>>()?;
        let first = argmax_by(scores, |a, b| a.definitely_gt(b)).map(|(k, _)| k);
        Ok(Self { kernel, model, first })
    }

    /// Skeleton chosen at the start, if any was available.
    pub fn committed(&self) -> Option<usize> {
        self.first
    }
}

impl Policy for DpPolicy {
    fn name(&self) -> String {
        "dp".into()
    }

    fn decide(&self, state: &MdpState, memory: &mut Memory) -> Result<Option<PolicyDecision>> {
        if state.is_terminal() {
            return Ok(None);
        }
        let chosen = match memory.anchor {
            None => self.first.filter(|&k| self.kernel.is_available(state, k)),
            Some((k, l0)) if state.skeletons[k].refined > l0 => {
                let mut solver = self.model.solver();
                let mut scores = Vec::new();
                for &m in self.model.sharing(k, l0 as usize) {
                    if self.kernel.is_available(state, m) {
                        let p = &state.skeletons[m];
                        scores.push((m, solver.ps(m, p.refined as usize, state.time, p.exec_total)?));
                    }
                }
                argmax_by(scores, |a, b| a.definitely_gt(b)).map(|(m, _)| m)
            }
            Some((k, _)) if self.kernel.is_available(state, k) => Some(k),
            Some((k, _)) => {
                let a = self.kernel.frontier(state, k);
                (0..self.kernel.num_skeletons())
                    .find(|&m| a.is_some() && self.kernel.frontier(state, m) == a && self.kernel.is_available(state, m))
            }
        };
        Ok(chosen.map(|k| {
            memory.anchor = Some((k, state.skeletons[k].refined));
            PolicyDecision::new(k)
        }))
    }
}

/// Recomputes the recursion at every step with conditioned frontier
/// distributions and picks the best available skeleton.
pub struct DpRerunPolicy {
    kernel: Kernel<f64>,
    model: DpModel<f64>,
    /// Memo tables reused across decisions.
    pool: Mutex<Vec<DpTable<f64>>>,
}

impl DpRerunPolicy {
    pub fn new(inst: &ProblemInstance) -> Result<Self> {
        Ok(Self { kernel: Kernel::new(inst)?, model: DpModel::new(inst)?, pool: Mutex::new(Vec::new()) })
    }

    /// `PS` of every available skeleton in `state`.
    pub fn scores(&self, state: &MdpState) -> Result<Vec<(usize, f64)>> {
        let available = self.kernel.available(state);
        let table = self.pool.lock().expect("pool lock").pop().unwrap_or_else(|| self.model.empty_table());
        let mut solver = self.model.conditioned(&self.kernel, state, &available, table)?;
        let scores = available
            .into_iter()
            .map(|k| {
                let p = &state.skeletons[k];
                solver.ps(k, p.refined as usize, state.time, p.exec_total).map(|v| (k, v))
            })
            .collect();
        self.pool.lock().expect("pool lock").push(solver.into_table());
        scores
    }
}

impl Policy for DpRerunPolicy {
    fn name(&self) -> String {
        "dp-rerun".into()
    }

    fn decide(&self, state: &MdpState, _memory: &mut Memory) -> Result<Option<PolicyDecision>> {
        if state.is_terminal() {
            return Ok(None);
        }
        let scores = self.scores(state)?;
        Ok(argmax_by(scores, |a, b| a.definitely_gt(b)).map(|(k, _)| PolicyDecision::new(k)))
    }
}
