use num_traits::{Signed, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::mdp::state::{MdpState, Terminal};
use crate::model::{DiscreteDist, ProblemInstance};
use crate::prob::{int, Prob, Rational};

/// Conditional probability that planning completes on the next allocated
/// step after `elapsed` unsuccessful steps:
/// `(CDF(elapsed + 1) - CDF(elapsed)) / (1 - CDF(elapsed))`.
pub fn hazard(planning: &DiscreteDist, elapsed: u32) -> Result<Rational> {
    let done = planning.cdf(elapsed);
    let remaining = int(1) - &done;
    if !remaining.is_positive() {
        return Err(Error::ImpossibleState { elapsed });
    }
    Ok((planning.cdf(elapsed + 1) - done) / remaining)
}

/// Result of allocating one step to a skeleton's frontier action.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Stalled,
    /// Refinement completed; the motion takes `exec` steps to execute.
    Refined { exec: u32 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition<P> {
    pub next: MdpState,
    pub prob: P,
}

/// Precomputed transition tables for one instance.
///
/// Transitions follow the four rules of the effort-allocation MDP: time
/// advances by one; skeletons whose frontier differs are untouched; with the
/// hazard probability the frontier action refines for every skeleton sharing
/// it and an execution time is drawn; otherwise their planning progress
/// grows by one.
///
/// Success requires a fully refined skeleton with `time + exec_total <= D`.
/// A skeleton that provably cannot get there any more is marked dead and its
/// action becomes unavailable; a state with no available action fails.
#[derive(Clone, Debug)]
pub struct Kernel<P> {
    instance: ProblemInstance,
    deadline: u32,
    plans: Vec<Vec<usize>>,
    /// `hazards[a][pt]`, `None` once completion within the horizon is ruled out.
    hazards: Vec<Vec<Option<P>>>,
    /// Execution outcomes; sentinel mass maps to `deadline + 1`.
    exec: Vec<Vec<(u32, P)>>,
    /// Planning categories `0..=D` with the sentinel at `D + 1`.
    plan_pmf: Vec<Vec<f64>>,
    /// Minimum further planning steps after `pt` unsuccessful ones.
    more_plan: Vec<Vec<Option<u32>>>,
    min_exec: Vec<Option<u32>>,
    /// `tail[k][j]`: lower bound on planning plus execution time of actions `j..`.
    tail: Vec<Vec<Option<u32>>>,
}

impl<P: Prob> Kernel<P> {
    pub fn new(instance: &ProblemInstance) -> Result<Self> {
        let instance = instance.clone().validated()?;
        let d = instance.deadline();
        let plans: Vec<Vec<usize>> = instance
            .skeletons()
            .iter()
            .map(|s| s.actions.iter().map(|id| instance.action_index(id).expect("validated")).collect())
            .collect();
        let mut hazards = Vec::new();
        let mut exec = Vec::new();
        let mut plan_pmf = Vec::new();
        let mut more_plan: Vec<Vec<Option<u32>>> = Vec::new();
        let mut min_exec = Vec::new();
        for a in instance.catalog() {
            hazards.push(
                (0..d)
                    .map(|pt| hazard(&a.planning, pt).ok().map(|h| P::from_rational(&h)))
                    .collect(),
            );
            let mut outcomes: Vec<(u32, Rational)> = Vec::new();
            for (x, p) in a.execution.atoms() {
                outcomes.push((x, p.clone()));
            }
            if !a.execution.never_mass().is_zero() {
                match outcomes.iter_mut().find(|(x, _)| *x == d + 1) {
                    Some((_, p)) => *p += a.execution.never_mass(),
                    None => outcomes.push((d + 1, a.execution.never_mass().clone())),
                }
            }
            exec.push(outcomes.iter().map(|(x, p)| (*x, P::from_rational(p))).collect());
            plan_pmf.push(a.planning.to_f64_categories());
            let atoms: Vec<u32> = a.planning.atoms().map(|(t, _)| t).filter(|&t| t >= 1 && t <= d).collect();
            more_plan.push(
                (0..=d)
                    .map(|pt| atoms.iter().find(|&&t| t > pt).map(|&t| t - pt))
                    .collect(),
            );
            min_exec.push(a.execution.atoms().map(|(t, _)| t).find(|&t| t <= d));
        }
        let tail = plans
            .iter()
            .map(|plan| {
                let mut bounds = vec![Some(0u32); plan.len() + 1];
                for j in (0..plan.len()).rev() {
                    let a = plan[j];
                    bounds[j] = match (bounds[j + 1], more_plan[a][0], min_exec[a]) {
                        (Some(rest), Some(p), Some(e)) => Some(rest + p + e),
                        _ => None,
                    };
                }
                bounds
            })
            .collect();
        Ok(Self { instance, deadline: d, plans, hazards, exec, plan_pmf, more_plan, min_exec, tail })
    }

    pub fn instance(&self) -> &ProblemInstance {
        &self.instance
    }

    pub fn deadline(&self) -> u32 {
        self.deadline
    }

    pub fn num_skeletons(&self) -> usize {
        self.plans.len()
    }

    /// Action indices (into the catalog) of each skeleton.
    pub fn plans(&self) -> &[Vec<usize>] {
        &self.plans
    }

    /// Catalog index of skeleton `k`'s next unrefined action.
    pub fn frontier(&self, state: &MdpState, k: usize) -> Option<usize> {
        let p = state.skeletons.get(k)?;
        self.plans[k].get(p.refined as usize).copied()
    }

    /// Initial state with hopeless skeletons already marked dead.
    pub fn initial_state(&self) -> MdpState {
        let mut s = MdpState::fresh(self.plans.len());
        self.settle(&mut s);
        s
    }

    pub fn is_available(&self, state: &MdpState, k: usize) -> bool {
        if state.is_terminal() {
            return false;
        }
        let Some(p) = state.skeletons.get(k) else { return false };
        if p.dead {
            return false;
        }
        let Some(a) = self.frontier(state, k) else { return false };
        let pt = p.planned as usize;
        pt < self.hazards[a].len() && self.hazards[a][pt].is_some() && self.more_plan[a][pt].is_some()
    }

    pub fn available(&self, state: &MdpState) -> Vec<usize> {
        (0..self.plans.len()).filter(|&k| self.is_available(state, k)).collect()
    }

    /// Hazard of skeleton `k`'s frontier action in `state`.
    pub fn frontier_hazard(&self, state: &MdpState, k: usize) -> Result<P> {
        let a = self.frontier(state, k).ok_or(Error::UnavailableAction { skeleton: k })?;
        let pt = state.skeletons[k].planned;
        self.hazards[a]
            .get(pt as usize)
            .cloned()
            .flatten()
            .ok_or(Error::ImpossibleState { elapsed: pt })
    }

    fn hopeless(&self, state: &MdpState, k: usize) -> bool {
        let p = &state.skeletons[k];
        let plan = &self.plans[k];
        let j = p.refined as usize;
        if j >= plan.len() {
            return true;
        }
        let a = plan[j];
        let bound = self.more_plan[a]
            .get(p.planned as usize)
            .copied()
            .flatten()
            .zip(self.min_exec[a])
            .zip(self.tail[k][j + 1])
            .map(|((more, e), rest)| more as u64 + e as u64 + rest as u64);
        match bound {
            None => true,
            Some(b) => state.time as u64 + p.exec_total as u64 + b > self.deadline as u64,
        }
    }

    /// Marks hopeless skeletons dead and fails the state when nothing is left.
    fn settle(&self, s: &mut MdpState) {
        if s.is_terminal() {
            return;
        }
        for k in 0..self.plans.len() {
            if !s.skeletons[k].dead && self.hopeless(s, k) {
                s.skeletons[k].dead = true;
            }
        }
        if !(0..self.plans.len()).any(|k| self.is_available(s, k)) {
            s.terminal = Some(Terminal::Failure);
        }
    }

    /// Applies one allocation to skeleton `k` with a known outcome. The
    /// caller guarantees `k` is available.
    pub fn apply(&self, state: &MdpState, k: usize, outcome: Outcome) -> MdpState {
        let a = self.frontier(state, k).expect("available skeleton has a frontier");
        let group: Vec<usize> = (0..self.plans.len())
            .filter(|&m| !state.skeletons[m].dead && self.frontier(state, m) == Some(a))
            .collect();
        let mut next = state.clone();
        next.time += 1;
        match outcome {
            Outcome::Stalled => {
                for &m in &group {
                    next.skeletons[m].planned += 1;
                }
            }
            Outcome::Refined { exec } => {
                let mut success = false;
                for &m in &group {
                    let p = &mut next.skeletons[m];
                    p.refined += 1;
                    p.planned = 0;
                    p.exec_total = p.exec_total.saturating_add(exec);
                    if p.refined as usize == self.plans[m].len() {
                        if next.time as u64 + p.exec_total as u64 <= self.deadline as u64 {
                            success = true;
                        } else {
                            p.dead = true;
                        }
                    }
                }
                if success {
                    next.terminal = Some(Terminal::Success);
                    return next;
                }
                // A skeleton reaching an action already in progress elsewhere
                // picks up that progress.
                for &m in &group {
                    let Some(y) = self.frontier(&next, m) else { continue };
                    let inherited = (0..self.plans.len())
                        .filter(|o| !group.contains(o) && !next.skeletons[*o].dead)
                        .find(|&o| self.frontier(&next, o) == Some(y))
                        .map(|o| next.skeletons[o].planned);
                    if let Some(pt) = inherited {
                        next.skeletons[m].planned = pt;
                    }
                }
            }
        }
        self.settle(&mut next);
        next
    }

    /// Every successor of allocating one step to skeleton `k`, with
    /// probabilities summing to one. Identical successors are merged.
    pub fn successors(&self, state: &MdpState, k: usize) -> Result<Vec<Transition<P>>> {
        if state.is_terminal() {
            return Err(Error::TerminalState);
        }
        if !self.is_available(state, k) {
            return Err(Error::UnavailableAction { skeleton: k });
        }
        let a = self.frontier(state, k).expect("available");
        let h = self.frontier_hazard(state, k)?;
        let mut out: Vec<Transition<P>> = Vec::new();
        let mut push = |next: MdpState, prob: P| {
            match out.iter_mut().find(|t| t.next == next) {
                Some(t) => t.prob = t.prob.clone() + prob,
                None => out.push(Transition { next, prob }),
            }
        };
        if h < P::one() {
            push(self.apply(state, k, Outcome::Stalled), P::one() - h.clone());
        }
        if h > P::zero() {
            for (x, e) in &self.exec[a] {
                push(self.apply(state, k, Outcome::Refined { exec: *x }), h.clone() * e.clone());
            }
        }
        Ok(out)
    }

    /// Samples the outcome of allocating one step to skeleton `k`.
    pub fn sample_outcome<R: Rng + ?Sized>(&self, state: &MdpState, k: usize, rng: &mut R) -> Outcome {
        let a = self.frontier(state, k).expect("available");
        let h = self
            .frontier_hazard(state, k)
            .map(|h| h.to_f64())
            .unwrap_or(0.0);
        if rng.gen::<f64>() < h {
            Outcome::Refined { exec: self.sample_execution(a, rng) }
        } else {
            Outcome::Stalled
        }
    }

    /// Draws a total planning duration for action `a`; `deadline + 1` means
    /// it never completes within the horizon.
    pub fn sample_planning<R: Rng + ?Sized>(&self, a: usize, rng: &mut R) -> u32 {
        sample_index(&self.plan_pmf[a], rng) as u32
    }

    pub fn sample_execution<R: Rng + ?Sized>(&self, a: usize, rng: &mut R) -> u32 {
        let outcomes = &self.exec[a];
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (x, p) in outcomes {
            acc += p.to_f64();
            if u < acc {
                return *x;
            }
        }
        outcomes.last().map(|(x, _)| *x).unwrap_or(self.deadline + 1)
    }
}

fn sample_index<R: Rng + ?Sized>(pmf: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = pmf.len() - 1;
    for (i, p) in pmf.iter().enumerate() {
        if *p > 0.0 {
            last = i;
            acc += p;
            if u < acc {
                return i;
            }
        }
    }
    last
}
