//! Episode simulation and Monte Carlo evaluation.
//!
//! Each action's true planning duration is drawn once per episode, on its
//! first allocation, and the action refines when its allocated steps reach
//! that duration. Execution time is drawn when refinement completes.
//! Episode `i` of an evaluation uses seed `base + i`.

use std::collections::HashMap;
use std::thread;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mdp::{Kernel, MdpState, Outcome, Terminal};
use crate::model::ProblemInstance;
use crate::policies::{Memory, Policy};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Refinement {
    pub action: String,
    pub planning_steps: u32,
    pub execution: u32,
}

#[derive(Clone, Debug)]
pub struct EpisodeTrace {
    /// `(CT, skeleton)` per allocated step.
    pub decisions: Vec<(u32, usize)>,
    pub refinements: Vec<Refinement>,
    pub outcome: Terminal,
    /// `(skeleton, CT, ET)` of the skeleton that succeeded.
    pub winner: Option<(usize, u32, u32)>,
    pub final_state: MdpState,
    pub decision_time: Duration,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub n_runs: u64,
    pub successes: u64,
    pub success_rate: f64,
    pub ci95_halfwidth: f64,
    pub seed: u64,
    /// Number of policy decisions across all episodes.
    pub decisions: u64,
    /// Wall time spent inside the policy.
    pub decision_time: Duration,
}

impl EvalReport {
    fn from_counts(n_runs: u64, successes: u64, seed: u64, decisions: u64, decision_time: Duration) -> Self {
        let p = successes as f64 / n_runs as f64;
        Self {
            n_runs,
            successes,
            success_rate: p,
            ci95_halfwidth: 1.96 * (p * (1.0 - p) / n_runs as f64).sqrt(),
            seed,
            decisions,
            decision_time,
        }
    }

    /// Standard error of the success rate.
    pub fn std_error(&self) -> f64 {
        (self.success_rate * (1.0 - self.success_rate) / self.n_runs as f64).sqrt()
    }

    pub fn mean_decision_ms(&self) -> f64 {
        if self.decisions == 0 {
            0.0
        } else {
            self.decision_time.as_secs_f64() * 1e3 / self.decisions as f64
        }
    }
}

pub struct Simulator {
    kernel: Kernel<f64>,
}

impl Simulator {
    pub fn new(inst: &ProblemInstance) -> Result<Self> {
        Ok(Self { kernel: Kernel::new(inst)? })
    }

    pub fn kernel(&self) -> &Kernel<f64> {
        &self.kernel
    }

    pub fn run_episode(&self, policy: &dyn Policy, seed: u64) -> Result<EpisodeTrace> {
        let kernel = &self.kernel;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = kernel.initial_state();
        let mut memory = Memory::default();
        let mut durations: HashMap<usize, u32> = HashMap::new();
        let mut trace = EpisodeTrace {
            decisions: Vec::new(),
            refinements: Vec::new(),
            outcome: Terminal::Failure,
            winner: None,
            final_state: state.clone(),
            decision_time: Duration::ZERO,
        };
        while !state.is_terminal() {
            let start = Instant::now();
            let decision = policy.decide(&state, &mut memory)?;
            trace.decision_time += start.elapsed();
            let Some(decision) = decision else {
                state.terminal = Some(Terminal::Failure);
                break;
            };
            let k = decision.skeleton;
            if !kernel.is_available(&state, k) {
                return Err(Error::Protocol { step: state.time, skeleton: k });
            }
            trace.decisions.push((state.time, k));
            let a = kernel.frontier(&state, k).expect("available");
            let duration = *durations.entry(a).or_insert_with(|| kernel.sample_planning(a, &mut rng));
            let spent = state.skeletons[k].planned + 1;
            let outcome = if spent == duration {
                durations.remove(&a);
                let exec = kernel.sample_execution(a, &mut rng);
                trace.refinements.push(Refinement {
                    action: kernel.instance().catalog()[a].id.clone(),
                    planning_steps: spent,
                    execution: exec,
                });
                Outcome::Refined { exec }
            } else {
                Outcome::Stalled
            };
            state = kernel.apply(&state, k, outcome);
        }
        trace.outcome = state.terminal.expect("loop ends on a terminal state");
        if trace.outcome == Terminal::Success {
            trace.winner = (0..kernel.num_skeletons())
                .find(|&m| {
                    let p = &state.skeletons[m];
                    p.refined as usize == kernel.plans()[m].len() && !p.dead
                })
                .map(|m| (m, state.time, state.skeletons[m].exec_total));
        }
        trace.final_state = state;
        Ok(trace)
    }

    /// Runs `n_runs` episodes on up to `threads` workers. The report does
    /// not depend on the thread count, except for timing.
    pub fn evaluate(&self, policy: &dyn Policy, n_runs: u64, seed: u64, threads: usize) -> Result<EvalReport> {
        if n_runs == 0 {
            return Err(Error::OutOfRange { what: "run count", index: 0, limit: 0 });
        }
        let threads = threads.clamp(1, n_runs as usize);
        let chunk = n_runs.div_ceil(threads as u64);
        let run_range = |lo: u64, hi: u64| -> Result<(u64, u64, Duration)> {
            let mut wins = 0;
            let mut decisions = 0;
            let mut time = Duration::ZERO;
            for i in lo..hi {
                let t = self.run_episode(policy, seed.wrapping_add(i))?;
                wins += (t.outcome == Terminal::Success) as u64;
                decisions += t.decisions.len() as u64;
                time += t.decision_time;
            }
            Ok((wins, decisions, time))
        };
        let parts: Vec<Result<(u64, u64, Duration)>> = if threads == 1 {
            vec![run_range(0, n_runs)]
        } else {
            thread::scope(|s| {
                let handles: Vec<_> = (0..threads as u64)
                    .map(|w| {
                        let lo = (w * chunk).min(n_runs);
                        let hi = ((w + 1) * chunk).min(n_runs);
                        s.spawn(move || run_range(lo, hi))
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
            })
        };
        let (mut wins, mut decisions, mut time) = (0, 0, Duration::ZERO);
        for p in parts {
            let (w, d, t) = p?;
            wins += w;
            decisions += d;
            time += t;
        }
        Ok(EvalReport::from_counts(n_runs, wins, seed, decisions, time))
    }
}

pub fn run_episode(inst: &ProblemInstance, policy: &dyn Policy, seed: u64) -> Result<EpisodeTrace> {
    Simulator::new(inst)?.run_episode(policy, seed)
}

/// Single-threaded evaluation over seeds `seed..seed + n_runs`.
pub fn evaluate(inst: &ProblemInstance, policy: &dyn Policy, n_runs: u64, seed: u64) -> Result<EvalReport> {
    Simulator::new(inst)?.evaluate(policy, n_runs, seed, 1)
}
