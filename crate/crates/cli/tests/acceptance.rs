//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::process::{Command, ExitCode};
use std::thread;
use std::time::{Duration, Instant};

use effort_alloc::instances::{self, random_instance, RandomSpec};
use effort_alloc::mcts::{mcts_search, Budget, MctsConfig, MctsPolicy};
use effort_alloc::mdp::{exact_value, policy_value, Kernel, DEFAULT_STATE_CAP};
use effort_alloc::model::estimate_dist;
use effort_alloc::policies::{dp_policy, DpPolicy, DpRerunPolicy, PolicyKind};
use effort_alloc::prob::{int, ratio};
use effort_alloc::reduction::{knapsack_oracle, reduce, subset_success, KnapsackInstance};
use effort_alloc::sim::{EvalReport, Simulator};
use effort_alloc::{DiscreteDist, Policy, ProblemInstance, Rational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Check + 'a>);

fn threads() -> usize {
    thread::available_parallelism().map_or(4, |n| n.get())
}

fn eval(inst: &ProblemInstance, policy: &dyn Policy, n: u64, seed: u64) -> EvalReport {
    Simulator::new(inst).unwrap().evaluate(policy, n, seed, threads()).unwrap()
}

fn random_set(count: u64) -> Vec<ProblemInstance> {
    let spec = RandomSpec { skeletons: 1..=3, actions: 1..=2, deadline: 2..=8, ..RandomSpec::default() };
    (0..count).map(|s| random_instance(1_000 + s, &spec)).collect()
}

fn mcts(budget: u64, c: f64, cache: bool) -> PolicyKind {
    PolicyKind::Mcts(MctsConfig { budget: Budget::Iterations(budget), c, seed: 7, cache })
}

fn exact_figure_cli() -> Check {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_effort-alloc"))
        .args(["exact", "--builtin", "fig3"])
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let text = String::from_utf8_lossy(&out.stdout);
    let ok = out.status.success()
        && text.lines().any(|l| l.starts_with("value: 9/16 "))
        && text.lines().any(|l| l == "root action: a_1")
        && elapsed < Duration::from_secs(1);
    let msg = format!("value 9/16, root a_1, {:.0} ms", elapsed.as_secs_f64() * 1e3);
    if ok { Ok(msg) } else { Err(format!("{msg}; output: {}", text.trim())) }
}

fn dp_gap_on_figure() -> Check {
    let inst = instances::fig3();
    let (k, ps) = dp_policy::<Rational>(&inst).map_err(|e| e.to_string())?;
    let r = eval(&inst, &DpPolicy::new(&inst).unwrap(), 100_000, 0);
    let msg = format!("dp picks skeleton {} with PS {}, simulated {:.4}", k + 1, ps, r.success_rate);
    if k == 2 && ps == ratio(1, 2) && (r.success_rate - 0.5).abs() <= 0.005 { Ok(msg) } else { Err(msg) }
}

fn mcts_converges_on_figure() -> Check {
    let inst = instances::fig3();
    let kernel = Kernel::<f64>::new(&inst).unwrap();
    let root = kernel.initial_state();
    let values: Vec<f64> = thread::scope(|s| {
        let handles: Vec<_> = (0..20u64)
            .map(|seed| {
                let (kernel, root) = (&kernel, &root);
                s.spawn(move || mcts_search(kernel, root, Budget::Iterations(500_000), 0.5, seed).unwrap().root_value)
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let policy = mcts(200_000, 0.5, true).build(&inst).unwrap();
    let r = eval(&inst, policy.as_ref(), 100_000, 0);
    let msg = format!("mean root value {mean:.4}, policy success {:.4}", r.success_rate);
    if (mean - 0.5625).abs() <= 0.02 && (r.success_rate - 0.5625).abs() <= 0.01 { Ok(msg) } else { Err(msg) }
}

fn oracle_dominance(set: &[ProblemInstance]) -> Check {
    let kinds = [PolicyKind::Dp, PolicyKind::DpRerun, PolicyKind::Greedy { static_scores: false }, PolicyKind::RoundRobin, mcts(10_000, 0.5, true)];
    let mut worst = f64::INFINITY;
    for (i, inst) in set.iter().enumerate() {
        let best = exact_value::<f64>(inst, DEFAULT_STATE_CAP).unwrap().value;
        for kind in &kinds {
            let r = eval(inst, kind.build(inst).unwrap().as_ref(), 20_000, 0);
            let slack = best - (r.success_rate - 3.0 * r.std_error());
            worst = worst.min(slack);
            if slack < -1e-9 {
                return Err(format!("instance {i}: {kind} estimate {:.4} exceeds optimum {best:.4} by more than 3 SE", r.success_rate));
            }
        }
    }
    Ok(format!("{} instances x {} policies, smallest margin {worst:.4}", set.len(), kinds.len()))
}

fn rerun_dominates_dp(set: &[ProblemInstance]) -> Check {
    let mut cases: Vec<(String, ProblemInstance)> = set.iter().enumerate().map(|(i, x)| (format!("random {i}"), x.clone())).collect();
    cases.push(("instance3".into(), instances::instance3()));
    cases.push(("instance5".into(), instances::instance5()));
    let mut strict = Vec::new();
    for (name, inst) in &cases {
        let dp = eval(inst, &DpPolicy::new(inst).unwrap(), 20_000, 0);
        let rerun = eval(inst, &DpRerunPolicy::new(inst).unwrap(), 20_000, 0);
        let se = (dp.std_error().powi(2) + rerun.std_error().powi(2)).sqrt();
        let gap = rerun.success_rate - dp.success_rate;
        if gap < -3.0 * se {
            return Err(format!("{name}: dp-rerun {:.4} < dp {:.4} by more than 3 SE", rerun.success_rate, dp.success_rate));
        }
        let infeasible = inst.catalog().iter().any(|a| a.planning.sentinel_mass() > int(0));
        if infeasible && gap > 3.0 * se {
            strict.push(format!("{name} ({:.3} vs {:.3})", rerun.success_rate, dp.success_rate));
        }
    }
    let msg = format!("{} instances; strict gaps: {}", cases.len(), strict.join(", "));
    if strict.iter().any(|s| s.starts_with("instance5")) { Ok(msg) } else { Err(msg) }
}

fn knapsack_bounds() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut subsets_checked = 0;
    for case in 0..100 {
        let k = rng.gen_range(1..=6);
        let cap = rng.gen_range(1..=10);
        let items = (0..k).map(|_| (rng.gen_range(1..=12), rng.gen_range(1..=5))).collect();
        let ks = KnapsackInstance::new(items, cap).unwrap();
        let red = reduce(&ks, 0).unwrap();
        let eps = red.epsilon.clone();
        let mut best = (Rational::from_integer(0.into()), 0u64);
        for mask in 0u32..1 << k {
            let s: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
            if s.iter().map(|&i| ks.items[i].0).sum::<u32>() > cap {
                continue;
            }
            subsets_checked += 1;
            let p = subset_success(&red, &s).unwrap();
            let v: u64 = s.iter().map(|&i| ks.items[i].1 as u64).sum();
            let lower_ok = s.is_empty() || &eps * (int(v as i64) - int(1)) < p;
            if !lower_ok || p > &eps * int(v as i64) {
                return Err(format!("case {case}: bounds violated for subset {s:?}"));
            }
            if p > best.0 {
                best = (p, v);
            }
        }
        if best.1 != knapsack_oracle(&ks) {
            return Err(format!("case {case}: best subset value {} but optimum {}", best.1, knapsack_oracle(&ks)));
        }
    }
    Ok(format!("100 instances, {subsets_checked} feasible subsets"))
}

fn simulator_matches_mdp() -> Check {
    let spec = RandomSpec { skeletons: 1..=3, actions: 1..=2, deadline: 2..=6, ..RandomSpec::default() };
    let kinds = [
        PolicyKind::Exact,
        PolicyKind::Dp,
        PolicyKind::DpRerun,
        PolicyKind::Greedy { static_scores: false },
        PolicyKind::Greedy { static_scores: true },
        PolicyKind::RoundRobin,
    ];
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let inst = random_instance(5_000 + seed, &spec);
        let kernel = Kernel::<f64>::new(&inst).unwrap();
        for kind in &kinds {
            let policy = kind.build(&inst).unwrap();
            let v = policy_value(&kernel, policy.as_ref(), DEFAULT_STATE_CAP).unwrap();
            let r = eval(&inst, policy.as_ref(), 50_000, seed);
            let se = (v * (1.0 - v) / 50_000.0).sqrt();
            let z = if se == 0.0 { (r.success_rate - v).abs() * f64::INFINITY } else { (r.success_rate - v).abs() / se };
            let z = if z.is_nan() { 0.0 } else { z };
            worst = worst.max(z);
            if z > 3.0 {
                return Err(format!("seed {seed} {kind}: simulated {:.4} vs exact {v:.4}", r.success_rate));
            }
        }
    }
    Ok(format!("20 instances x {} policies, largest |z| {worst:.2}", kinds.len()))
}

/// Cheapest MCTS configuration whose success interval overlaps DP_Rerun's.
fn matching_mcts(inst: &ProblemInstance, target: &EvalReport, n: u64) -> Option<(u64, f64, EvalReport)> {
    for budget in [100, 300, 1_000, 3_000, 10_000, 30_000] {
        for c in [0.5, 1.0, 1.5, 2.0] {
            let r = eval(inst, mcts(budget, c, true).build(inst).unwrap().as_ref(), n, 0);
            if (r.success_rate - target.success_rate).abs() <= r.ci95_halfwidth + target.ci95_halfwidth {
                return Some((budget, c, r));
            }
        }
    }
    None
}

fn timing_order() -> Check {
    let mut lines = Vec::new();
    let mut ok = true;
    for name in instances::FIVE_INSTANCES {
        let inst = instances::builtin(name).unwrap().instance;
        let rerun = DpRerunPolicy::new(&inst).unwrap();
        let calib = eval(&inst, &rerun, 2_000, 0);
        let Some((budget, c, found)) = matching_mcts(&inst, &calib, 2_000) else {
            ok = false;
            lines.push(format!("{name}: no MCTS configuration matched {:.3}", calib.success_rate));
            continue;
        };
        let sim = Simulator::new(&inst).unwrap();
        let timed = MctsPolicy::new(&inst, MctsConfig { budget: Budget::Iterations(budget), c, seed: 7, cache: false }).unwrap();
        let t_mcts = sim.evaluate(&timed, 500, 0, 1).unwrap().decision_time;
        let t_rerun = sim.evaluate(&rerun, 500, 0, 1).unwrap().decision_time;
        let ratio = t_mcts.as_secs_f64() / t_rerun.as_secs_f64().max(1e-9);
        ok &= ratio >= 100.0;
        lines.push(format!(
            "{name}: mcts@{budget} C={c} {:.3} vs dp-rerun {:.3}, time ratio {ratio:.0}x",
            found.success_rate, calib.success_rate
        ));
    }
    if ok { Ok(lines.join("; ")) } else { Err(lines.join("; ")) }
}

fn estimate_recovers_pmf() -> Check {
    let truth = DiscreteDist::from_parts(6, [(1, ratio(1, 5)), (3, ratio(1, 2))], ratio(3, 10));
    let cats = truth.to_f64_categories();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let samples: Vec<u32> = (0..100_000)
        .map(|_| {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            cats.iter()
                .position(|p| {
                    acc += p;
                    u < acc
                })
                .unwrap_or(cats.len() - 1) as u32
        })
        .collect();
    let fit = estimate_dist(&samples, 6, &int(0)).map_err(|e| e.to_string())?;
    let tv = fit.total_variation(&truth);
    if tv < 0.01 { Ok(format!("total variation {tv:.4}")) } else { Err(format!("total variation {tv:.4}")) }
}

fn main() -> ExitCode {
    let set = random_set(50);
    let criteria: Vec<Criterion> = vec![
        ("1 exact value of the figure instance", Box::new(exact_figure_cli)),
        ("2 dp suboptimality on the figure instance", Box::new(dp_gap_on_figure)),
        ("3 mcts convergence", Box::new(mcts_converges_on_figure)),
        ("4 oracle dominance", Box::new(|| oracle_dominance(&set))),
        ("5 dp-rerun dominates dp", Box::new(|| rerun_dominates_dp(&set))),
        ("6 knapsack reduction bounds", Box::new(knapsack_bounds)),
        ("7 simulator matches mdp", Box::new(simulator_matches_mdp)),
        ("8 dp-rerun decision time order", Box::new(timing_order)),
        ("9 table and timing reproduction", Box::new(|| Ok("not applicable, excluded".into()))),
        ("10 distribution estimation", Box::new(estimate_recovers_pmf)),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        let start = Instant::now();
        let (tag, detail) = match check() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {name}: {tag} ({detail}) [{:.1}s]", start.elapsed().as_secs_f64());
    }
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
