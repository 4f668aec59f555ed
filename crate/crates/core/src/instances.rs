//! Built-in benchmark instances and a random instance generator.
//!
//! `fig3` is the three-skeleton worked example in full. The five numbered
//! instances and the two robot domains keep reference skeleton counts,
//! sharing structure and deadlines; their distributions are synthetic.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{ActionSpec, DiscreteDist, PlanSkeleton, ProblemInstance};
use crate::prob::ratio;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// Every number is fixed by the reference example.
    Reference,
    /// Structure and deadline follow a reference setting; distributions are synthetic.
    StandIn,
    Synthetic,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Reference => "reference",
            Provenance::StandIn => "stand-in",
            Provenance::Synthetic => "synthetic",
        })
    }
}

#[derive(Clone, Debug)]
pub struct NamedInstance {
    pub name: &'static str,
    pub instance: ProblemInstance,
    pub provenance: Provenance,
    pub summary: &'static str,
}

/// Distribution from integer weights; `never` is the sentinel weight.
fn weights(horizon: u32, atoms: &[(u32, i64)], never: i64) -> DiscreteDist {
    let total: i64 = atoms.iter().map(|a| a.1).sum::<i64>() + never;
    DiscreteDist::from_parts(horizon, atoms.iter().map(|&(t, w)| (t, ratio(w, total))), ratio(never, total))
}

fn action(id: &str, planning: DiscreteDist, execution: DiscreteDist) -> ActionSpec {
    ActionSpec::new(id, planning, execution)
}

fn build(deadline: u32, catalog: Vec<ActionSpec>, skeletons: &[&[&str]]) -> ProblemInstance {
    let skeletons = skeletons.iter().map(|s| PlanSkeleton::new(s.iter().copied())).collect();
    ProblemInstance::checked(deadline, catalog, skeletons).expect("built-in instance is valid")
}

/// The worked example: `σ1 = (d11, d12)`, `σ2 = (d11, d22)`, `σ3 = (d31)`,
/// `D = 5`. The shared first action plans in 1 or 4 steps, the others in
/// 1 step (3 for `d31`); every action executes in 1 or 10 steps.
pub fn fig3() -> ProblemInstance {
    let d = 5;
    let exec = || weights(d, &[(1, 1), (10, 1)], 0);
    build(
        d,
        vec![
            action("d11", weights(d, &[(1, 1), (4, 1)], 0), exec()),
            action("d12", DiscreteDist::point(d, 1), exec()),
            action("d22", DiscreteDist::point(d, 1), exec()),
            action("d31", DiscreteDist::point(d, 3), exec()),
        ],
        &[&["d11", "d12"], &["d11", "d22"], &["d31"]],
    )
}

/// Shared actions; every skeleton has the same total mean.
pub fn instance1() -> ProblemInstance {
    let d = 14;
    let exec = || weights(d, &[(1, 1), (3, 1)], 0);
    build(
        d,
        vec![
            action("a", weights(d, &[(1, 1), (5, 1)], 0), exec()),
            action("b", weights(d, &[(2, 1), (4, 1)], 0), exec()),
            action("c", weights(d, &[(1, 1), (3, 2), (5, 1)], 0), exec()),
            action("e", weights(d, &[(2, 1), (4, 1)], 0), exec()),
            action("f", weights(d, &[(1, 1), (5, 1)], 0), exec()),
            action("g", weights(d, &[(3, 1)], 0), exec()),
        ],
        &[&["a", "b"], &["a", "c"], &["e", "f"], &["e", "g"]],
    )
}

/// Two skeletons with equal means and symmetric planning distributions of
/// different variance.
pub fn instance2() -> ProblemInstance {
    let d = 9;
    let exec = || DiscreteDist::point(d, 1);
    build(
        d,
        vec![
            action("a1", weights(d, &[(2, 1), (3, 2), (4, 1)], 0), exec()),
            action("a2", weights(d, &[(2, 1), (3, 2), (4, 1)], 0), exec()),
            action("b1", weights(d, &[(1, 1), (3, 1), (5, 1)], 0), exec()),
            action("b2", weights(d, &[(1, 1), (3, 1), (5, 1)], 0), exec()),
        ],
        &[&["a1", "a2"], &["b1", "b2"]],
    )
}

/// A shared action, unequal means and heavy-tailed planning.
pub fn instance3() -> ProblemInstance {
    let d = 20;
    let heavy = |w: &[(u32, i64)], never| weights(d, w, never);
    build(
        d,
        vec![
            action("s", heavy(&[(1, 5), (2, 2), (12, 2)], 1), weights(d, &[(1, 3), (3, 1)], 0)),
            action("a", heavy(&[(2, 5), (3, 2), (15, 2)], 1), weights(d, &[(1, 1), (2, 1)], 0)),
            action("b", heavy(&[(1, 6), (4, 2), (18, 1)], 1), weights(d, &[(1, 1), (4, 1)], 0)),
            action("c", heavy(&[(3, 5), (6, 3), (16, 2)], 0), weights(d, &[(2, 1), (6, 1)], 0)),
            action("e", heavy(&[(2, 4), (5, 3), (14, 3)], 0), weights(d, &[(1, 1), (2, 1)], 0)),
            action("f", heavy(&[(4, 5), (9, 4)], 1), weights(d, &[(2, 1), (3, 1)], 0)),
        ],
        &[&["s", "a", "b"], &["s", "c"], &["e", "f"]],
    )
}

/// Like [`instance2`] with asymmetric distributions.
pub fn instance4() -> ProblemInstance {
    let d = 4;
    build(
        d,
        vec![
            action("a", weights(d, &[(1, 5), (2, 1), (3, 4)], 0), weights(d, &[(1, 7), (2, 3)], 0)),
            action("b", weights(d, &[(1, 2), (2, 7), (4, 1)], 0), weights(d, &[(1, 9), (3, 1)], 0)),
        ],
        &[&["a"], &["b"]],
    )
}

/// Contains skeletons that can never be refined. The most promising
/// skeleton either plans its first action in one step or never.
pub fn instance5() -> ProblemInstance {
    let d = 14;
    let unit = || DiscreteDist::point(d, 1);
    let exec = || weights(d, &[(1, 1), (2, 1)], 0);
    build(
        d,
        vec![
            action("u", weights(d, &[(1, 3)], 2), unit()),
            action("v", DiscreteDist::point(d, 1), unit()),
            action("w", weights(d, &[(4, 1)], 1), exec()),
            action("x", weights(d, &[(2, 1), (3, 1)], 0), exec()),
            action("y", DiscreteDist::never(d), exec()),
            action("z", weights(d, &[(1, 1), (2, 1)], 0), exec()),
            action("q", DiscreteDist::never(d), exec()),
        ],
        &[&["u", "v"], &["w", "x"], &["y", "z"], &["u", "q"]],
    )
}

/// Four routes of four room-to-room moves; the second and third share the
/// first move.
pub fn navigation() -> ProblemInstance {
    let d = 22;
    let routes: [[&str; 4]; 4] = [
        ["R1-R2", "R2-R3", "R3-R4", "R4-R13"],
        ["R1-R5", "R5-R6", "R6-R7", "R7-R13"],
        ["R1-R5", "R5-R8", "R8-R9", "R9-R13"],
        ["R1-R10", "R10-R11", "R11-R12", "R12-R13"],
    ];
    let profiles: [&[(u32, i64)]; 4] = [
        &[(1, 4), (2, 3), (4, 2), (9, 1)],
        &[(1, 2), (3, 5), (5, 3)],
        &[(2, 6), (3, 3), (12, 1)],
        &[(1, 5), (2, 3), (6, 1), (15, 1)],
    ];
    let mut catalog: Vec<ActionSpec> = Vec::new();
    for (r, route) in routes.iter().enumerate() {
        for (j, id) in route.iter().enumerate() {
            let id = format!("move({id})");
            if catalog.iter().any(|a| a.id == id) {
                continue;
            }
            let plan = weights(d, profiles[(r + j) % 4], 0);
            let exec = weights(d, &[(1, 3), (2, 2)], 0);
            catalog.push(action(&id, plan, exec));
        }
    }
    let skeletons: Vec<Vec<String>> =
        routes.iter().map(|r| r.iter().map(|id| format!("move({id})")).collect()).collect();
    let refs: Vec<Vec<&str>> = skeletons.iter().map(|s| s.iter().map(String::as_str).collect()).collect();
    let refs: Vec<&[&str]> = refs.iter().map(Vec::as_slice).collect();
    build(d, catalog, &refs)
}

/// Eight pick-and-place sequences that move B1 and B2, optionally clearing
/// neighbouring objects first. Identical prefixes share actions.
pub fn manipulation() -> ProblemInstance {
    let d = 40;
    let seqs: [&[&str]; 8] = [
        &["B1", "B2"],
        &["B1", "B6", "B2"],
        &["B1", "B5", "B2"],
        &["B1", "B5", "B6", "B2"],
        &["B3", "B4", "B1", "B2"],
        &["B3", "B4", "B1", "B6", "B2"],
        &["B3", "B4", "B1", "B5", "B2"],
        &["B3", "B4", "B1", "B5", "B6", "B2"],
    ];
    let target = |obj: &str| match obj {
        "B1" => "R1",
        "B2" => "R2",
        "B3" | "B4" => "C1",
        _ => "C2",
    };
    let mut nodes: BTreeMap<Vec<String>, String> = BTreeMap::new();
    let mut catalog = Vec::new();
    let mut skeletons = Vec::new();
    for seq in seqs {
        let mut prefix: Vec<String> = Vec::new();
        let mut ids = Vec::new();
        let mut moved: Vec<&str> = Vec::new();
        for obj in seq {
            for place in [false, true] {
                let label = if place {
                    format!("place({obj},{})", target(obj))
                } else {
                    format!("pick({obj})")
                };
                prefix.push(label.clone());
                let id = match nodes.get(&prefix) {
                    Some(id) => id.clone(),
                    None => {
                        let id = format!("{}:{label}", nodes.len() + 1);
                        nodes.insert(prefix.clone(), id.clone());
                        let cleared = |o: &str| moved.contains(&o);
                        let plan = match (*obj, place) {
                            (_, true) => weights(d, &[(1, 7), (2, 3)], 0),
                            ("B1", false) if cleared("B3") && cleared("B4") => weights(d, &[(1, 6), (2, 3), (3, 1)], 0),
                            ("B1", false) => weights(d, &[(2, 3), (6, 3), (15, 2)], 2),
                            ("B2", false) => match (cleared("B5"), cleared("B6")) {
                                (true, true) => weights(d, &[(1, 6), (2, 4)], 0),
                                (true, false) | (false, true) => weights(d, &[(1, 3), (3, 4), (8, 2)], 1),
                                (false, false) => weights(d, &[(2, 2), (7, 3), (18, 2)], 3),
                            },
                            _ => weights(d, &[(1, 1), (2, 1)], 0),
                        };
                        catalog.push(action(&id, plan, weights(d, &[(1, 1), (2, 1)], 0)));
                        id
                    }
                };
                ids.push(id);
            }
            moved.push(obj);
        }
        skeletons.push(PlanSkeleton::new(ids));
    }
    ProblemInstance::checked(d, catalog, skeletons).expect("built-in instance is valid")
}

const NAMES: [&str; 8] =
    ["fig3", "instance1", "instance2", "instance3", "instance4", "instance5", "navigation", "manipulation"];

/// Names accepted by [`builtin`].
pub fn names() -> &'static [&'static str] {
    &NAMES
}

/// The five numbered benchmark instances.
pub const FIVE_INSTANCES: [&str; 5] = ["instance1", "instance2", "instance3", "instance4", "instance5"];

pub fn builtin(name: &str) -> Result<NamedInstance> {
    let (name, instance, provenance, summary) = match name {
        "fig3" => ("fig3", fig3(), Provenance::Reference, "three skeletons, shared first action, D=5"),
        "instance1" => ("instance1", instance1(), Provenance::StandIn, "shared actions, equal means, D=14"),
        "instance2" => ("instance2", instance2(), Provenance::StandIn, "equal means, different variance, D=9"),
        "instance3" => ("instance3", instance3(), Provenance::StandIn, "shared action, heavy tails, D=20"),
        "instance4" => ("instance4", instance4(), Provenance::StandIn, "asymmetric distributions, D=4"),
        "instance5" => ("instance5", instance5(), Provenance::StandIn, "infeasible skeletons, D=14"),
        "navigation" => ("navigation", navigation(), Provenance::StandIn, "four routes, D=22"),
        "manipulation" => ("manipulation", manipulation(), Provenance::StandIn, "eight sequences, D=40"),
        other => return Err(Error::UnknownInstance(other.to_string())),
    };
    Ok(NamedInstance { name, instance, provenance, summary })
}

/// Size ranges for [`random_instance`].
#[derive(Clone, Debug)]
pub struct RandomSpec {
    pub skeletons: RangeInclusive<usize>,
    pub actions: RangeInclusive<usize>,
    pub deadline: RangeInclusive<u32>,
    /// Make the second skeleton reuse the first skeleton's first action.
    pub sharing: bool,
    /// Allow sentinel mass in planning and execution distributions.
    pub never_mass: bool,
}

impl Default for RandomSpec {
    fn default() -> Self {
        Self { skeletons: 1..=3, actions: 1..=2, deadline: 2..=8, sharing: true, never_mass: true }
    }
}

fn random_dist<R: Rng>(rng: &mut R, horizon: u32, max_step: u32, allow_never: bool) -> DiscreteDist {
    let n_atoms = rng.gen_range(1..=3);
    let mut atoms = Vec::new();
    for _ in 0..n_atoms {
        atoms.push((rng.gen_range(1..=max_step.max(1)), rng.gen_range(1..=4i64)));
    }
    let never = if allow_never && rng.gen_bool(0.25) { rng.gen_range(1..=2) } else { 0 };
    weights(horizon, &atoms, never)
}

/// Deterministic random instance. With `sharing` and at least two
/// skeletons, the first two skeletons share their first action; all
/// sharing is prefix-shaped.
pub fn random_instance(seed: u64, spec: &RandomSpec) -> ProblemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.gen_range(spec.deadline.clone());
    let k = rng.gen_range(spec.skeletons.clone());
    let mut catalog = Vec::new();
    let mut skeletons: Vec<PlanSkeleton> = Vec::new();
    for s in 0..k {
        let len = rng.gen_range(spec.actions.clone());
        let mut ids = Vec::new();
        for j in 0..len {
            if spec.sharing && s == 1 && j == 0 {
                ids.push(skeletons[0].actions[0].clone());
                continue;
            }
            let id = format!("k{}a{}", s + 1, j + 1);
            let plan = random_dist(&mut rng, d, d.div_ceil(2).max(1), spec.never_mass);
            let exec_never = spec.never_mass && rng.gen_bool(0.3);
            let exec = random_dist(&mut rng, d, (d / 2).max(1), exec_never);
            catalog.push(ActionSpec::new(id.clone(), plan, exec));
            ids.push(id);
        }
        skeletons.push(PlanSkeleton::new(ids));
    }
    ProblemInstance::checked(d, catalog, skeletons).expect("generator produces valid instances")
}
