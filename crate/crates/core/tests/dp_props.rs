use effort_alloc::instances::{random_instance, RandomSpec};
use effort_alloc::mdp::{exact_value, policy_value, Kernel, DEFAULT_STATE_CAP};
use effort_alloc::policies::{dp_policy, DpModel, DpPolicy, Memory, PolicyKind};
use effort_alloc::prob::ratio;
use effort_alloc::{ActionSpec, DiscreteDist, PlanSkeleton, ProblemInstance, Rational};
use num_traits::{One, Zero};
use proptest::prelude::*;

fn small() -> RandomSpec {
    RandomSpec { skeletons: 1..=3, actions: 1..=2, deadline: 2..=7, ..RandomSpec::default() }
}

/// Single-action skeletons over disjoint actions with zero execution time.
fn knapsack_like() -> impl Strategy<Value = ProblemInstance> {
    (2u32..=6)
        .prop_flat_map(|d| (Just(d), prop::collection::vec((1..=d + 2, 1i64..=3, 0i64..=3), 1..=3)))
        .prop_map(|(d, items)| {
            let mut catalog = Vec::new();
            let mut skeletons = Vec::new();
            for (i, (t, hit, miss)) in items.into_iter().enumerate() {
                let id = format!("a{i}");
                let total = hit + miss;
                let plan = DiscreteDist::from_parts(d, [(t, ratio(hit, total))], ratio(miss, total));
                catalog.push(ActionSpec::new(id.clone(), plan, DiscreteDist::point(d, 0)));
                skeletons.push(PlanSkeleton::new([id]));
            }
            ProblemInstance::checked(d, catalog, skeletons).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ps_is_a_probability_and_decreases_with_time(seed in any::<u64>()) {
        let inst = random_instance(seed, &small());
        let model = DpModel::<Rational>::new(&inst).unwrap();
        let mut solver = model.solver();
        let d = inst.deadline();
        for k in 0..inst.num_skeletons() {
            for l in 0..=inst.skeletons()[k].len() {
                for ct in 0..=d {
                    for et in 0..=d {
                        let v = solver.ps(k, l, ct, et).unwrap();
                        prop_assert!(v >= Rational::zero() && v <= Rational::one());
                        if ct > 0 {
                            prop_assert!(solver.ps(k, l, ct - 1, et).unwrap() >= v);
                        }
                        if et > 0 {
                            prop_assert!(solver.ps(k, l, ct, et - 1).unwrap() >= v);
                        }
                    }
                }
            }
        }
        for (_, v) in solver.table().entries() {
            prop_assert!(*v >= Rational::zero() && *v <= Rational::one());
        }
    }

    #[test]
    fn committed_policy_earns_its_root_value(seed in any::<u64>()) {
        let inst = random_instance(seed, &small());
        let (_, ps) = dp_policy::<Rational>(&inst).unwrap();
        let kernel = Kernel::<Rational>::new(&inst).unwrap();
        let v = policy_value(&kernel, &DpPolicy::new(&inst).unwrap(), DEFAULT_STATE_CAP).unwrap();
        prop_assert!(v >= ps, "policy value {} below its root score {}", v, ps);
    }

    #[test]
    fn rerun_never_trails_the_committed_policy(seed in any::<u64>()) {
        let inst = random_instance(seed, &small());
        let kernel = Kernel::<Rational>::new(&inst).unwrap();
        let dp = policy_value(&kernel, PolicyKind::Dp.build(&inst).unwrap().as_ref(), DEFAULT_STATE_CAP).unwrap();
        let rerun = policy_value(&kernel, PolicyKind::DpRerun.build(&inst).unwrap().as_ref(), DEFAULT_STATE_CAP).unwrap();
        prop_assert!(rerun >= dp, "dp-rerun {} < dp {}", rerun, dp);
    }

    #[test]
    fn dp_is_optimal_when_one_skeleton_fits(inst in knapsack_like()) {
        let fits = inst.catalog().iter().filter(|a| a.planning.cdf(inst.deadline()) > Rational::zero()).count();
        prop_assume!(fits == 1);
        let (_, ps) = dp_policy::<Rational>(&inst).unwrap();
        prop_assert_eq!(ps, exact_value::<Rational>(&inst, DEFAULT_STATE_CAP).unwrap().value);
    }

    #[test]
    fn decisions_replay_identically(seed in any::<u64>()) {
        let inst = random_instance(seed, &small());
        let kernel = Kernel::<f64>::new(&inst).unwrap();
        let root = kernel.initial_state();
        for kind in [PolicyKind::Dp, PolicyKind::DpRerun, PolicyKind::Greedy { static_scores: false }, PolicyKind::RoundRobin] {
            let a = kind.build(&inst).unwrap();
            let b = kind.build(&inst).unwrap();
            let mut ma = Memory::default();
            let mut mb = Memory::default();
            let mut s = root.clone();
            while let Some(d) = a.decide(&s, &mut ma).unwrap() {
                prop_assert_eq!(Some(d), b.decide(&s, &mut mb).unwrap());
                let succ = kernel.successors(&s, d.skeleton).unwrap();
                s = succ.last().unwrap().next.clone();
                if s.is_terminal() {
                    break;
                }
            }
        }
    }
}
