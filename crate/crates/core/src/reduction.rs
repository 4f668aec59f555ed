//! Knapsack to effort-allocation reduction.
//!
//! Item `k = (w, v)` becomes a single-action skeleton whose planning
//! completes at step `w` with probability `εv` and otherwise never; the
//! deadline is the capacity `W`. A feasible subset of items is a schedule
//! that plans each chosen action to completion in turn, and its success
//! probability `1 - Π(1 - εv)` is squeezed between `ε(Σv - 1)` and `εΣv`.
//! With `ε = 1 / (H² K³)`, `H = max v`, the best schedule therefore picks
//! an optimal knapsack subset.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::model::{ActionSpec, DiscreteDist, PlanSkeleton, ProblemInstance};
use crate::prob::{int, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KnapsackInstance {
    /// `(weight, value)` pairs.
    pub items: Vec<(u32, u32)>,
    pub capacity: u32,
}

impl KnapsackInstance {
    pub fn new(items: Vec<(u32, u32)>, capacity: u32) -> Result<Self> {
        let ks = Self { items, capacity };
        ks.check()?;
        Ok(ks)
    }

    fn check(&self) -> Result<()> {
        if self.items.is_empty() {
            return Err(Error::InvalidKnapsack("no items".into()));
        }
        if self.capacity == 0 {
            return Err(Error::InvalidKnapsack("capacity must be at least 1".into()));
        }
        if let Some(i) = self.items.iter().position(|&(w, v)| w == 0 || v == 0) {
            return Err(Error::InvalidKnapsack(format!("item {} needs positive weight and value", i + 1)));
        }
        Ok(())
    }

    /// Parses `"w:v,w:v,..."`.
    pub fn parse_items(text: &str) -> Result<Vec<(u32, u32)>> {
        text.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|pair| {
                let bad = || Error::Parse(format!("expected weight:value, got `{pair}`"));
                let (w, v) = pair.split_once(':').ok_or_else(bad)?;
                Ok((w.trim().parse().map_err(|_| bad())?, v.trim().parse().map_err(|_| bad())?))
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct Reduction {
    pub instance: ProblemInstance,
    pub epsilon: Rational,
    pub knapsack: KnapsackInstance,
}

/// `ε = 1 / (H² K³)` with `H` the largest value and `K` the item count.
pub fn epsilon(ks: &KnapsackInstance) -> Rational {
    let h = ks.items.iter().map(|&(_, v)| v).max().unwrap_or(1) as i64;
    let k = ks.items.len() as i64;
    Rational::new(1.into(), (h * h * k * k * k).into())
}

/// Builds the effort-allocation instance for `ks`. Every action executes in
/// exactly `exec_time` steps and the deadline is `W + exec_time`.
pub fn reduce(ks: &KnapsackInstance, exec_time: u32) -> Result<Reduction> {
    ks.check()?;
    let eps = epsilon(ks);
    let d = ks.capacity + exec_time;
    let mut catalog = Vec::new();
    let mut skeletons = Vec::new();
    for (i, &(w, v)) in ks.items.iter().enumerate() {
        let id = format!("item{}", i + 1);
        let planning = if w <= ks.capacity {
            let p = &eps * int(v as i64);
            DiscreteDist::from_parts(d, [(w, p.clone())], Rational::one() - p)
        } else {
            DiscreteDist::never(d)
        };
        catalog.push(ActionSpec::new(id.clone(), planning, DiscreteDist::point(d, exec_time)));
        skeletons.push(PlanSkeleton::new([id]));
    }
    let instance = ProblemInstance::checked(d, catalog, skeletons)?;
    Ok(Reduction { instance, epsilon: eps, knapsack: ks.clone() })
}

/// Success probability of planning the chosen items one after another:
/// `1 - Π(1 - p_m)`, with `p_m` read from each item's planning distribution.
pub fn subset_success(red: &Reduction, subset: &[usize]) -> Result<Rational> {
    let items = &red.knapsack.items;
    let mut weight = 0u64;
    let mut fail = Rational::one();
    for &m in subset {
        let &(w, _) = items.get(m).ok_or(Error::OutOfRange { what: "item", index: m, limit: items.len() })?;
        weight += w as u64;
        let planning = &red.instance.catalog()[m].planning;
        fail *= Rational::one() - planning.prob(w);
    }
    if weight > red.knapsack.capacity as u64 {
        return Err(Error::InfeasibleSubset { weight, capacity: red.knapsack.capacity });
    }
    if subset.is_empty() {
        return Ok(Rational::zero());
    }
    Ok(Rational::one() - fail)
}

/// Optimal 0/1 knapsack value by the weight-indexed dynamic program.
pub fn knapsack_oracle(ks: &KnapsackInstance) -> u64 {
    let cap = ks.capacity as usize;
    let mut best = vec![0u64; cap + 1];
    for &(w, v) in &ks.items {
        let w = w as usize;
        if w > cap {
            continue;
        }
        for c in (w..=cap).rev() {
            best[c] = best[c].max(best[c - w] + v as u64);
        }
    }
    best[cap]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{exact_value, DEFAULT_STATE_CAP};
    use crate::prob::ratio;

    #[test]
    fn single_item() {
        let ks = KnapsackInstance::new(vec![(2, 3)], 2).unwrap();
        let red = reduce(&ks, 0).unwrap();
        assert_eq!(red.epsilon, ratio(1, 9));
        assert_eq!(red.instance.deadline(), 2);
        let p = &red.instance.catalog()[0].planning;
        assert_eq!(p.cdf(1), ratio(0, 1));
        assert_eq!(p.cdf(2), ratio(1, 3));
        assert_eq!(p.cdf(3), ratio(1, 1));
        assert_eq!(subset_success(&red, &[0]).unwrap(), ratio(1, 3));
        assert_eq!(subset_success(&red, &[]).unwrap(), ratio(0, 1));
    }

    #[test]
    fn two_unit_items() {
        let ks = KnapsackInstance::new(vec![(1, 1), (1, 1)], 2).unwrap();
        let red = reduce(&ks, 0).unwrap();
        assert_eq!(red.epsilon, ratio(1, 8));
        assert_eq!(subset_success(&red, &[0, 1]).unwrap(), ratio(15, 64));
        let v = exact_value::<Rational>(&red.instance, DEFAULT_STATE_CAP).unwrap().value;
        assert_eq!(v, ratio(15, 64));
    }

    #[test]
    fn nothing_fits() {
        let ks = KnapsackInstance::new(vec![(5, 1)], 4).unwrap();
        let red = reduce(&ks, 0).unwrap();
        assert_eq!(red.instance.catalog()[0].planning.cdf(4), ratio(0, 1));
        assert_eq!(exact_value::<Rational>(&red.instance, DEFAULT_STATE_CAP).unwrap().value, ratio(0, 1));
        assert!(matches!(subset_success(&red, &[0]), Err(Error::InfeasibleSubset { weight: 5, capacity: 4 })));
    }

    #[test]
    fn oracle_examples() {
        let ks = KnapsackInstance { items: vec![(2, 3), (3, 4), (4, 5)], capacity: 5 };
        assert_eq!(knapsack_oracle(&ks), 7);
        assert_eq!(knapsack_oracle(&KnapsackInstance { items: vec![(3, 9)], capacity: 3 }), 9);
        assert_eq!(knapsack_oracle(&KnapsackInstance { items: vec![(3, 9)], capacity: 0 }), 0);
    }

    #[test]
    fn constant_execution_shifts_the_deadline() {
        let ks = KnapsackInstance::new(vec![(1, 1), (1, 1)], 2).unwrap();
        let red = reduce(&ks, 3).unwrap();
        assert_eq!(red.instance.deadline(), 5);
        let v = exact_value::<Rational>(&red.instance, DEFAULT_STATE_CAP).unwrap().value;
        assert_eq!(v, ratio(15, 64));
    }

    #[test]
    fn item_parsing() {
        assert_eq!(KnapsackInstance::parse_items("2:3,3:4, 4:5").unwrap(), vec![(2, 3), (3, 4), (4, 5)]);
        assert!(KnapsackInstance::parse_items("2-3").is_err());
        assert!(KnapsackInstance::new(vec![(0, 1)], 3).is_err());
    }
}
