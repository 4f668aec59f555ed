use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::model::DiscreteDist;
use crate::prob::{int, Rational};

/// Maximum-likelihood categorical fit with optional Laplace smoothing.
///
/// Categories are the steps `1..=horizon` plus the sentinel `horizon + 1`;
/// durations past the horizon count toward the sentinel. Category `c` gets
/// `(count(c) + alpha) / (n + alpha * (horizon + 1))`.
pub fn estimate_dist(samples: &[u32], horizon: u32, alpha: &Rational) -> Result<DiscreteDist> {
    if alpha.is_negative() {
        return Err(Error::Parse("smoothing weight must be non-negative".into()));
    }
    if samples.is_empty() && alpha.is_zero() {
        return Err(Error::EmptyEstimate);
    }
    let mut counts = vec![0u64; horizon as usize + 2];
    for &s in samples {
        if s == 0 {
            return Err(Error::InvalidSample(s));
        }
        counts[s.min(horizon + 1) as usize] += 1;
    }
    let denom = int(samples.len() as i64) + alpha * int(horizon as i64 + 1);
    let p = |c: u64| (int(c as i64) + alpha) / &denom;
    let atoms = (1..=horizon).map(|t| (t, p(counts[t as usize])));
    Ok(DiscreteDist::from_parts(horizon, atoms, p(counts[horizon as usize + 1])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::ratio;

    #[test]
    fn frequency_counts() {
        let d = estimate_dist(&[1, 1, 4, 4], 5, &int(0)).unwrap();
        assert_eq!(d, DiscreteDist::from_parts(5, [(1, ratio(1, 2)), (4, ratio(1, 2))], int(0)));
    }

    #[test]
    fn laplace_smoothing() {
        let d = estimate_dist(&[1, 1, 4, 4], 4, &int(1)).unwrap();
        assert_eq!(d.prob(1), ratio(3, 9));
        assert_eq!(d.prob(2), ratio(1, 9));
        assert_eq!(d.prob(3), ratio(1, 9));
        assert_eq!(d.prob(4), ratio(3, 9));
        assert_eq!(*d.never_mass(), ratio(1, 9));
        assert!(d.check().is_none());
    }

    #[test]
    fn long_durations_go_to_sentinel() {
        let d = estimate_dist(&[7, 9], 5, &int(0)).unwrap();
        assert_eq!(*d.never_mass(), int(1));
    }

    #[test]
    fn empty_without_smoothing_fails() {
        assert!(matches!(estimate_dist(&[], 5, &int(0)), Err(Error::EmptyEstimate)));
        let d = estimate_dist(&[], 2, &int(1)).unwrap();
        assert_eq!(d.prob(1), ratio(1, 3));
        assert!(matches!(estimate_dist(&[0], 5, &int(0)), Err(Error::InvalidSample(0))));
    }
}
