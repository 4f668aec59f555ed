use std::fmt;

use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::prob::{format_rational, int, Rational};

/// Mass-sum tolerance accepted by validation.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// A distribution over whole time steps plus a "never within the deadline"
/// sentinel.
///
/// `horizon` is the deadline `D`; the sentinel is category `D + 1`. Atoms at
/// steps beyond the horizon may be stored explicitly (they matter for means)
/// but behave like the sentinel everywhere else. Step 0 is permitted for
/// execution times; planning distributions must not use it.
#[derive(Clone, PartialEq, Eq)]
pub struct DiscreteDist {
    horizon: u32,
    pmf: Vec<Rational>,
    never: Rational,
}

impl DiscreteDist {
    /// Builds a distribution without checking normalisation. Repeated steps
    /// accumulate.
    pub fn from_parts(
        horizon: u32,
        atoms: impl IntoIterator<Item = (u32, Rational)>,
        never: Rational,
    ) -> Self {
        let mut pmf: Vec<Rational> = Vec::new();
        for (step, p) in atoms {
            let idx = step as usize;
            if pmf.len() <= idx {
                pmf.resize(idx + 1, Rational::zero());
            }
            pmf[idx] += p;
        }
        let mut dist = Self { horizon, pmf, never };
        dist.trim();
        dist
    }

    /// Builds and validates a distribution; `name` labels errors.
    pub fn new(
        name: &str,
        horizon: u32,
        atoms: impl IntoIterator<Item = (u32, Rational)>,
        never: Rational,
    ) -> Result<Self> {
        let dist = Self::from_parts(horizon, atoms, never);
        match dist.check() {
            None => Ok(dist),
            Some(reason) => Err(Error::InvalidDistribution { name: name.to_string(), reason }),
        }
    }

    /// Point mass at `step`.
    pub fn point(horizon: u32, step: u32) -> Self {
        Self::from_parts(horizon, [(step, int(1))], Rational::zero())
    }

    /// All mass on the sentinel.
    pub fn never(horizon: u32) -> Self {
        Self::from_parts(horizon, [], int(1))
    }

    fn trim(&mut self) {
        while self.pmf.last().is_some_and(Zero::is_zero) {
            self.pmf.pop();
        }
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    /// Explicit sentinel mass (excludes late atoms).
    pub fn never_mass(&self) -> &Rational {
        &self.never
    }

    /// Mass of the sentinel category: explicit never mass plus late atoms.
    pub fn sentinel_mass(&self) -> Rational {
        let late: Rational = self.pmf.iter().skip(self.horizon as usize + 1).sum();
        late + &self.never
    }

    pub fn prob(&self, step: u32) -> Rational {
        self.pmf.get(step as usize).cloned().unwrap_or_else(Rational::zero)
    }

    /// Largest explicit step carrying mass.
    pub fn max_step(&self) -> Option<u32> {
        self.pmf.len().checked_sub(1).map(|s| s as u32)
    }

    /// Non-zero atoms in increasing step order.
    pub fn atoms(&self) -> impl Iterator<Item = (u32, &Rational)> + '_ {
        self.pmf
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.is_zero())
            .map(|(t, p)| (t as u32, p))
    }

    pub fn total_mass(&self) -> Rational {
        self.pmf.iter().sum::<Rational>() + &self.never
    }

    /// Returns the reason this is not a valid distribution, if any.
    pub fn check(&self) -> Option<String> {
        if self.never.is_negative() {
            return Some("negative never mass".into());
        }
        if let Some((t, p)) = self.pmf.iter().enumerate().find(|(_, p)| p.is_negative()) {
            return Some(format!("negative probability {} at step {t}", format_rational(p)));
        }
        let total = self.total_mass();
        let gap = (&total - int(1)).abs().to_f64().unwrap_or(f64::INFINITY);
        if gap > SUM_TOLERANCE {
            return Some(format!("probabilities sum to {}, expected 1", format_rational(&total)));
        }
        None
    }

    /// `P(T <= t)`. Everything past the horizon is lumped into the sentinel,
    /// so the CDF reaches 1 at `horizon + 1`.
    pub fn cdf(&self, t: u32) -> Rational {
        if t > self.horizon {
            return int(1);
        }
        self.pmf.iter().take(t as usize + 1).sum()
    }

    /// CDF breakpoints: one point per atom inside the horizon, then the
    /// closing point `(horizon + 1, 1)`.
    pub fn cdf_points(&self) -> Vec<(u32, Rational)> {
        let mut acc = Rational::zero();
        let mut out = Vec::new();
        for (t, p) in self.atoms() {
            if t > self.horizon {
                break;
            }
            acc += p;
            out.push((t, acc.clone()));
        }
        out.push((self.horizon + 1, int(1)));
        out
    }

    /// Differences a CDF given as `(step, cumulative)` breakpoints.
    ///
    /// Increments at steps past `horizon` fold into the sentinel. When the
    /// last breakpoint lies past the horizon, any mass the CDF never reaches
    /// is also sentinel mass; otherwise the CDF must end at 1.
    pub fn pmf_from_cdf(name: &str, horizon: u32, points: &[(u32, Rational)]) -> Result<Self> {
        let invalid = |reason: String| Error::InvalidDistribution { name: name.to_string(), reason };
        let mut prev_step: Option<u32> = None;
        let mut prev = Rational::zero();
        let mut atoms = Vec::new();
        let mut never = Rational::zero();
        for (step, c) in points {
            if prev_step.is_some_and(|s| *step <= s) {
                return Err(invalid(format!("CDF steps must increase (step {step})")));
            }
            if c.is_negative() || *c > int(1) {
                return Err(invalid(format!("CDF value {} outside [0, 1]", format_rational(c))));
            }
            if *c < prev {
                return Err(invalid(format!("CDF decreases at step {step}")));
            }
            let inc = c - &prev;
            if *step > horizon {
                never += inc;
            } else if !inc.is_zero() {
                atoms.push((*step, inc));
            }
            prev = c.clone();
            prev_step = Some(*step);
        }
        if prev < int(1) {
            if prev_step.is_some_and(|s| s > horizon) {
                never += int(1) - &prev;
            } else {
                return Err(invalid(format!(
                    "CDF ends at {} before reaching 1",
                    format_rational(&prev)
                )));
            }
        }
        Ok(Self::from_parts(horizon, atoms, never))
    }

    /// Distribution of the additional steps still needed after `elapsed`
    /// steps passed without completion.
    ///
    /// The result has horizon `horizon - elapsed`; atoms past it fold into
    /// the sentinel.
    pub fn condition_on_elapsed(&self, elapsed: u32) -> Result<Self> {
        if elapsed == 0 {
            return Ok(self.clone());
        }
        let remaining = int(1) - self.cdf(elapsed);
        if !remaining.is_positive() {
            return Err(Error::ImpossibleConditioning { elapsed });
        }
        let horizon = self.horizon - elapsed;
        let mut atoms = Vec::new();
        let mut never = self.never.clone();
        for (t, p) in self.atoms().filter(|(t, _)| *t > elapsed) {
            let shifted = t - elapsed;
            if shifted > horizon {
                never += p;
            } else {
                atoms.push((shifted, p / &remaining));
            }
        }
        never /= &remaining;
        Ok(Self::from_parts(horizon, atoms, never))
    }

    /// Expected value with `sentinel` substituted for the never mass.
    pub fn mean(&self, sentinel: u32) -> Rational {
        let finite: Rational = self.atoms().map(|(t, p)| p * int(t as i64)).sum();
        finite + &self.never * int(sentinel as i64)
    }

    /// Mean with the sentinel valued at `horizon + 1`.
    pub fn mean_default(&self) -> Rational {
        self.mean(self.horizon + 1)
    }

    /// Total variation distance over the categories `0..=horizon` plus the
    /// sentinel. Both distributions must share the horizon.
    pub fn total_variation(&self, other: &Self) -> f64 {
        let mut tv = Rational::zero();
        for t in 0..=self.horizon.max(other.horizon) {
            tv += (self.prob(t) - other.prob(t)).abs();
        }
        tv += (self.sentinel_mass() - other.sentinel_mass()).abs();
        (tv / int(2)).to_f64().unwrap_or(f64::NAN)
    }

    /// Float PMF indexed by step over `0..=horizon`, with the sentinel at
    /// `horizon + 1`.
    pub fn to_f64_categories(&self) -> Vec<f64> {
        let mut out: Vec<f64> = (0..=self.horizon)
            .map(|t| self.prob(t).to_f64().unwrap_or(f64::NAN))
            .collect();
        out.push(self.sentinel_mass().to_f64().unwrap_or(f64::NAN));
        out
    }

    pub fn is_point_mass(&self) -> bool {
        self.atoms().filter(|(_, p)| p.is_one()).count() == 1
    }
}

impl fmt::Debug for DiscreteDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        for (t, p) in self.atoms() {
            m.entry(&t, &format_rational(p));
        }
        if !self.never.is_zero() {
            m.entry(&"never", &format_rational(&self.never));
        }
        m.finish()
    }
}
