//! Two-colour W-urns, Pólya and Friedman-type urns.

use std::collections::BTreeMap;
use std::io::Write;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::weights::WeightFunction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Colour {
    /// Colour `1`.
    Plus,
    /// Colour `-1`.
    Minus,
}

impl Colour {
    pub fn sign(self) -> i64 {
        match self {
            Colour::Plus => 1,
            Colour::Minus => -1,
        }
    }

    pub fn other(self) -> Colour {
        match self {
            Colour::Plus => Colour::Minus,
            Colour::Minus => Colour::Plus,
        }
    }
}

/// Counts `Z_n(1)`, `Z_n(-1)` and propensities `a_{0,1}`, `a_{0,-1}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UrnState {
    pub plus: u64,
    pub minus: u64,
    pub a_plus: f64,
    pub a_minus: f64,
    pub step: u64,
}

impl UrnState {
    pub fn new(plus: u64, minus: u64, a_plus: f64, a_minus: f64) -> Result<Self> {
        if plus == 0 || minus == 0 {
            return Err(Error::InvalidArgument("urn counts start at 1 or more".into()));
        }
        if !(a_plus > 0.0 && a_minus > 0.0 && a_plus.is_finite() && a_minus.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "urn propensities must be positive, got ({a_plus}, {a_minus})"
            )));
        }
        Ok(UrnState {
            plus,
            minus,
            a_plus,
            a_minus,
            step: 0,
        })
    }

    /// One ball of each colour, unit propensities.
    pub fn symmetric() -> Self {
        UrnState {
            plus: 1,
            minus: 1,
            a_plus: 1.0,
            a_minus: 1.0,
            step: 0,
        }
    }

    pub fn count(&self, c: Colour) -> u64 {
        match c {
            Colour::Plus => self.plus,
            Colour::Minus => self.minus,
        }
    }

    pub fn total(&self) -> u64 {
        self.plus + self.minus
    }

    /// `Z_n(1) / (Z_n(1) + Z_n(-1))`.
    pub fn fraction(&self) -> f64 {
        self.plus as f64 / self.total() as f64
    }

    fn add(&mut self, c: Colour, by: u64) {
        match c {
            Colour::Plus => self.plus += by,
            Colour::Minus => self.minus += by,
        }
        self.step += 1;
    }
}

/// Probability that a W-urn draw picks colour `1`.
pub fn w_urn_plus_probability(w: &WeightFunction, s: &UrnState) -> f64 {
    let p = s.a_plus * w.at(s.plus);
    let m = s.a_minus * w.at(s.minus);
    let total = p + m;
    if total.is_finite() && p > 0.0 && m > 0.0 {
        p / total
    } else {
        let lp = s.a_plus.ln() + w.ln_at(s.plus);
        let lm = s.a_minus.ln() + w.ln_at(s.minus);
        1.0 / (1.0 + (lm - lp).exp())
    }
}

/// Payoff per colour of a Friedman-type urn.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Payoff {
    pub plus: f64,
    pub minus: f64,
}

impl Payoff {
    pub fn new(plus: f64, minus: f64) -> Result<Self> {
        for v in [plus, minus] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidPayoff(v));
            }
        }
        Ok(Payoff { plus, minus })
    }

    fn of(&self, c: Colour) -> f64 {
        match c {
            Colour::Plus => self.plus,
            Colour::Minus => self.minus,
        }
    }
}

/// Integer increment with conditional mean `mean`: `floor(mean)` plus a
/// Bernoulli draw of the fractional part.
pub fn two_point_increment(mean: f64, u: f64) -> u64 {
    let lo = mean.floor();
    let frac = mean - lo;
    lo as u64 + u64::from(u < frac)
}

#[derive(Clone, Debug)]
pub struct Urn {
    state: UrnState,
    weight: WeightFunction,
    rng: SimRng,
}

impl Urn {
    pub fn new(state: UrnState, weight: WeightFunction, rng: SimRng) -> Self {
        Urn { state, weight, rng }
    }

    pub fn state(&self) -> &UrnState {
        &self.state
    }

    /// One W-urn draw: colour `i` with probability proportional to
    /// `a_{0,i} W(Z_n(i))`; its count goes up by one.
    pub fn step_w_urn(&mut self) -> Colour {
        let p = w_urn_plus_probability(&self.weight, &self.state);
        let c = if self.rng.uniform() < p {
            Colour::Plus
        } else {
            Colour::Minus
        };
        self.state.add(c, 1);
        c
    }

    /// One Friedman-type draw: colour picked in proportion to its count, then
    /// its count goes up by an integer with conditional mean `payoff(colour)`.
    pub fn step_friedman(&mut self, payoff: &Payoff) -> Colour {
        let p = self.state.plus as f64 / self.state.total() as f64;
        let c = if self.rng.uniform() < p {
            Colour::Plus
        } else {
            Colour::Minus
        };
        let by = two_point_increment(payoff.of(c), self.rng.uniform());
        self.state.add(c, by);
        c
    }

    /// Runs `n` W-urn draws, keeping counts at the given checkpoints (and at
    /// step 0 and `n`).
    pub fn run_to(&mut self, n: u64, checkpoints: &[u64]) -> UrnHistory {
        let mut points = vec![(self.state.step, self.state.plus, self.state.minus)];
        let end = self.state.step + n;
        let mut marks: Vec<u64> = checkpoints
            .iter()
            .copied()
            .filter(|c| *c > self.state.step && *c <= end)
            .collect();
        marks.push(end);
        marks.sort_unstable();
        marks.dedup();
        for m in marks {
            while self.state.step < m {
                self.step_w_urn();
            }
            if points.last().map(|p| p.0) != Some(m) {
                points.push((m, self.state.plus, self.state.minus));
            }
        }
        UrnHistory { points }
    }
}

/// `0, 1, 2, 4, ..., 2^k <= n`, and `n`.
pub fn geometric_checkpoints(n: u64) -> Vec<u64> {
    let mut out = vec![0];
    let mut c = 1;
    while c < n {
        out.push(c);
        c *= 2;
    }
    if n > 0 {
        out.push(n);
    }
    out
}

/// Counts `(step, Z(1), Z(-1))` at increasing checkpoints.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UrnHistory {
    pub points: Vec<(u64, u64, u64)>,
}

impl UrnHistory {
    pub fn last(&self) -> (u64, u64, u64) {
        *self.points.last().expect("history is never empty")
    }

    /// CSV with columns `step,Z1,Zm1`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "step,Z1,Zm1")?;
        for (s, p, m) in &self.points {
            writeln!(out, "{s},{p},{m}")?;
        }
        Ok(())
    }
}

/// Colour that alone grew over the trailing `tail_fraction` of the steps,
/// measured from the latest checkpoint at or before the tail start.
pub fn detect_monopoly(history: &UrnHistory, tail_fraction: f64) -> Option<Colour> {
    let (end, plus, minus) = history.last();
    let start = history.points[0].0;
    let tail_start = end as f64 - tail_fraction.clamp(0.0, 1.0) * (end - start) as f64;
    let (_, p0, m0) = history
        .points
        .iter()
        .rev()
        .find(|p| p.0 as f64 <= tail_start)
        .copied()
        .unwrap_or(history.points[0]);
    match (plus > p0, minus > m0) {
        (true, false) => Some(Colour::Plus),
        (false, true) => Some(Colour::Minus),
        _ => None,
    }
}

/// Exact law of the first `k` W-urn colours, for oracle comparisons.
pub fn exact_colour_sequences(
    w: &WeightFunction,
    start: &UrnState,
    k: usize,
) -> Result<BTreeMap<Vec<Colour>, BigRational>> {
    if k > crate::walk::MAX_ENUMERATION_STEPS {
        return Err(Error::EnumerationTooLong {
            requested: k,
            limit: crate::walk::MAX_ENUMERATION_STEPS,
        });
    }
    let ap = BigRational::from_float(start.a_plus)
        .ok_or_else(|| Error::NotRational(format!("{}", start.a_plus)))?;
    let am = BigRational::from_float(start.a_minus)
        .ok_or_else(|| Error::NotRational(format!("{}", start.a_minus)))?;
    let mut out = BTreeMap::new();
    let mut frontier = vec![(Vec::new(), start.plus, start.minus, BigRational::one())];
    for _ in 0..k {
        let mut next = Vec::with_capacity(frontier.len() * 2);
        for (seq, p, m, mass) in frontier {
            let wp = &ap * w.exact(p)?;
            let wm = &am * w.exact(m)?;
            let total = &wp + &wm;
            let mut sp = seq.clone();
            sp.push(Colour::Plus);
            next.push((sp, p + 1, m, &mass * &wp / &total));
            let mut sm = seq;
            sm.push(Colour::Minus);
            next.push((sm, p, m + 1, &mass * &wm / &total));
        }
        frontier = next;
    }
    for (seq, _, _, mass) in frontier {
        if !mass.is_zero() {
            out.insert(seq, mass);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn draw_probabilities() {
        let lin = WeightFunction::power(0.0, 1.0).unwrap();
        assert_eq!(w_urn_plus_probability(&lin, &UrnState::symmetric()), 0.5);
        let s = UrnState::new(3, 2, 1.0, 1.0).unwrap();
        assert!((w_urn_plus_probability(&lin, &s) - 0.6).abs() < 1e-15);
        let sq = WeightFunction::power(0.0, 2.0).unwrap();
        let s = UrnState::new(10, 1, 1.0, 1.0).unwrap();
        assert!((w_urn_plus_probability(&sq, &s) - 100.0 / 101.0).abs() < 1e-15);
    }

    #[test]
    fn friedman_unit_payoff_is_polya() {
        let lin = WeightFunction::power(0.0, 1.0).unwrap();
        let unit = Payoff::new(1.0, 1.0).unwrap();
        let mut a = Urn::new(UrnState::symmetric(), lin.clone(), SimRng::from_seed(5));
        for _ in 0..100 {
            a.step_friedman(&unit);
        }
        assert_eq!(a.state().total(), 102);
        assert!(Payoff::new(0.0, 1.0).is_err());
    }

    #[test]
    fn integer_payoff_is_deterministic() {
        for u in [0.0, 0.3, 0.999] {
            assert_eq!(two_point_increment(2.0, u), 2);
        }
        assert_eq!(two_point_increment(1.5, 0.2), 2);
        assert_eq!(two_point_increment(1.5, 0.7), 1);
    }

    #[test]
    fn friedman_half_payoff_mean() {
        let lin = WeightFunction::power(0.0, 1.0).unwrap();
        let pay = Payoff::new(1.5, 1.5).unwrap();
        let mut urn = Urn::new(UrnState::new(2, 2, 1.0, 1.0).unwrap(), lin, SimRng::from_seed(8));
        let n = 100_000;
        let mut sum = 0u64;
        let mut sq = 0u64;
        for _ in 0..n {
            let before = urn.state().total();
            urn.step_friedman(&pay);
            let d = urn.state().total() - before;
            assert!(d == 1 || d == 2);
            sum += d;
            sq += d * d;
        }
        let mean = sum as f64 / n as f64;
        let var = sq as f64 / n as f64 - mean * mean;
        assert!((mean - 1.5).abs() < 4.0 * (var / n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn run_history_and_determinism() {
        let lin = WeightFunction::power(0.0, 1.0).unwrap();
        let mut a = Urn::new(UrnState::symmetric(), lin.clone(), SimRng::from_seed(1));
        let h0 = a.run_to(0, &geometric_checkpoints(0));
        assert_eq!(h0.points, vec![(0, 1, 1)]);
        let h = a.run_to(1000, &geometric_checkpoints(1000));
        let mut b = Urn::new(UrnState::symmetric(), lin, SimRng::from_seed(1));
        assert_eq!(h, b.run_to(1000, &geometric_checkpoints(1000)));
        for (s, p, m) in &h.points {
            assert_eq!(p + m, 2 + s);
        }
        assert_eq!(h.points.len(), geometric_checkpoints(1000).len());
    }

    #[test]
    fn monopoly_examples() {
        let frozen = UrnHistory {
            points: vec![(0, 1, 1), (50, 44, 7), (100, 94, 7)],
        };
        assert_eq!(detect_monopoly(&frozen, 0.5), Some(Colour::Plus));
        let both = UrnHistory {
            points: vec![(0, 1, 1), (50, 26, 26), (100, 51, 51)],
        };
        assert_eq!(detect_monopoly(&both, 0.5), None);
        let short = UrnHistory { points: vec![(0, 1, 1)] };
        assert_eq!(detect_monopoly(&short, 0.5), None);
    }

    #[test]
    fn exact_sequences_sum_to_one() {
        let lin = WeightFunction::power(0.0, 1.0).unwrap();
        let d = exact_colour_sequences(&lin, &UrnState::symmetric(), 4).unwrap();
        assert_eq!(d.values().cloned().sum::<BigRational>(), BigRational::one());
        // Pólya: every sequence with j pluses has mass j!(4-j)!/5!
        let seq = vec![Colour::Plus, Colour::Minus, Colour::Plus, Colour::Plus];
        assert_eq!(d[&seq], BigRational::new(6.into(), 120.into()));
    }

    proptest! {
        #[test]
        fn total_count_is_conserved(seed in 0u64..500, rho in -1.0f64..3.0, steps in 0u64..300) {
            let w = WeightFunction::power(0.0, rho).unwrap();
            let mut urn = Urn::new(UrnState::new(2, 3, 1.5, 0.5).unwrap(), w, SimRng::from_seed(seed));
            for k in 0..steps {
                urn.step_w_urn();
                prop_assert_eq!(urn.state().total(), 5 + k + 1);
            }
        }
    }
}
