//! Reinforcement weight functions and the sums derived from them.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Declarative form of a weight function, as it appears in configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSpec {
    /// `W(n) = (delta + n)^rho`.
    Power {
        #[serde(default)]
        delta: f64,
        rho: f64,
    },
    /// `W(n) = values[n-1]`, repeating the last value beyond the table.
    Table { values: Vec<f64> },
    /// Picks the rule by the parity of `n`; each rule is evaluated at `n` itself.
    Alternating {
        even: Box<WeightSpec>,
        odd: Box<WeightSpec>,
    },
    /// `W(n) = base^n`.
    Geometric { base: f64 },
}

/// Short command-line form: `power:<delta>:<rho>`, `geometric:<base>`,
/// `table:<v1>,<v2>,...`.
impl std::str::FromStr for WeightSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("cannot parse weight `{s}`"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        let parts: Vec<&str> = s.split(':').collect();
        let spec = match parts.as_slice() {
            ["power", d, r] => WeightSpec::power(num(d)?, num(r)?),
            ["geometric", b] => WeightSpec::Geometric { base: num(b)? },
            ["table", vs] => WeightSpec::Table {
                values: vs.split(',').map(num).collect::<Result<_>>()?,
            },
            _ => return Err(bad()),
        };
        spec.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(spec)
    }
}

impl WeightSpec {
    pub fn power(delta: f64, rho: f64) -> Self {
        WeightSpec::Power { delta, rho }
    }

    pub fn linear() -> Self {
        Self::power(0.0, 1.0)
    }

    pub fn build(&self) -> Result<WeightFunction> {
        WeightFunction::new(self.clone())
    }

    fn validate(&self) -> Result<()> {
        match self {
            WeightSpec::Power { delta, rho } => {
                if !(*delta > -1.0) || !delta.is_finite() || !rho.is_finite() {
                    return Err(Error::InvalidWeight(format!(
                        "power weight needs delta > -1 and finite rho, got delta={delta}, rho={rho}"
                    )));
                }
            }
            WeightSpec::Table { values } => {
                if values.is_empty() {
                    return Err(Error::InvalidWeight("empty table".into()));
                }
                if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
                    return Err(Error::InvalidWeight(format!("table value {v} is not positive")));
                }
            }
            WeightSpec::Alternating { even, odd } => {
                even.validate()?;
                odd.validate()?;
            }
            WeightSpec::Geometric { base } => {
                if !(*base > 0.0 && base.is_finite()) {
                    return Err(Error::InvalidWeight(format!("geometric base {base}")));
                }
            }
        }
        Ok(())
    }
}

/// Whether `sum_n 1/W(n)` is finite.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Summability {
    Yes,
    No,
    /// Answer for the sums over even and odd `n` separately.
    PerParity {
        even: Box<Summability>,
        odd: Box<Summability>,
    },
}

impl Summability {
    /// Whether the full series converges.
    pub fn converges(&self) -> bool {
        match self {
            Summability::Yes => true,
            Summability::No => false,
            Summability::PerParity { even, odd } => even.converges() && odd.converges(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightFunction {
    spec: WeightSpec,
}

impl WeightFunction {
    pub fn new(spec: WeightSpec) -> Result<Self> {
        spec.validate()?;
        Ok(WeightFunction { spec })
    }

    pub fn power(delta: f64, rho: f64) -> Result<Self> {
        Self::new(WeightSpec::power(delta, rho))
    }

    pub fn spec(&self) -> &WeightSpec {
        &self.spec
    }

    /// `W(n)` for `n >= 1`.
    pub fn eval(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return Err(Error::WeightDomain(n));
        }
        Ok(self.at(n))
    }

    /// `W(n)` without the domain check; `n` must be at least 1.
    #[inline]
    pub fn at(&self, n: u64) -> f64 {
        eval_spec(&self.spec, n)
    }

    /// `ln W(n)`, finite even where `W(n)` overflows.
    pub fn ln_at(&self, n: u64) -> f64 {
        ln_spec(&self.spec, n)
    }

    /// `W(n)` as an exact rational, for enumeration oracles.
    pub fn exact(&self, n: u64) -> Result<BigRational> {
        if n == 0 {
            return Err(Error::WeightDomain(n));
        }
        exact_spec(&self.spec, n)
    }

    pub fn summability(&self) -> Summability {
        summability_spec(&self.spec)
    }

    /// Whether `W` is nondecreasing on `n >= 1`. Alternating rules are
    /// checked on `n <= 4096` on top of each rule being nondecreasing.
    pub fn is_nondecreasing(&self) -> bool {
        match &self.spec {
            WeightSpec::Alternating { .. } => {
                nondecreasing_spec(&self.spec)
                    && (1..4096).all(|n| self.at(n) <= self.at(n + 1))
            }
            s => nondecreasing_spec(s),
        }
    }
}

#[inline]
fn eval_spec(spec: &WeightSpec, n: u64) -> f64 {
    match spec {
        WeightSpec::Power { delta, rho } => {
            let base = delta + n as f64;
            if *rho == 1.0 {
                base
            } else if *rho == 0.0 {
                1.0
            } else if *rho == 2.0 {
                base * base
            } else {
                base.powf(*rho)
            }
        }
        WeightSpec::Table { values } => {
            let idx = (n as usize - 1).min(values.len() - 1);
            values[idx]
        }
        WeightSpec::Alternating { even, odd } => {
            if n % 2 == 0 {
                eval_spec(even, n)
            } else {
                eval_spec(odd, n)
            }
        }
        WeightSpec::Geometric { base } => base.powf(n as f64),
    }
}

fn ln_spec(spec: &WeightSpec, n: u64) -> f64 {
    match spec {
        WeightSpec::Power { delta, rho } => rho * (delta + n as f64).ln(),
        WeightSpec::Table { .. } => eval_spec(spec, n).ln(),
        WeightSpec::Alternating { even, odd } => {
            if n % 2 == 0 {
                ln_spec(even, n)
            } else {
                ln_spec(odd, n)
            }
        }
        WeightSpec::Geometric { base } => n as f64 * base.ln(),
    }
}

fn rational(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::NotRational(format!("{x}")))
}

fn exact_spec(spec: &WeightSpec, n: u64) -> Result<BigRational> {
    match spec {
        WeightSpec::Power { delta, rho } => {
            if rho.fract() != 0.0 || rho.abs() > 64.0 {
                return Err(Error::NotRational(format!("(delta + n)^{rho}")));
            }
            let base = rational(*delta)? + BigRational::from_integer(BigInt::from(n));
            Ok(pow(base, *rho as i32))
        }
        WeightSpec::Table { .. } => rational(eval_spec(spec, n)),
        WeightSpec::Alternating { even, odd } => {
            if n % 2 == 0 {
                exact_spec(even, n)
            } else {
                exact_spec(odd, n)
            }
        }
        WeightSpec::Geometric { base } => {
            let n = i32::try_from(n).map_err(|_| Error::NotRational(format!("{base}^{n}")))?;
            Ok(pow(rational(*base)?, n))
        }
    }
}

fn pow(base: BigRational, e: i32) -> BigRational {
    let mut out = BigRational::one();
    for _ in 0..e.unsigned_abs() {
        out *= &base;
    }
    if e < 0 {
        out.recip()
    } else {
        out
    }
}

fn summability_spec(spec: &WeightSpec) -> Summability {
    let yes_if = |b: bool| if b { Summability::Yes } else { Summability::No };
    match spec {
        WeightSpec::Power { rho, .. } => yes_if(*rho > 1.0),
        // a table ends in a constant positive tail
        WeightSpec::Table { .. } => Summability::No,
        WeightSpec::Geometric { base } => yes_if(*base > 1.0),
        WeightSpec::Alternating { even, odd } => {
            // the parity restriction of a power or geometric series converges
            // exactly when the full one does
            let fold = |s: Summability| match s {
                Summability::PerParity { even, odd } => yes_if(even.converges() && odd.converges()),
                s => s,
            };
            Summability::PerParity {
                even: Box::new(fold(summability_spec(even))),
                odd: Box::new(fold(summability_spec(odd))),
            }
        }
    }
}

fn nondecreasing_spec(spec: &WeightSpec) -> bool {
    match spec {
        WeightSpec::Power { rho, .. } => *rho >= 0.0,
        WeightSpec::Table { values } => values.windows(2).all(|w| w[0] <= w[1]),
        WeightSpec::Geometric { base } => *base >= 1.0,
        WeightSpec::Alternating { even, odd } => nondecreasing_spec(even) && nondecreasing_spec(odd),
    }
}

/// Kahan-compensated prefix sums `S(n) = sum_{k=1}^{n-1} term(k)`, grown on
/// demand so that per-step lookups are amortized O(1).
#[derive(Clone, Debug, Default)]
pub struct PrefixCache {
    sums: Vec<f64>,
    comp: f64,
}

impl PrefixCache {
    pub fn new() -> Self {
        PrefixCache {
            sums: vec![0.0],
            comp: 0.0,
        }
    }

    /// `S(n)` for `n >= 1`.
    pub fn get(&mut self, n: u64, term: impl Fn(u64) -> f64) -> f64 {
        let n = n as usize;
        if self.sums.is_empty() {
            self.sums.push(0.0);
        }
        while self.sums.len() < n {
            let k = self.sums.len() as u64;
            let last = *self.sums.last().unwrap();
            let y = term(k) - self.comp;
            let t = last + y;
            self.comp = (t - last) - y;
            self.sums.push(t);
        }
        self.sums[n - 1]
    }
}

/// `W*`, `Ŵ` and `log W̃_λ` with incremental caches.
#[derive(Clone, Debug)]
pub struct WeightSums {
    w: WeightFunction,
    star: PrefixCache,
    hat: PrefixCache,
    tilde: Vec<(f64, PrefixCache)>,
}

impl WeightSums {
    pub fn new(w: WeightFunction) -> Self {
        WeightSums {
            w,
            star: PrefixCache::new(),
            hat: PrefixCache::new(),
            tilde: Vec::new(),
        }
    }

    pub fn weight(&self) -> &WeightFunction {
        &self.w
    }

    /// `W*(n) = sum_{k=1}^{n-1} 1/W(k)`.
    pub fn wstar(&mut self, n: u64) -> Result<f64> {
        check_n(n)?;
        let w = &self.w;
        Ok(self.star.get(n, |k| 1.0 / w.at(k)))
    }

    /// `Ŵ(n) = sum_{k=1}^{n-1} 1/W(k)^2`.
    pub fn what(&mut self, n: u64) -> Result<f64> {
        check_n(n)?;
        let w = &self.w;
        Ok(self.hat.get(n, |k| {
            let x = w.at(k);
            1.0 / (x * x)
        }))
    }

    /// `log W̃_λ(n) = sum_{k=1}^{n-1} log(1 + λ/W(k))`. Negative `λ` is
    /// accepted as long as every factor stays positive.
    pub fn wtilde_log(&mut self, lambda: f64, n: u64) -> Result<f64> {
        check_n(n)?;
        let w = &self.w;
        let slot = match self.tilde.iter().position(|(l, _)| *l == lambda) {
            Some(i) => i,
            None => {
                self.tilde.push((lambda, PrefixCache::new()));
                self.tilde.len() - 1
            }
        };
        let v = self.tilde[slot]
            .1
            .get(n, |k| (lambda / w.at(k)).ln_1p());
        if v.is_nan() {
            return Err(Error::InvalidArgument(format!(
                "1 + {lambda}/W(k) is not positive below n = {n}"
            )));
        }
        Ok(v)
    }
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        Err(Error::WeightDomain(n))
    } else {
        Ok(())
    }
}

/// `h(n) = sum_{k=1}^{n-1} 1/k`, with `h(1) = 0`.
pub fn harmonic(n: u64) -> Result<f64> {
    harmonic_shifted(0.0, n)
}

/// `h_Δ(n) = sum_{k=1}^{n-1} 1/(k + Δ)`: the harmonic sum over the shifted
/// lattice `Δ+1, ..., Δ+n-1`, with `h_Δ(1) = 0`.
pub fn harmonic_shifted(delta: f64, n: u64) -> Result<f64> {
    check_n(n)?;
    if n < 64 {
        return Ok((1..n).map(|k| 1.0 / (k as f64 + delta)).sum());
    }
    let mut s = 0.0;
    let mut c = 0.0;
    for k in 1..n {
        let y = 1.0 / (k as f64 + delta) - c;
        let t = s + y;
        c = (t - s) - y;
        s = t;
    }
    Ok(s)
}

/// Incremental `h_Δ` for trackers, which only ever ask for consecutive values.
#[derive(Clone, Debug)]
pub struct HarmonicCache {
    delta: f64,
    cache: PrefixCache,
}

impl HarmonicCache {
    pub fn new(delta: f64) -> Self {
        HarmonicCache {
            delta,
            cache: PrefixCache::new(),
        }
    }

    pub fn get(&mut self, n: u64) -> f64 {
        let d = self.delta;
        self.cache.get(n.max(1), |k| 1.0 / (k as f64 + d))
    }
}

/// Exact `sum_{k=1}^{n-1} 1/k`.
pub fn harmonic_exact(n: u64) -> BigRational {
    (1..n.max(1)).fold(BigRational::zero(), |acc, k| {
        acc + BigRational::new(BigInt::one(), BigInt::from(k))
    })
}

/// Nearest `f64` to an exact rational.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let v = r.to_f64().unwrap_or(f64::NAN);
    if v.is_finite() {
        v
    } else if r.is_negative() {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {

    #[test]
    fn weight_spec_short_forms() {
        assert_eq!("power:0:1".parse::<WeightSpec>().unwrap(), WeightSpec::linear());
        assert_eq!(
            "geometric:2".parse::<WeightSpec>().unwrap(),
            WeightSpec::Geometric { base: 2.0 }
        );
        assert_eq!(
            "table:1,2.5".parse::<WeightSpec>().unwrap(),
            WeightSpec::Table { values: vec![1.0, 2.5] }
        );
        assert!("power:-2:1".parse::<WeightSpec>().is_err());
        assert!("power:1".parse::<WeightSpec>().is_err());
    }
    use super::*;
    use proptest::prelude::*;

    fn lin() -> WeightFunction {
        WeightFunction::power(0.0, 1.0).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(lin().eval(7).unwrap(), 7.0);
        assert_eq!(WeightFunction::power(0.5, 2.0).unwrap().eval(2).unwrap(), 6.25);
        let flat = WeightFunction::power(0.0, 0.0).unwrap();
        for n in [1, 2, 1000] {
            assert_eq!(flat.eval(n).unwrap(), 1.0);
        }
        assert_eq!(lin().eval(0), Err(Error::WeightDomain(0)));
        assert!(WeightFunction::power(-1.0, 1.0).is_err());
    }

    #[test]
    fn table_repeats_last_value() {
        let w = WeightSpec::Table { values: vec![1.0, 3.0, 2.0] }.build().unwrap();
        assert_eq!(
            (1..=5).map(|n| w.at(n)).collect::<Vec<_>>(),
            vec![1.0, 3.0, 2.0, 2.0, 2.0]
        );
        assert!(WeightSpec::Table { values: vec![] }.build().is_err());
        assert!(WeightSpec::Table { values: vec![1.0, 0.0] }.build().is_err());
    }

    #[test]
    fn sums_examples() {
        let mut s = WeightSums::new(lin());
        assert_eq!(s.wstar(1).unwrap(), 0.0);
        assert_eq!(s.what(1).unwrap(), 0.0);
        assert!((s.wstar(4).unwrap() - 11.0 / 6.0).abs() < 1e-15);
        assert!((s.what(3).unwrap() - 1.25).abs() < 1e-15);
        assert_eq!(s.wtilde_log(1.0, 1).unwrap(), 0.0);
        assert!((s.wtilde_log(1.0, 3).unwrap() - 3f64.ln()).abs() < 1e-15);
        assert!((s.wtilde_log(2.0, 2).unwrap() - 3f64.ln()).abs() < 1e-15);
        assert!(s.wtilde_log(-2.0, 2).is_err());
    }

    #[test]
    fn harmonic_examples() {
        assert_eq!(harmonic(1).unwrap(), 0.0);
        assert_eq!(harmonic(2).unwrap(), 1.0);
        assert!((harmonic(4).unwrap() - 11.0 / 6.0).abs() < 1e-15);
        assert!(harmonic(0).is_err());
        assert_eq!(harmonic_shifted(0.5, 3).unwrap(), 1.0 / 1.5 + 1.0 / 2.5);
    }

    #[test]
    fn harmonic_minus_log_decreases_to_euler_gamma() {
        let grid: Vec<u64> = (1..=20).map(|k| 1u64 << k).collect();
        let vals: Vec<f64> = grid
            .iter()
            .map(|&n| harmonic(n + 1).unwrap() - (n as f64).ln())
            .collect();
        for w in vals.windows(2) {
            assert!(w[1] < w[0]);
        }
        let euler = 0.577_215_664_901_532_9;
        assert!(vals.iter().all(|v| *v > euler && *v <= 1.0));
        assert!((vals.last().unwrap() - euler).abs() < 1e-6);
    }

    #[test]
    fn summability_examples() {
        assert_eq!(WeightFunction::power(0.0, 2.0).unwrap().summability(), Summability::Yes);
        assert_eq!(WeightFunction::power(0.0, 1.0).unwrap().summability(), Summability::No);
        let sellke = WeightSpec::Alternating {
            even: Box::new(WeightSpec::power(0.0, 0.0)),
            odd: Box::new(WeightSpec::Geometric { base: 2.0 }),
        }
        .build()
        .unwrap();
        assert_eq!(
            sellke.summability(),
            Summability::PerParity {
                even: Box::new(Summability::No),
                odd: Box::new(Summability::Yes)
            }
        );
        assert!(!sellke.summability().converges());
        assert_eq!(sellke.at(4), 1.0);
        assert_eq!(sellke.at(5), 32.0);
    }

    #[test]
    fn monotonicity_follows_rho() {
        for rho in [-2.0, -0.5, 0.0, 0.5, 1.0, 2.0] {
            let w = WeightFunction::power(0.3, rho).unwrap();
            let direct = (1..500).all(|n| w.at(n) <= w.at(n + 1));
            assert_eq!(w.is_nondecreasing(), direct, "rho {rho}");
            assert_eq!(direct, rho >= 0.0);
        }
    }

    #[test]
    fn exact_values() {
        let w = WeightFunction::power(0.5, 2.0).unwrap();
        assert_eq!(w.exact(2).unwrap(), BigRational::new(25.into(), 4.into()));
        let w = WeightFunction::power(0.0, -1.0).unwrap();
        assert_eq!(w.exact(3).unwrap(), BigRational::new(1.into(), 3.into()));
        assert!(WeightFunction::power(0.0, 0.5).unwrap().exact(2).is_err());
        assert_eq!(rational_to_f64(&harmonic_exact(4)), 11.0 / 6.0);
    }

    #[test]
    fn ln_matches_eval() {
        let w = WeightSpec::Geometric { base: 2.0 }.build().unwrap();
        assert_eq!(w.at(3), 8.0);
        assert!((w.ln_at(2000) - 2000.0 * 2f64.ln()).abs() < 1e-9);
        assert!(w.at(2000).is_infinite());
    }

    #[test]
    fn spec_json_fragments() {
        let s: WeightSpec = serde_json::from_str(r#"{"kind":"power","delta":0.0,"rho":1.0}"#).unwrap();
        assert_eq!(s, WeightSpec::linear());
        let s: WeightSpec = serde_json::from_str(
            r#"{"kind":"alternating","even":{"kind":"geometric","base":2.0},"odd":{"kind":"power","rho":0.0}}"#,
        )
        .unwrap();
        assert!(matches!(s, WeightSpec::Alternating { .. }));
    }

    proptest! {
        #[test]
        fn prefix_increments_are_reciprocal_weights(delta in -0.9f64..5.0, rho in -2.0f64..3.0, n in 1u64..3000) {
            let w = WeightFunction::power(delta, rho).unwrap();
            let mut s = WeightSums::new(w.clone());
            let d = s.wstar(n + 1).unwrap() - s.wstar(n).unwrap();
            let scale = s.wstar(n + 1).unwrap().abs().max(1.0);
            prop_assert!((d - 1.0 / w.at(n)).abs() <= 1e-13 * scale);
            let direct: f64 = (1..n).map(|k| 1.0 / w.at(k)).sum();
            prop_assert!((s.wstar(n).unwrap() - direct).abs() <= 1e-11 * scale);
        }

        #[test]
        fn wtilde_matches_direct_product(delta in 0.0f64..3.0, rho in 0.5f64..2.0, lambda in 0.1f64..3.0, n in 1u64..2000) {
            let w = WeightFunction::power(delta, rho).unwrap();
            let mut s = WeightSums::new(w.clone());
            let prod: f64 = (1..n).map(|k| 1.0 + lambda / w.at(k)).product();
            prop_assume!(prod.is_finite());
            let got = s.wtilde_log(lambda, n).unwrap().exp();
            prop_assert!((got - prod).abs() <= 1e-10 * prod);
        }
    }
}
