//! Dominance order on alarm collections and the monotone coupling of two
//! directed time-lines walks that share their alarms.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_line, directed_slot, EdgeId, Vertex};
use crate::timelines::{
    simulate_vsirw_directed_timelines, AlarmSource, Arming, DirectedOptions, DirectedRun,
};
use crate::weights::WeightFunction;

/// Replacement rule for one alarm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "snake_case")]
pub enum Edit {
    /// `Y + d`.
    Add(f64),
    /// `Y - d`, floored at a millionth of `Y` so alarms stay positive.
    Subtract(f64),
    /// A fixed value.
    Set(f64),
}

impl Edit {
    fn apply(&self, y: f64) -> f64 {
        match *self {
            Edit::Add(d) => y + d,
            Edit::Subtract(d) => (y - d).max(y * 1e-6),
            Edit::Set(v) => v,
        }
    }
}

/// Alarm `Y_k^{(from, to)}` of a directed edge of the line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AlarmIndex {
    pub from: Vertex,
    pub to: Vertex,
    pub k: u64,
}

impl AlarmIndex {
    pub fn new(from: Vertex, to: Vertex, k: u64) -> Result<Self> {
        if (from - to).abs() != 1 || k == 0 {
            return Err(Error::InvalidArgument(format!(
                "({from},{to}) with k={k} is not an alarm of the line"
            )));
        }
        Ok(AlarmIndex { from, to, k })
    }

    pub fn slot(&self) -> i64 {
        directed_slot(self.from, self.to, self.from.min(self.to))
    }

    pub fn rightward(&self) -> bool {
        self.to > self.from
    }
}

/// Finitely many edits of an alarm collection.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    #[serde(with = "edit_list")]
    pub edits: BTreeMap<AlarmIndex, Edit>,
}

impl Perturbation {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Delays the n-th return from `x` to `x - 1` by one unit of alarm:
    /// `Y_n^{(x,x-1)} + 1`.
    pub fn delay_return(x: Vertex, n: u64) -> Result<Self> {
        let mut p = Self::empty();
        p.edits.insert(AlarmIndex::new(x, x - 1, n)?, Edit::Add(1.0));
        Ok(p)
    }

    pub fn with(mut self, at: AlarmIndex, edit: Edit) -> Self {
        self.edits.insert(at, edit);
        self
    }

    /// The perturbed collection read through `base`.
    pub fn over<'a, A: AlarmSource>(&'a self, base: &'a A) -> PerturbedAlarms<'a, A> {
        let by_slot = self
            .edits
            .iter()
            .map(|(i, e)| ((i.slot(), i.k), *e))
            .collect();
        PerturbedAlarms { base, by_slot }
    }

    /// Every edited index.
    pub fn probe_set(&self) -> Vec<AlarmIndex> {
        self.edits.keys().copied().collect()
    }
}

mod edit_list {
    use super::{AlarmIndex, Edit};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    #[derive(Serialize, Deserialize)]
    struct Entry {
        #[serde(flatten)]
        at: AlarmIndex,
        #[serde(flatten)]
        edit: Edit,
    }

    pub fn serialize<S: Serializer>(m: &BTreeMap<AlarmIndex, Edit>, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<Entry> = m.iter().map(|(at, edit)| Entry { at: *at, edit: *edit }).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<AlarmIndex, Edit>, D::Error> {
        let v = Vec::<Entry>::deserialize(d)?;
        Ok(v.into_iter().map(|e| (e.at, e.edit)).collect())
    }
}

pub struct PerturbedAlarms<'a, A> {
    base: &'a A,
    by_slot: BTreeMap<(i64, u64), Edit>,
}

impl<A: AlarmSource> AlarmSource for PerturbedAlarms<'_, A> {
    fn unit(&self, clock: i64, k: u64) -> f64 {
        let y = self.base.unit(clock, k);
        match self.by_slot.get(&(clock, k)) {
            Some(e) => e.apply(y),
            None => y,
        }
    }
}

/// `Y' >> Y` on the probed indices: rightward alarms of `Y'` are no larger,
/// leftward ones no smaller.
pub fn check_dominance<A: AlarmSource, B: AlarmSource>(
    y: &A,
    y_prime: &B,
    probe: &[AlarmIndex],
) -> bool {
    probe.iter().all(|i| {
        let a = y.unit(i.slot(), i.k);
        let b = y_prime.unit(i.slot(), i.k);
        if i.rightward() {
            b <= a
        } else {
            b >= a
        }
    })
}

/// Two walks driven by `Y` and by its perturbation `Y'`.
#[derive(Clone, Debug)]
pub struct CoupledPair {
    pub base: DirectedRun,
    pub perturbed: DirectedRun,
    pub perturbation: Perturbation,
}

/// Runs both walks of the coupling for `steps` jumps each.
pub fn run_coupled<A: AlarmSource + Sync>(
    alarms: &A,
    perturbation: &Perturbation,
    x0: Vertex,
    steps: u64,
    w: &WeightFunction,
) -> Result<CoupledPair> {
    if !w.is_nondecreasing() {
        return Err(Error::NonMonotoneWeight);
    }
    let g = build_line(x0);
    let opts = DirectedOptions {
        record_armings: true,
        ..Default::default()
    };
    let perturbed_alarms = perturbation.over(alarms);
    let base = simulate_vsirw_directed_timelines(&g, w, x0, steps, alarms, opts)?;
    let perturbed = simulate_vsirw_directed_timelines(&g, w, x0, steps, &perturbed_alarms, opts)?;
    Ok(CoupledPair {
        base,
        perturbed,
        perturbation: perturbation.clone(),
    })
}

/// A failed `E_{i,e}`: at the i-th crossing of `e = {edge, edge+1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub edge: EdgeId,
    pub i: u64,
    /// `(Z(upper), Z(lower))` in the base walk at its i-th crossing.
    pub base: (u64, u64),
    /// The same counts in the perturbed walk.
    pub perturbed: (u64, u64),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EieReport {
    pub holds: bool,
    pub first_violation: Option<Violation>,
    pub violations: u64,
    #[serde(rename = "matchedIndices")]
    pub matched: u64,
    /// Matched indices where both inequalities are equalities.
    pub equalities: u64,
}

/// Counts `(Z(j+1), Z(j), jump)` at every crossing of each edge `{j, j+1}`.
fn crossing_counts(path: &[Vertex]) -> BTreeMap<EdgeId, Vec<(u64, u64, u64)>> {
    let mut z: BTreeMap<Vertex, u64> = BTreeMap::new();
    *z.entry(path[0]).or_insert(1) += 1;
    let mut out: BTreeMap<EdgeId, Vec<(u64, u64, u64)>> = BTreeMap::new();
    for (n, w) in path.windows(2).enumerate() {
        *z.entry(w[1]).or_insert(1) += 1;
        let lo = w[0].min(w[1]);
        let upper = *z.get(&(lo + 1)).unwrap_or(&1);
        let lower = *z.get(&lo).unwrap_or(&1);
        out.entry(lo).or_default().push((upper, lower, n as u64 + 1));
    }
    out
}

/// Checks `E_{i,e}` for every edge and every index realized by both paths:
/// `Z'(upper) >= Z(upper)` and `Z'(lower) <= Z(lower)` at the respective
/// i-th crossings. The reported violation is the first one to be decided
/// in jump order.
pub fn check_eie_paths(base: &[Vertex], perturbed: &[Vertex]) -> EieReport {
    let a = crossing_counts(base);
    let b = crossing_counts(perturbed);
    let mut first: Option<(u64, Violation)> = None;
    let mut violations = 0;
    let mut matched = 0;
    let mut equalities = 0;
    for (edge, xs) in &a {
        let Some(ys) = b.get(edge) else { continue };
        for (i, (x, y)) in xs.iter().zip(ys).enumerate() {
            matched += 1;
            if y.0 == x.0 && y.1 == x.1 {
                equalities += 1;
            }
            if y.0 < x.0 || y.1 > x.1 {
                violations += 1;
                let decided = x.2.max(y.2);
                let v = Violation {
                    edge: *edge,
                    i: i as u64 + 1,
                    base: (x.0, x.1),
                    perturbed: (y.0, y.1),
                };
                if first.map_or(true, |(t, f)| (decided, v.edge) < (t, f.edge)) {
                    first = Some((decided, v));
                }
            }
        }
    }
    EieReport {
        holds: violations == 0,
        first_violation: first.map(|(_, v)| v),
        violations,
        matched,
        equalities,
    }
}

pub fn check_eie(pair: &CoupledPair) -> EieReport {
    check_eie_paths(&pair.base.trace.positions, &pair.perturbed.trace.positions)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoldingReport {
    pub checked: u64,
    pub violations: u64,
}

/// Compares the local-time distances `Y_k / W(Z)` of the rightward alarms
/// armed in both walks: the perturbed distance must not exceed the base
/// one, termwise and in cumulative sums over `k`.
pub fn check_holding_sums(pair: &CoupledPair) -> HoldingReport {
    let index = |armings: &[Arming]| -> BTreeMap<(Vertex, u64), f64> {
        armings
            .iter()
            .filter(|a| a.to > a.from)
            .map(|a| ((a.from, a.k), a.distance()))
            .collect()
    };
    let a = index(&pair.base.armings);
    let b = index(&pair.perturbed.armings);
    let mut checked = 0;
    let mut violations = 0;
    let mut sums: BTreeMap<Vertex, (f64, f64)> = BTreeMap::new();
    for ((x, k), da) in &a {
        let Some(db) = b.get(&(*x, *k)) else { continue };
        checked += 1;
        let s = sums.entry(*x).or_insert((0.0, 0.0));
        // sums only compare on unbroken prefixes k = 1, 2, ...
        s.0 += da;
        s.1 += db;
        if db > da || s.1 > s.0 * (1.0 + 1e-12) {
            violations += 1;
        }
    }
    HoldingReport {
        checked,
        violations,
    }
}

/// JSON-ready summary of one pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub violations: Vec<Violation>,
    #[serde(rename = "matchedIndices")]
    pub matched: u64,
    pub perturbation: Perturbation,
}

impl PairReport {
    pub fn new(pair: &CoupledPair) -> Self {
        let r = check_eie(pair);
        PairReport {
            violations: r.first_violation.into_iter().collect(),
            matched: r.matched,
            perturbation: pair.perturbation.clone(),
        }
    }
}
