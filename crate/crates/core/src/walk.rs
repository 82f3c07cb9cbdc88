//! Discrete-time vertex- and edge-self-interacting random walks.

use std::collections::BTreeMap;
use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::graph::{directed_slot, EdgeId, Graph, Neighbor, Vertex};
use crate::rng::SimRng;
use crate::weights::WeightFunction;
use crate::window::Window;

/// Which counter the reinforcement reads.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Weight of `j` is `W(Z_n(j))`.
    Vertex,
    /// Weight of `j` is `W(Z_n({i, j}))`.
    Edge,
}

/// One jump `from -> to` along `edge`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Step {
    pub from: Vertex,
    pub to: Vertex,
    pub edge: EdgeId,
}

/// Position and visit counters.
///
/// `Z_n(v)` is the number of visits up to time `n` plus one, so the starting
/// vertex has count 2; edge counts are crossings plus one; directed counts
/// are bare crossing numbers.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkState {
    pub position: Vertex,
    pub step: u64,
    vertex_counts: Window<u64>,
    edge_counts: Window<u64>,
    directed_counts: Window<u64>,
}

impl WalkState {
    pub fn new(x0: Vertex) -> Self {
        let mut vertex_counts = Window::new(1);
        vertex_counts.set(x0, 2);
        WalkState {
            position: x0,
            step: 0,
            vertex_counts,
            edge_counts: Window::new(1),
            directed_counts: Window::new(0),
        }
    }

    /// `Z_n(v)`.
    #[inline]
    pub fn vertex_count(&self, v: Vertex) -> u64 {
        self.vertex_counts.get(v)
    }

    /// `Z_n(e)`.
    #[inline]
    pub fn edge_count(&self, e: EdgeId) -> u64 {
        self.edge_counts.get(e)
    }

    /// Number of crossings `from -> to` along `edge`.
    #[inline]
    pub fn directed_count(&self, from: Vertex, to: Vertex, edge: EdgeId) -> u64 {
        self.directed_counts.get(directed_slot(from, to, edge))
    }

    /// `Z_n^+(x)` on the line: crossings `x -> x+1`.
    #[inline]
    pub fn z_plus(&self, x: Vertex) -> u64 {
        self.directed_counts.get(directed_slot(x, x + 1, x))
    }

    /// `Z_n^-(x)` on the line: crossings `x -> x-1`.
    #[inline]
    pub fn z_minus(&self, x: Vertex) -> u64 {
        self.directed_counts.get(directed_slot(x, x - 1, x - 1))
    }

    /// Applies a jump. The caller guarantees `step.from == self.position`.
    #[inline]
    pub fn record(&mut self, step: Step) {
        debug_assert_eq!(step.from, self.position);
        self.vertex_counts.incr(step.to, 1);
        self.edge_counts.incr(step.edge, 1);
        self.directed_counts
            .incr(directed_slot(step.from, step.to, step.edge), 1);
        self.position = step.to;
        self.step += 1;
    }

    /// Vertices with `Z_n(v) > 1`, with their counts.
    pub fn visited(&self) -> impl Iterator<Item = (Vertex, u64)> + '_ {
        self.vertex_counts.iter()
    }

    /// Edges with `Z_n(e) > 1`, with their counts.
    pub fn crossed(&self) -> impl Iterator<Item = (EdgeId, u64)> + '_ {
        self.edge_counts.iter()
    }

    /// Counter conservation: every time index is one visit, every step
    /// crosses one edge in one direction.
    pub fn conservation_holds(&self) -> bool {
        let visits = self.vertex_counts.excess();
        let crossings = self.edge_counts.excess();
        let directed = self.directed_counts.excess();
        visits == self.step + 1 && crossings == self.step && directed == self.step
    }

    #[cfg(test)]
    pub(crate) fn bump_vertex_count(&mut self, v: Vertex, by: u64) {
        self.vertex_counts.incr(v, by);
    }

    pub fn snapshot(&self) -> CounterSnapshot {
        CounterSnapshot {
            position: self.position,
            step: self.step,
            vertex_counts: self.vertex_counts.iter().collect(),
            edge_counts: self.edge_counts.iter().collect(),
            directed_counts: self.directed_counts.iter().collect(),
        }
    }
}

/// Serializable view of the non-default counters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterSnapshot {
    pub position: Vertex,
    pub step: u64,
    pub vertex_counts: Vec<(Vertex, u64)>,
    pub edge_counts: Vec<(EdgeId, u64)>,
    /// Keyed by `2 * edge + (from > to)`.
    pub directed_counts: Vec<(i64, u64)>,
}

/// Observer of a running walk. Trackers see every step, in order; the
/// `before` state is `F_{n-1}`-measurable data for step `n`.
pub trait Tracker {
    fn on_step(&mut self, before: &WalkState, step: Step) -> Result<()>;

    fn after_step(&mut self, _after: &WalkState) -> Result<()> {
        Ok(())
    }
}

/// Guard shared by trackers to refuse gaps in the history.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepCursor {
    next: u64,
}

impl StepCursor {
    pub fn new(start: u64) -> Self {
        StepCursor { next: start }
    }

    /// Accepts the step leaving a state at time `seen`.
    pub fn advance(&mut self, seen: u64) -> Result<()> {
        if seen != self.next {
            return Err(Error::MissedStep {
                expected: self.next,
                seen,
            });
        }
        self.next += 1;
        Ok(())
    }

    pub fn steps(&self) -> u64 {
        self.next
    }
}

#[inline]
fn count_of(state: &WalkState, nb: &Neighbor, mode: Mode) -> u64 {
    match mode {
        Mode::Vertex => state.vertex_count(nb.vertex),
        Mode::Edge => state.edge_count(nb.edge),
    }
}

type Weights = SmallVec<[f64; 8]>;
type Nbrs = SmallVec<[Neighbor; 8]>;

fn unnormalized(
    g: &Graph,
    w: &WeightFunction,
    state: &WalkState,
    mode: Mode,
) -> Result<(Nbrs, Weights)> {
    let nbrs: Nbrs = g.neighbors(state.position).collect();
    if nbrs.is_empty() {
        return Err(if g.contains(state.position) {
            Error::IsolatedVertex(state.position)
        } else {
            Error::UnknownVertex(state.position)
        });
    }
    let mut weights: Weights = nbrs
        .iter()
        .map(|nb| nb.propensity * w.at(count_of(state, nb, mode)))
        .collect();
    let total: f64 = weights.iter().sum();
    if !(total.is_finite() && total > 0.0) || weights.iter().any(|x| *x == 0.0) {
        // overflow or underflow: renormalize in log space
        let logs: Weights = nbrs
            .iter()
            .map(|nb| nb.propensity.ln() + w.ln_at(count_of(state, nb, mode)))
            .collect();
        let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (x, l) in weights.iter_mut().zip(&logs) {
            *x = (l - m).exp();
        }
    }
    Ok((nbrs, weights))
}

/// Conditional law of the next position, as `(neighbour, probability)` in
/// increasing neighbour order.
pub fn transition_distribution(
    g: &Graph,
    w: &WeightFunction,
    state: &WalkState,
    mode: Mode,
) -> Result<Vec<(Vertex, f64)>> {
    let (nbrs, weights) = unnormalized(g, w, state, mode)?;
    let total: f64 = weights.iter().sum();
    Ok(nbrs
        .iter()
        .zip(&weights)
        .map(|(nb, x)| (nb.vertex, x / total))
        .collect())
}

/// Picks the next step by cumulative-sum inversion of a uniform `u` in `[0,1)`.
#[inline]
pub fn choose_step(
    g: &Graph,
    w: &WeightFunction,
    state: &WalkState,
    mode: Mode,
    u: f64,
) -> Result<Step> {
    if let Graph::Line { .. } = g {
        let v = state.position;
        let (cl, cr) = match mode {
            Mode::Vertex => (state.vertex_count(v - 1), state.vertex_count(v + 1)),
            Mode::Edge => (state.edge_count(v - 1), state.edge_count(v)),
        };
        let (wl, wr) = (w.at(cl), w.at(cr));
        let total = wl + wr;
        let go_left = if total.is_finite() && wl > 0.0 && wr > 0.0 {
            u * total < wl
        } else {
            // same renormalization as the general path
            let (ll, lr) = (w.ln_at(cl), w.ln_at(cr));
            let m = ll.max(lr);
            let (el, er) = ((ll - m).exp(), (lr - m).exp());
            u * (el + er) < el
        };
        let (to, edge) = if go_left { (v - 1, v - 1) } else { (v + 1, v) };
        return Ok(Step { from: v, to, edge });
    }
    let (nbrs, weights) = unnormalized(g, w, state, mode)?;
    let total: f64 = weights.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    let mut pick = nbrs[nbrs.len() - 1];
    for (nb, x) in nbrs.iter().zip(&weights) {
        acc += x;
        if target < acc {
            pick = *nb;
            break;
        }
    }
    Ok(Step {
        from: state.position,
        to: pick.vertex,
        edge: pick.edge,
    })
}

/// A walk together with its graph, weight function and random stream.
#[derive(Clone, Debug)]
pub struct Walk<'g> {
    graph: &'g Graph,
    weight: WeightFunction,
    mode: Mode,
    state: WalkState,
    rng: SimRng,
}

impl<'g> Walk<'g> {
    pub fn new(
        graph: &'g Graph,
        weight: WeightFunction,
        mode: Mode,
        x0: Vertex,
        rng: SimRng,
    ) -> Result<Self> {
        if !graph.contains(x0) {
            return Err(Error::UnknownVertex(x0));
        }
        if graph.neighbors(x0).next().is_none() {
            return Err(Error::IsolatedVertex(x0));
        }
        Ok(Walk {
            graph,
            weight,
            mode,
            state: WalkState::new(x0),
            rng,
        })
    }

    pub fn state(&self) -> &WalkState {
        &self.state
    }

    pub fn graph(&self) -> &Graph {
        self.graph
    }

    pub fn weight(&self) -> &WeightFunction {
        &self.weight
    }

    /// One step without observers.
    #[inline]
    pub fn step(&mut self) -> Result<Step> {
        let u = self.rng.uniform();
        let s = choose_step(self.graph, &self.weight, &self.state, self.mode, u)?;
        self.state.record(s);
        Ok(s)
    }

    /// One step, reported to every tracker.
    pub fn step_observed(&mut self, trackers: &mut [&mut dyn Tracker]) -> Result<Step> {
        let u = self.rng.uniform();
        let s = choose_step(self.graph, &self.weight, &self.state, self.mode, u)?;
        for t in trackers.iter_mut() {
            t.on_step(&self.state, s)?;
        }
        self.state.record(s);
        for t in trackers.iter_mut() {
            t.after_step(&self.state)?;
        }
        Ok(s)
    }

    /// Advances `n` steps, appending positions to `positions` when given.
    pub fn advance(
        &mut self,
        n: u64,
        trackers: &mut [&mut dyn Tracker],
        mut positions: Option<&mut Vec<Vertex>>,
    ) -> Result<()> {
        for _ in 0..n {
            let s = if trackers.is_empty() {
                self.step()?
            } else {
                self.step_observed(trackers)?
            };
            if let Some(p) = positions.as_deref_mut() {
                p.push(s.to);
            }
        }
        Ok(())
    }

    pub fn into_state(self) -> WalkState {
        self.state
    }
}

/// Full record of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    /// `X_0, ..., X_N`.
    pub positions: Vec<Vertex>,
    pub final_state: WalkState,
}

impl Trace {
    pub fn steps(&self) -> usize {
        self.positions.len() - 1
    }

    /// Times `n` with `X_n = x`, in increasing order.
    pub fn visit_times(&self, x: Vertex) -> Vec<u64> {
        self.positions
            .iter()
            .enumerate()
            .filter(|(_, v)| **v == x)
            .map(|(n, _)| n as u64)
            .collect()
    }

    /// Times `k` with `X_{k-1} = from` and `X_k = to`.
    pub fn crossing_times(&self, from: Vertex, to: Vertex) -> Vec<u64> {
        self.positions
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[0] == from && w[1] == to)
            .map(|(k, _)| k as u64 + 1)
            .collect()
    }

    /// Consecutive positions are adjacent in `g`.
    pub fn is_path_in(&self, g: &Graph) -> bool {
        self.positions.windows(2).all(|w| g.adjacent(w[0], w[1]))
    }

    /// CSV with columns `step,position`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "step,position")?;
        for (n, x) in self.positions.iter().enumerate() {
            writeln!(out, "{n},{x}")?;
        }
        Ok(())
    }
}

/// Runs `n` steps from `x0` and returns the full trace.
pub fn run(
    g: &Graph,
    w: &WeightFunction,
    x0: Vertex,
    n: u64,
    mode: Mode,
    rng: SimRng,
    trackers: &mut [&mut dyn Tracker],
) -> Result<Trace> {
    let mut walk = Walk::new(g, w.clone(), mode, x0, rng)?;
    let mut positions = Vec::with_capacity(n as usize + 1);
    positions.push(x0);
    walk.advance(n, trackers, Some(&mut positions))?;
    Ok(Trace {
        positions,
        final_state: walk.into_state(),
    })
}

pub const MAX_ENUMERATION_STEPS: usize = 12;

/// Every trajectory of length `k` from `x0` with its exact probability.
///
/// Requires a weight function and propensities with exact rational values.
pub fn exact_path_distribution(
    g: &Graph,
    w: &WeightFunction,
    x0: Vertex,
    k: usize,
    mode: Mode,
) -> Result<BTreeMap<Vec<Vertex>, BigRational>> {
    if k > MAX_ENUMERATION_STEPS {
        return Err(Error::EnumerationTooLong {
            requested: k,
            limit: MAX_ENUMERATION_STEPS,
        });
    }
    if !g.contains(x0) {
        return Err(Error::UnknownVertex(x0));
    }
    let mut out = BTreeMap::new();
    let mut path = vec![x0];
    let one = BigRational::from_integer(BigInt::from(1));
    enumerate(g, w, mode, &WalkState::new(x0), k, &one, &mut path, &mut out)?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn enumerate(
    g: &Graph,
    w: &WeightFunction,
    mode: Mode,
    state: &WalkState,
    left: usize,
    mass: &BigRational,
    path: &mut Vec<Vertex>,
    out: &mut BTreeMap<Vec<Vertex>, BigRational>,
) -> Result<()> {
    if left == 0 {
        out.insert(path.clone(), mass.clone());
        return Ok(());
    }
    let nbrs: Vec<Neighbor> = g.neighbors(state.position).collect();
    if nbrs.is_empty() {
        return Err(Error::IsolatedVertex(state.position));
    }
    let mut weights = Vec::with_capacity(nbrs.len());
    for nb in &nbrs {
        let a = BigRational::from_float(nb.propensity)
            .ok_or_else(|| Error::NotRational(format!("propensity {}", nb.propensity)))?;
        weights.push(a * w.exact(count_of(state, nb, mode))?);
    }
    let total = weights.iter().fold(BigRational::zero(), |acc, x| acc + x);
    for (nb, x) in nbrs.iter().zip(weights) {
        let mut next = state.clone();
        next.record(Step {
            from: state.position,
            to: nb.vertex,
            edge: nb.edge,
        });
        path.push(nb.vertex);
        let m = mass * x / &total;
        enumerate(g, w, mode, &next, left - 1, &m, path, out)?;
        path.pop();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_cycle, build_edge_list, build_line};
    use num_traits::One;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn lin() -> WeightFunction {
        WeightFunction::power(0.0, 1.0).unwrap()
    }

    #[test]
    fn transition_examples() {
        let g = build_line(0);
        let mut s = WalkState::new(0);
        s.vertex_counts.set(-1, 2);
        s.vertex_counts.set(1, 3);
        let d = transition_distribution(&g, &lin(), &s, Mode::Vertex).unwrap();
        assert_eq!(d, vec![(-1, 0.4), (1, 0.6)]);

        let fresh = WalkState::new(0);
        let d = transition_distribution(&g, &lin(), &fresh, Mode::Vertex).unwrap();
        assert_eq!(d, vec![(-1, 0.5), (1, 0.5)]);

        let mut s = WalkState::new(1);
        s.edge_counts.set(0, 2);
        let d = transition_distribution(&g, &lin(), &s, Mode::Edge).unwrap();
        assert!((d[0].1 - 2.0 / 3.0).abs() < 1e-15 && (d[1].1 - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn isolated_start_is_rejected() {
        let g = build_edge_list(&[(0, 1, 1.0)]).unwrap();
        assert_eq!(
            Walk::new(&g, lin(), Mode::Vertex, 5, SimRng::from_seed(1)).err(),
            Some(Error::UnknownVertex(5))
        );
    }

    #[test]
    fn overflowing_weights_fall_back_to_log_space() {
        let g = build_line(0);
        let w = crate::weights::WeightSpec::Geometric { base: 2.0 }.build().unwrap();
        let mut s = WalkState::new(0);
        s.vertex_counts.set(-1, 2000);
        s.vertex_counts.set(1, 1999);
        let d = transition_distribution(&g, &w, &s, Mode::Vertex).unwrap();
        assert!((d[0].1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn enumeration_examples() {
        let g = build_line(0);
        let d1 = exact_path_distribution(&g, &lin(), 0, 1, Mode::Vertex).unwrap();
        assert_eq!(d1.len(), 2);
        assert!(d1.values().all(|p| *p == r(1, 2)));

        let d2 = exact_path_distribution(&g, &lin(), 0, 2, Mode::Vertex).unwrap();
        assert_eq!(d2[&vec![0, 1, 2]], r(1, 6));
        assert_eq!(d2[&vec![0, 1, 0]], r(1, 3));
        assert_eq!(d2[&vec![0, -1, -2]], r(1, 6));
        let back: BigRational = d2.iter().filter(|(p, _)| p[2] == 0).map(|(_, m)| m.clone()).sum();
        assert_eq!(back, r(2, 3));

        let e2 = exact_path_distribution(&g, &lin(), 0, 2, Mode::Edge).unwrap();
        let back: BigRational = e2.iter().filter(|(p, _)| p[2] == 0).map(|(_, m)| m.clone()).sum();
        assert_eq!(back, r(2, 3));

        for k in 0..=6 {
            let d = exact_path_distribution(&g, &lin(), 0, k, Mode::Vertex).unwrap();
            assert_eq!(d.values().cloned().sum::<BigRational>(), BigRational::one());
        }
        assert!(matches!(
            exact_path_distribution(&g, &lin(), 0, 13, Mode::Vertex),
            Err(Error::EnumerationTooLong { .. })
        ));
    }

    #[test]
    fn zero_step_trace() {
        let g = build_line(0);
        let t = run(&g, &lin(), 0, 0, Mode::Vertex, SimRng::from_seed(3), &mut []).unwrap();
        assert_eq!(t.positions, vec![0]);
        assert_eq!(t.final_state.vertex_count(0), 2);
        assert!(t.final_state.conservation_holds());
    }

    #[test]
    fn runs_are_reproducible() {
        let g = build_line(0);
        let a = run(&g, &lin(), 0, 10, Mode::Vertex, SimRng::from_seed(9), &mut []).unwrap();
        let b = run(&g, &lin(), 0, 10, Mode::Vertex, SimRng::from_seed(9), &mut []).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn traces_are_paths_and_counters_recompute() {
        let g = build_cycle(5).unwrap();
        for mode in [Mode::Vertex, Mode::Edge] {
            let t = run(&g, &lin(), 0, 500, mode, SimRng::from_seed(4), &mut []).unwrap();
            assert!(t.is_path_in(&g));
            assert!(t.final_state.conservation_holds());
            for v in 0..5 {
                let visits = t.visit_times(v).len() as u64;
                assert_eq!(t.final_state.vertex_count(v), visits + 1);
            }
        }
    }

    #[test]
    fn directed_counts_match_departures_on_the_line() {
        let g = build_line(0);
        let t = run(&g, &lin(), 0, 2000, Mode::Vertex, SimRng::from_seed(5), &mut []).unwrap();
        let s = &t.final_state;
        for x in -30..30 {
            let departures = t.positions[..t.positions.len() - 1]
                .iter()
                .filter(|v| **v == x)
                .count() as u64;
            assert_eq!(s.z_plus(x) + s.z_minus(x), departures);
            assert_eq!(s.z_plus(x), t.crossing_times(x, x + 1).len() as u64);
        }
    }

    #[test]
    fn csv_export() {
        let g = build_line(0);
        let t = run(&g, &lin(), 0, 2, Mode::Vertex, SimRng::from_seed(1), &mut []).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("step,position\n0,0\n"));
    }

    struct Gappy(StepCursor);
    impl Tracker for Gappy {
        fn on_step(&mut self, before: &WalkState, _: Step) -> Result<()> {
            self.0.advance(before.step)
        }
    }

    #[test]
    fn trackers_refuse_gaps() {
        let g = build_line(0);
        let mut walk = Walk::new(&g, lin(), Mode::Vertex, 0, SimRng::from_seed(2)).unwrap();
        walk.step().unwrap();
        let mut t = Gappy(StepCursor::new(0));
        let err = walk.step_observed(&mut [&mut t]).unwrap_err();
        assert_eq!(err, Error::MissedStep { expected: 0, seen: 1 });
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn conservation_after_every_step(seed in 0u64..1000, rho in -1.0f64..2.5, edge in any::<bool>()) {
            let g = build_line(0);
            let w = WeightFunction::power(0.0, rho).unwrap();
            let mode = if edge { Mode::Edge } else { Mode::Vertex };
            let mut walk = Walk::new(&g, w, mode, 0, SimRng::from_seed(seed)).unwrap();
            for _ in 0..200 {
                walk.step().unwrap();
                prop_assert!(walk.state().conservation_holds());
            }
        }
    }
}
