//! Online statistics of walks and urns, exact identity checks and
//! estimators of the asymptotic range.

mod identities;
mod site;
mod triad;
mod urn;

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_line, Graph, Vertex};
use crate::walk::{Step, Tracker, WalkState};

pub use identities::{
    check_identity_1est_d, check_identity_pol_a, check_identity_ri, Identity1estD, IdentityPolA,
    IdentityRi, RiCheck,
};
pub use site::{SiteTracker, SiteValues};
pub use triad::{TriadStatistics, TriadValues};
pub use urn::{UrnMartingaleValues, UrnMartingales, DEFAULT_LAMBDAS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Minus,
    Plus,
}

impl Side {
    pub fn sign(self) -> i64 {
        match self {
            Side::Minus => -1,
            Side::Plus => 1,
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::Minus => Side::Plus,
            Side::Plus => Side::Minus,
        }
    }

    pub(crate) fn index(self) -> usize {
        match self {
            Side::Minus => 0,
            Side::Plus => 1,
        }
    }
}

/// Checkpoints are the powers of two.
#[inline]
pub fn is_checkpoint(n: u64) -> bool {
    n.is_power_of_two()
}

/// `f(t) = log(t / (1 - t))`.
pub fn logit(t: f64) -> Result<f64> {
    if t > 0.0 && t < 1.0 {
        Ok((t / (1.0 - t)).ln())
    } else {
        Err(Error::LogitDomain(t))
    }
}

/// `α_n^±(x) = Z_n(x±1) / (Z_n(x-1) + Z_n(x+1))`.
#[inline]
pub fn alpha(state: &WalkState, x: Vertex, side: Side) -> f64 {
    let m = state.vertex_count(x - 1) as f64;
    let p = state.vertex_count(x + 1) as f64;
    match side {
        Side::Minus => m / (m + p),
        Side::Plus => p / (m + p),
    }
}

/// Feeds a recorded path to trackers, as if it were being simulated.
pub fn replay(
    g: &Graph,
    positions: &[Vertex],
    trackers: &mut [&mut dyn Tracker],
) -> Result<WalkState> {
    let x0 = *positions.first().ok_or(Error::EmptySample)?;
    let mut state = WalkState::new(x0);
    for w in positions.windows(2) {
        let edge = g
            .edge_between(w[0], w[1])
            .ok_or(Error::NotAdjacent(w[0], w[1]))?;
        let step = Step {
            from: w[0],
            to: w[1],
            edge,
        };
        for t in trackers.iter_mut() {
            t.on_step(&state, step)?;
        }
        state.record(step);
        for t in trackers.iter_mut() {
            t.after_step(&state)?;
        }
    }
    Ok(state)
}

/// [`replay`] on the integer line.
pub fn replay_line(positions: &[Vertex], trackers: &mut [&mut dyn Tracker]) -> Result<WalkState> {
    replay(&build_line(0), positions, trackers)
}

fn tail_start(len: usize, tail_fraction: f64) -> Result<usize> {
    if len == 0 {
        return Err(Error::EmptySample);
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "tail fraction must lie in (0, 1], got {tail_fraction}"
        )));
    }
    let steps = (len - 1) as f64;
    Ok(((1.0 - tail_fraction) * steps).floor() as usize)
}

/// Vertices visited within the trailing `tail_fraction` of the steps.
pub fn estimate_asymptotic_range(positions: &[Vertex], tail_fraction: f64) -> Result<BTreeSet<Vertex>> {
    let start = tail_start(positions.len(), tail_fraction)?;
    Ok(positions[start..].iter().copied().collect())
}

/// Edges `(lo, hi)` crossed within the trailing `tail_fraction` of the steps.
pub fn estimate_asymptotic_edges(
    positions: &[Vertex],
    tail_fraction: f64,
) -> Result<BTreeSet<(Vertex, Vertex)>> {
    let start = tail_start(positions.len(), tail_fraction)?;
    Ok(positions[start..]
        .windows(2)
        .map(|w| (w[0].min(w[1]), w[0].max(w[1])))
        .collect())
}

/// `Y_N(x) - Y_m(x)`: the part of the `Y(x)` series accrued after time `m`.
pub fn upsilon_proxy(positions: &[Vertex], x: Vertex, m: u64) -> Result<f64> {
    let mut site = SiteTracker::new([x], positions.first().copied().ok_or(Error::EmptySample)?);
    let mut at_m = 0.0;
    let mut n = 0u64;
    let mut y = 0.0;
    let mut tracker = Recorder {
        inner: &mut site,
        on_after: |s: &SiteTracker, step: u64| {
            n = step;
            y = s.values(x).map_or(0.0, |v| v.y);
            if step == m {
                at_m = y;
            }
        },
    };
    replay_line(positions, &mut [&mut tracker])?;
    if m > n {
        return Ok(0.0);
    }
    Ok(y - at_m)
}

/// Wraps a site tracker with a callback after each step.
struct Recorder<'a, F> {
    inner: &'a mut SiteTracker,
    on_after: F,
}

impl<F: FnMut(&SiteTracker, u64)> Tracker for Recorder<'_, F> {
    fn on_step(&mut self, before: &WalkState, step: Step) -> Result<()> {
        self.inner.on_step(before, step)
    }

    fn after_step(&mut self, after: &WalkState) -> Result<()> {
        self.inner.after_step(after)?;
        (self.on_after)(self.inner, after.step);
        Ok(())
    }
}

/// `sup_{m <= k <= n} f(α_n^-(y)) - f(α_k^-(y)) - (Y_n(y-2) - Y_k(y-2))`
/// with `n` the length of the path.
pub fn logit_drift_statistic(positions: &[Vertex], y: Vertex, m: u64) -> Result<f64> {
    let x0 = *positions.first().ok_or(Error::EmptySample)?;
    let n = (positions.len() - 1) as u64;
    if m > n {
        return Err(Error::InvalidArgument(format!("m = {m} exceeds path length {n}")));
    }
    let mut site = SiteTracker::new([y, y - 2], x0);
    // track min over k >= m of f(α_k) - Y_k and the terminal value
    let mut lowest = f64::INFINITY;
    let mut last = 0.0;
    let mut failure = None;
    let mut probe = |s: &SiteTracker, k: u64| {
        if k < m || failure.is_some() {
            return;
        }
        let a = s.values(y).unwrap().alpha[Side::Minus.index()];
        match logit(a) {
            Ok(f) => {
                let v = f - s.values(y - 2).unwrap().y;
                lowest = lowest.min(v);
                last = v;
            }
            Err(e) => failure = Some(e),
        }
    };
    probe(&site, 0);
    let mut tracker = Recorder {
        inner: &mut site,
        on_after: &mut probe,
    };
    replay_line(positions, &mut [&mut tracker])?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(last - lowest)
}

/// Writes `(checkpoint, site, statistic, value)` rows.
pub fn write_series_csv<W: Write>(
    rows: impl IntoIterator<Item = (u64, Vertex, &'static str, f64)>,
    mut out: W,
) -> Result<()> {
    writeln!(out, "checkpoint,site,statistic,value")?;
    for (n, x, name, v) in rows {
        writeln!(out, "{n},{x},{name},{v}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logit_values() {
        assert_eq!(logit(0.5).unwrap(), 0.0);
        assert!((logit(0.75).unwrap() - 3f64.ln()).abs() < 1e-15);
        assert_eq!(logit(1.0), Err(Error::LogitDomain(1.0)));
        assert!(logit(0.0).is_err());
    }

    #[test]
    fn alpha_with_unit_counts() {
        let s = WalkState::new(0);
        assert_eq!(alpha(&s, 5, Side::Minus), 0.5);
        // Z(0) = 2, Z(2) = 1
        assert!((alpha(&s, 1, Side::Minus) - 2.0 / 3.0).abs() < 1e-15);
        assert!((alpha(&s, 1, Side::Plus) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn range_estimates() {
        let path = [3, 2, 1, 0, 1, 0, 1, 0, 1, 0, 1];
        let full: BTreeSet<_> = path.iter().copied().collect();
        assert_eq!(estimate_asymptotic_range(&path, 1.0).unwrap(), full);
        assert_eq!(
            estimate_asymptotic_range(&path, 0.5).unwrap(),
            [0, 1].into_iter().collect()
        );
        assert_eq!(
            estimate_asymptotic_edges(&path, 0.5).unwrap(),
            [(0, 1)].into_iter().collect()
        );
        assert!(estimate_asymptotic_range(&path, 0.0).is_err());
        assert!(estimate_asymptotic_range(&[], 0.5).is_err());
    }

    #[test]
    fn upsilon_proxy_examples() {
        let path = [0, 1, 0, 1, 2, 3];
        assert_eq!(upsilon_proxy(&path, 0, 3).unwrap(), 0.0);
        // 0 is left at step 3 with Z(-1) = 1, Z(1) = 2
        assert!((upsilon_proxy(&path, 0, 2).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(upsilon_proxy(&path, 0, 9).unwrap(), 0.0);
    }

    #[test]
    fn logit_drift_on_flat_trace() {
        // y = 10 far away: α stays 1/2 and Y(8) stays 0
        let path = [0, 1, 0, 1, 0];
        assert_eq!(logit_drift_statistic(&path, 10, 0).unwrap(), 0.0);
        assert!(logit_drift_statistic(&path, 10, 9).is_err());
    }

    #[test]
    fn logit_drift_by_hand() {
        // y = 1: α_k^-(1) = Z_k(0) / (Z_k(0) + Z_k(2)); Y(-1) stays 0
        let path = [0, 1, 2, 1];
        // k = 0..3: α^- = 2/3, 2/3, 2/4, 2/4
        let f = |a: f64| (a / (1.0 - a)).ln();
        let expect = f(0.5) - f(0.5).min(f(2.0 / 3.0));
        assert!((logit_drift_statistic(&path, 1, 0).unwrap() - expect).abs() < 1e-15);
        assert_eq!(expect, 0.0);
        let path = [0, 1, 2, 1, 0, -1, 0];
        // α^-(1) ends at 4/6 with Y(-1) = 1/4; the minimum of f(α) - Y is
        // f(1/2) = 0
        let expect = f(4.0 / 6.0) - 0.25;
        assert!((logit_drift_statistic(&path, 1, 0).unwrap() - expect).abs() < 1e-15);
    }
}
