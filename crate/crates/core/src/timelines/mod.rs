//! Continuous-time (time-lines) constructions of the urn and the walks, and
//! the birth-process time change.
//!
//! Every construction reads its exponential alarms from an [`AlarmSource`],
//! a pure function of `(clock, k)`, so two runs can share alarms exactly.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use crate::error::Result;
use crate::graph::Vertex;
use crate::rng::{zigzag, CounterRng, StreamKey};

mod birth;
mod directed;
mod esirw;
mod wurn;

pub use birth::{kendall_transform, simulate_birth_process, KendallTransform};
pub use directed::{
    simulate_vsirw_directed_timelines, Arming, DirectedOptions, DirectedRun,
};
pub use esirw::{simulate_esirw_timelines, EsirwRun};
pub use wurn::{simulate_w_urn_timelines, UrnTimeline};

/// Unit-mean exponential alarms `Y_k^c`, `k >= 1`, indexed by a clock label.
pub trait AlarmSource {
    fn unit(&self, clock: i64, k: u64) -> f64;
}

/// Alarms drawn from a counter-based stream: re-reading `(clock, k)` always
/// gives the same value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CounterAlarms {
    rng: CounterRng,
}

impl CounterAlarms {
    pub fn new(key: StreamKey) -> Self {
        CounterAlarms {
            rng: CounterRng::new(key),
        }
    }

    pub fn from_seed(seed: u64) -> Self {
        Self::new(StreamKey::from_seed(seed).child("alarms"))
    }
}

impl AlarmSource for CounterAlarms {
    #[inline]
    fn unit(&self, clock: i64, k: u64) -> f64 {
        self.rng.unit_exponential(zigzag(clock), k - 1)
    }
}

/// A fixed table of alarms, for hand-built fixtures; missing entries fall
/// back to `fallback`.
#[derive(Clone, Debug)]
pub struct TableAlarms<A> {
    pub table: HashMap<(i64, u64), f64>,
    pub fallback: A,
}

impl<A: AlarmSource> AlarmSource for TableAlarms<A> {
    fn unit(&self, clock: i64, k: u64) -> f64 {
        match self.table.get(&(clock, k)) {
            Some(v) => *v,
            None => self.fallback.unit(clock, k),
        }
    }
}

impl<A: AlarmSource + ?Sized> AlarmSource for &A {
    fn unit(&self, clock: i64, k: u64) -> f64 {
        (**self).unit(clock, k)
    }
}

/// Jump chain with jump times; `times[0] = 0` and `times[n]` is the n-th
/// jump time.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuousTrace {
    pub positions: Vec<Vertex>,
    pub times: Vec<f64>,
}

impl ContinuousTrace {
    pub fn start(x0: Vertex) -> Self {
        ContinuousTrace {
            positions: vec![x0],
            times: vec![0.0],
        }
    }

    pub fn jumps(&self) -> usize {
        self.positions.len() - 1
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Total time spent at each vertex before the last jump.
    pub fn holding_times(&self) -> BTreeMap<Vertex, f64> {
        holding_times(self)
    }

    /// CSV with columns `jumpIndex,realTime,position`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "jumpIndex,realTime,position")?;
        for (n, (t, x)) in self.times.iter().zip(&self.positions).enumerate() {
            writeln!(out, "{n},{t:e},{x}")?;
        }
        Ok(())
    }
}

/// `T_j`: the sum of the inter-jump intervals spent at `j`. Every vertex of
/// the trace appears, possibly with zero time.
pub fn holding_times(trace: &ContinuousTrace) -> BTreeMap<Vertex, f64> {
    let mut out: BTreeMap<Vertex, f64> = trace.positions.iter().map(|v| (*v, 0.0)).collect();
    for (n, w) in trace.times.windows(2).enumerate() {
        *out.get_mut(&trace.positions[n]).unwrap() += w[1] - w[0];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn holding_time_bookkeeping() {
        let t = ContinuousTrace {
            positions: vec![0, 1, 0, 1],
            times: vec![0.0, 0.5, 1.25, 2.0],
        };
        let h = holding_times(&t);
        assert_eq!(h[&0], 0.5 + 0.75);
        assert_eq!(h[&1], 0.75);
        assert_eq!(h.values().sum::<f64>(), t.last_time());
        let h0 = holding_times(&ContinuousTrace::start(3));
        assert_eq!(h0[&3], 0.0);
    }

    #[test]
    fn counter_alarms_are_stable() {
        let a = CounterAlarms::from_seed(1);
        assert_eq!(a.unit(-3, 4), a.unit(-3, 4));
        assert_ne!(a.unit(-3, 4), a.unit(3, 4));
        let n = 20_000;
        let mean = (1..=n).map(|k| a.unit(7, k)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn csv_export() {
        let t = ContinuousTrace {
            positions: vec![0, 1],
            times: vec![0.0, 0.5],
        };
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "jumpIndex,realTime,position\n0,0e0,0\n1,5e-1,1\n");
    }
}
