use super::{AlarmSource, ContinuousTrace};
use crate::error::{Error, Result};
use crate::graph::{directed_slot, Graph, Vertex};
use crate::walk::{Step, WalkState};
use crate::weights::WeightFunction;
use crate::window::Window;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DirectedOptions {
    /// Arm the time-0 outward alarms at the raw distance `Y_1^e` instead of
    /// `Y_1^e / W(1)`. The two agree when `W(1) = 1`.
    pub raw_initial_alarms: bool,
    /// Keep the list of armings, for coupling diagnostics.
    pub record_armings: bool,
}

/// One alarm set on a directed edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arming {
    pub from: Vertex,
    pub to: Vertex,
    /// Index `k` of the alarm `Y_k^e`.
    pub k: u64,
    /// `Y_k^e`.
    pub unit: f64,
    /// Rate divisor `W(Z(to))` (or 1 for raw initial alarms).
    pub weight: f64,
    /// Number of jumps made before the arming.
    pub at_jump: u64,
}

impl Arming {
    /// Local-time distance of the alarm.
    pub fn distance(&self) -> f64 {
        self.unit / self.weight
    }
}

#[derive(Clone, Debug)]
pub struct DirectedRun {
    pub trace: ContinuousTrace,
    pub final_state: WalkState,
    pub armings: Vec<Arming>,
    /// Local time consumed by each directed clock, keyed by directed slot.
    pub local_times: Vec<(i64, f64)>,
}

const UNARMED: f64 = -1.0;
const CONSUMED: f64 = -2.0;

/// Directed-edge time-lines for the vertex walk on the integer line.
///
/// The clock of a directed edge runs only while the walker sits at its
/// source. Crossing `e = (x, y)` arms `(y, x)` at distance
/// `Y_{k+1}^{(y,x)} / W(Z(x))` with `k` the number of earlier crossings of
/// `(y, x)`; at time 0 the outward edges `(x, x+1)`, `x >= x0`, and
/// `(x, x-1)`, `x <= x0`, are armed with `Y_1^e / W(1)`.
pub fn simulate_vsirw_directed_timelines<A: AlarmSource>(
    g: &Graph,
    w: &WeightFunction,
    x0: Vertex,
    steps: u64,
    alarms: &A,
    opts: DirectedOptions,
) -> Result<DirectedRun> {
    if !g.is_line() {
        return Err(Error::InvalidGraph(
            "directed time-lines are defined on the integer line".into(),
        ));
    }
    let mut state = WalkState::new(x0);
    let mut remaining: Window<f64> = Window::new(UNARMED);
    let mut local: Window<f64> = Window::new(0.0);
    let mut trace = ContinuousTrace::start(x0);
    let mut armings = Vec::new();
    let initial_weight = if opts.raw_initial_alarms { 1.0 } else { w.at(1) };
    let mut now = 0.0;
    for n in 0..steps {
        let v = state.position;
        let left = directed_slot(v, v - 1, v - 1);
        let right = directed_slot(v, v + 1, v);
        let mut r = [0.0; 2];
        for (i, (slot, to, outward)) in [(left, v - 1, v <= x0), (right, v + 1, v >= x0)]
            .into_iter()
            .enumerate()
        {
            let mut x = remaining.get(slot);
            if x == UNARMED && outward {
                let unit = alarms.unit(slot, 1);
                x = unit / initial_weight;
                remaining.set(slot, x);
                if opts.record_armings {
                    armings.push(Arming {
                        from: v,
                        to,
                        k: 1,
                        unit,
                        weight: initial_weight,
                        at_jump: 0,
                    });
                }
            }
            if x < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "clock ({v},{to}) has no pending alarm at jump {n}"
                )));
            }
            r[i] = x;
        }
        if r[0] == r[1] {
            return Err(Error::SimultaneousAlarms {
                time: now + r[0],
                jump: n + 1,
            });
        }
        let (dt, to, fired, other) = if r[0] < r[1] {
            (r[0], v - 1, left, right)
        } else {
            (r[1], v + 1, right, left)
        };
        now += dt;
        *local.get_mut(left) += dt;
        *local.get_mut(right) += dt;
        *remaining.get_mut(other) -= dt;
        remaining.set(fired, CONSUMED);
        let edge = v.min(to);
        state.record(Step { from: v, to, edge });
        let back = directed_slot(to, v, edge);
        let k = state.directed_count(to, v, edge) + 1;
        let unit = alarms.unit(back, k);
        let weight = w.at(state.vertex_count(v));
        remaining.set(back, unit / weight);
        if opts.record_armings {
            armings.push(Arming {
                from: to,
                to: v,
                k,
                unit,
                weight,
                at_jump: n + 1,
            });
        }
        trace.positions.push(to);
        trace.times.push(now);
    }
    Ok(DirectedRun {
        trace,
        final_state: state,
        armings,
        local_times: local.iter().collect(),
    })
}
