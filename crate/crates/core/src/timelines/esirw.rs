use smallvec::SmallVec;

use super::{AlarmSource, ContinuousTrace};
use crate::error::{Error, Result};
use crate::graph::{EdgeId, Graph, Neighbor, Vertex};
use crate::walk::{Step, WalkState};
use crate::weights::WeightFunction;
use crate::window::Window;

/// Result of an edge time-lines run.
#[derive(Clone, Debug)]
pub struct EsirwRun {
    pub trace: ContinuousTrace,
    pub final_state: WalkState,
    /// Local time consumed by each edge clock.
    pub local_times: Vec<(EdgeId, f64)>,
}

const UNARMED: f64 = -1.0;

/// Edge time-lines: each non-oriented edge carries a clock that runs while
/// the walker sits at one of its endpoints. After its k-th crossing (and at
/// time 0 with k = 0) the edge is armed at local-time distance
/// `Y_{k+1}^e / (a_e W(k + 1))`, i.e. at rate `a_e W(Z(e))`; the walker
/// crosses the edge whose alarm rings first.
pub fn simulate_esirw_timelines<A: AlarmSource>(
    g: &Graph,
    w: &WeightFunction,
    x0: Vertex,
    steps: u64,
    alarms: &A,
) -> Result<EsirwRun> {
    if !g.contains(x0) {
        return Err(Error::UnknownVertex(x0));
    }
    let mut state = WalkState::new(x0);
    let mut remaining: Window<f64> = Window::new(UNARMED);
    let mut local: Window<f64> = Window::new(0.0);
    let mut trace = ContinuousTrace::start(x0);
    let mut now = 0.0;
    for n in 0..steps {
        let v = state.position;
        let nbrs: SmallVec<[Neighbor; 8]> = g.neighbors(v).collect();
        if nbrs.is_empty() {
            return Err(Error::IsolatedVertex(v));
        }
        let mut best: Option<(f64, Neighbor)> = None;
        let mut tie = false;
        for nb in &nbrs {
            let mut r = remaining.get(nb.edge);
            if r == UNARMED {
                r = alarms.unit(nb.edge, 1) / (nb.propensity * w.at(1));
                remaining.set(nb.edge, r);
            }
            match best {
                Some((b, _)) if r == b => tie = true,
                Some((b, _)) if r > b => {}
                _ => {
                    best = Some((r, *nb));
                    tie = false;
                }
            }
        }
        let (dt, fire) = best.unwrap();
        if tie {
            return Err(Error::SimultaneousAlarms {
                time: now + dt,
                jump: n + 1,
            });
        }
        now += dt;
        let mut seen: SmallVec<[EdgeId; 8]> = SmallVec::new();
        for nb in &nbrs {
            if seen.contains(&nb.edge) {
                continue;
            }
            seen.push(nb.edge);
            *local.get_mut(nb.edge) += dt;
            if nb.edge != fire.edge {
                *remaining.get_mut(nb.edge) -= dt;
            }
        }
        state.record(Step {
            from: v,
            to: fire.vertex,
            edge: fire.edge,
        });
        let z = state.edge_count(fire.edge);
        remaining.set(
            fire.edge,
            alarms.unit(fire.edge, z) / (fire.propensity * w.at(z)),
        );
        trace.positions.push(fire.vertex);
        trace.times.push(now);
    }
    Ok(EsirwRun {
        trace,
        final_state: state,
        local_times: local.iter().collect(),
    })
}
