use serde::Serialize;

use super::is_checkpoint;
use crate::error::Result;
use crate::graph::Vertex;
use crate::walk::{Step, StepCursor, Tracker, WalkState};

/// `R_n`, `z_n`, `y_n` on the frame `o+1, ..., o+4`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TriadValues {
    pub step: u64,
    /// `Z(o+4) + Z(o+2) - Z(o+1) - Z(o+3)`.
    pub r: i64,
    /// `log(Z(o+3) / Z(o+2))`.
    pub z: f64,
    /// `R / (Z(o+2) Z(o+3))`.
    pub y: f64,
    /// `Z^+(o)` and `Z^-(o+5)`.
    pub z_plus_origin: u64,
    pub z_minus_far: u64,
}

impl TriadValues {
    pub fn of(origin: Vertex, s: &WalkState) -> Self {
        let z = |k: i64| s.vertex_count(origin + k);
        let r = (z(4) + z(2)) as i64 - (z(1) + z(3)) as i64;
        TriadValues {
            step: s.step,
            r,
            z: (z(3) as f64 / z(2) as f64).ln(),
            y: r as f64 / (z(2) * z(3)) as f64,
            z_plus_origin: s.z_plus(origin),
            z_minus_far: s.z_minus(origin + 5),
        }
    }
}

/// Records [`TriadValues`] at the powers of two.
#[derive(Clone, Debug)]
pub struct TriadStatistics {
    origin: Vertex,
    cursor: StepCursor,
    checkpoints: Vec<TriadValues>,
}

impl TriadStatistics {
    pub fn new(origin: Vertex) -> Self {
        TriadStatistics {
            origin,
            cursor: StepCursor::new(0),
            checkpoints: Vec::new(),
        }
    }

    pub fn checkpoints(&self) -> &[TriadValues] {
        &self.checkpoints
    }
}

impl Tracker for TriadStatistics {
    fn on_step(&mut self, before: &WalkState, _step: Step) -> Result<()> {
        self.cursor.advance(before.step)
    }

    fn after_step(&mut self, after: &WalkState) -> Result<()> {
        if is_checkpoint(after.step) {
            self.checkpoints.push(TriadValues::of(self.origin, after));
        }
        Ok(())
    }
}
