use serde::{Deserialize, Serialize};

use super::{replay_line, Side};
use crate::error::{Error, Result};
use crate::graph::Vertex;
use crate::walk::{Step, StepCursor, Tracker, WalkState};
use crate::weights::HarmonicCache;

/// Watches `Y_n^+(x-1) + Y_n^-(x+1) = h(Z_n(x)) - h(1 + 1{X_0 = x})`.
#[derive(Clone, Debug)]
pub struct Identity1estD {
    x: Vertex,
    left: f64,
    right: f64,
    base: f64,
    h: HarmonicCache,
    cursor: StepCursor,
    max_deviation: f64,
}

impl Identity1estD {
    pub fn new(x: Vertex, x0: Vertex) -> Self {
        let mut h = HarmonicCache::new(0.0);
        let base = h.get(1 + u64::from(x0 == x));
        Identity1estD {
            x,
            left: 0.0,
            right: 0.0,
            base,
            h,
            cursor: StepCursor::new(0),
            max_deviation: 0.0,
        }
    }

    pub fn max_deviation(&self) -> f64 {
        self.max_deviation
    }
}

impl Tracker for Identity1estD {
    fn on_step(&mut self, before: &WalkState, step: Step) -> Result<()> {
        self.cursor.advance(before.step)?;
        if step.to == self.x {
            let inc = 1.0 / before.vertex_count(self.x) as f64;
            if step.from == self.x - 1 {
                self.left += inc;
            } else {
                self.right += inc;
            }
        }
        Ok(())
    }

    fn after_step(&mut self, after: &WalkState) -> Result<()> {
        let rhs = self.h.get(after.vertex_count(self.x)) - self.base;
        let d = (self.left + self.right - rhs).abs();
        self.max_deviation = self.max_deviation.max(d);
        Ok(())
    }
}

/// Watches `Y_n^±(x) + 1{±X_n <= ±x} / Z_{n-1}(x±1) - U_{n,∓}^+(x±1)`,
/// with `Z_{-1} = 1`, for constancy.
#[derive(Clone, Debug)]
pub struct IdentityPolA {
    x: Vertex,
    side: Side,
    y: f64,
    u: f64,
    prev_z: f64,
    initial: f64,
    cursor: StepCursor,
    max_deviation: f64,
}

impl IdentityPolA {
    pub fn new(x: Vertex, side: Side, x0: Vertex) -> Self {
        let mut t = IdentityPolA {
            x,
            side,
            y: 0.0,
            u: 0.0,
            prev_z: 1.0,
            initial: 0.0,
            cursor: StepCursor::new(0),
            max_deviation: 0.0,
        };
        t.initial = t.value(x0);
        t
    }

    fn value(&self, position: Vertex) -> f64 {
        let s = self.side.sign();
        let behind = if s * position <= s * self.x { 1.0 } else { 0.0 };
        self.y + behind / self.prev_z - self.u
    }

    pub fn initial_value(&self) -> f64 {
        self.initial
    }

    pub fn max_deviation(&self) -> f64 {
        self.max_deviation
    }
}

impl Tracker for IdentityPolA {
    fn on_step(&mut self, before: &WalkState, step: Step) -> Result<()> {
        self.cursor.advance(before.step)?;
        let nb = self.x + self.side.sign();
        let z = before.vertex_count(nb) as f64;
        if step.from == self.x && step.to == nb {
            self.y += 1.0 / z;
        } else if step.from == nb && step.to == self.x {
            self.u += 1.0 / z;
        }
        self.prev_z = z;
        Ok(())
    }

    fn after_step(&mut self, after: &WalkState) -> Result<()> {
        let d = (self.value(after.position) - self.initial).abs();
        self.max_deviation = self.max_deviation.max(d);
        Ok(())
    }
}

/// Watches `R_n - (Z_n^-(o+5) - Z_n^+(o) + 1{X_n = o+2 or X_n >= o+4})`
/// for constancy, in integer arithmetic.
#[derive(Clone, Debug)]
pub struct IdentityRi {
    origin: Vertex,
    constant: i64,
    first_break: Option<u64>,
    cursor: StepCursor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiCheck {
    pub constant: i64,
    pub holds: bool,
    /// First time the quantity left its initial value.
    pub first_break: Option<u64>,
}

impl IdentityRi {
    pub fn new(origin: Vertex, x0: Vertex) -> Self {
        IdentityRi {
            origin,
            constant: Self::quantity(origin, &WalkState::new(x0)),
            first_break: None,
            cursor: StepCursor::new(0),
        }
    }

    fn quantity(o: Vertex, s: &WalkState) -> i64 {
        let z = |k: i64| s.vertex_count(o + k) as i64;
        let r = z(4) + z(2) - z(1) - z(3);
        let rel = s.position - o;
        let ind = i64::from(rel == 2 || rel >= 4);
        r - (s.z_minus(o + 5) as i64 - s.z_plus(o) as i64 + ind)
    }

    pub fn result(&self) -> RiCheck {
        RiCheck {
            constant: self.constant,
            holds: self.first_break.is_none(),
            first_break: self.first_break,
        }
    }
}

impl Tracker for IdentityRi {
    fn on_step(&mut self, before: &WalkState, _step: Step) -> Result<()> {
        self.cursor.advance(before.step)
    }

    fn after_step(&mut self, after: &WalkState) -> Result<()> {
        if self.first_break.is_none() && Self::quantity(self.origin, after) != self.constant {
            self.first_break = Some(after.step);
        }
        Ok(())
    }
}

fn start(positions: &[Vertex]) -> Result<Vertex> {
    positions.first().copied().ok_or(Error::EmptySample)
}

/// Largest deviation of the `h`-identity at `x` over a path on the line.
pub fn check_identity_1est_d(positions: &[Vertex], x: Vertex) -> Result<f64> {
    let mut t = Identity1estD::new(x, start(positions)?);
    replay_line(positions, &mut [&mut t])?;
    Ok(t.max_deviation())
}

/// Largest deviation from its initial value of the conserved quantity at
/// `(x, side)` over a path on the line.
pub fn check_identity_pol_a(positions: &[Vertex], x: Vertex, side: Side) -> Result<f64> {
    let mut t = IdentityPolA::new(x, side, start(positions)?);
    replay_line(positions, &mut [&mut t])?;
    Ok(t.max_deviation())
}

/// Integer conservation law of the frame `origin, ..., origin + 5`.
pub fn check_identity_ri(positions: &[Vertex], origin: Vertex) -> Result<RiCheck> {
    let mut t = IdentityRi::new(origin, start(positions)?);
    replay_line(positions, &mut [&mut t])?;
    Ok(t.result())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_line;
    use crate::rng::SimRng;
    use crate::walk::{run, Mode};
    use crate::weights::WeightFunction;

    fn vrrw(seed: u64, n: u64) -> Vec<Vertex> {
        let w = WeightFunction::power(0.0, 1.0).unwrap();
        run(&build_line(0), &w, 0, n, Mode::Vertex, SimRng::from_seed(seed), &mut [])
            .unwrap()
            .positions
    }

    #[test]
    fn hand_trace_1est_d() {
        // Y^+(0) collects 1/Z_0(1) + 1/Z_2(1) = 1 + 1/2 = h(3) - h(1)
        let path = [0, 1, 0, 1];
        let mut t = Identity1estD::new(1, 0);
        replay_line(&path, &mut [&mut t]).unwrap();
        assert!((t.left - 1.5).abs() < 1e-15);
        assert_eq!(t.right, 0.0);
        assert!(t.max_deviation() < 1e-15);
    }

    #[test]
    fn corrupted_count_is_detected() {
        let path = [0, 1, 0, 1, 2, 1];
        let mut t = Identity1estD::new(1, 0);
        let mut s = WalkState::new(0);
        for (k, w) in path.windows(2).enumerate() {
            let step = Step { from: w[0], to: w[1], edge: w[0].min(w[1]) };
            t.on_step(&s, step).unwrap();
            s.record(step);
            if k == 2 {
                s.bump_vertex_count(1, 1);
            }
            t.after_step(&s).unwrap();
        }
        assert!(t.max_deviation() > 0.1);
    }

    #[test]
    fn hand_trace_pol_a() {
        // values at n = 0, 1, 2: 1, 0 + 1 + 0, 1 + 1/2 - 1/2
        let path = [0, 1, 0];
        let mut t = IdentityPolA::new(0, Side::Plus, 0);
        assert_eq!(t.initial_value(), 1.0);
        replay_line(&path, &mut [&mut t]).unwrap();
        assert_eq!(t.y, 1.0);
        assert_eq!(t.u, 0.5);
        assert_eq!(t.max_deviation(), 0.0);
    }

    #[test]
    fn corrupted_u_is_detected() {
        let path = [0, 1, 0, 1, 0];
        let mut t = IdentityPolA::new(0, Side::Plus, 0);
        let mut s = WalkState::new(0);
        for (k, w) in path.windows(2).enumerate() {
            let step = Step { from: w[0], to: w[1], edge: w[0].min(w[1]) };
            t.on_step(&s, step).unwrap();
            if k == 1 {
                t.u += 0.25;
            }
            s.record(step);
            t.after_step(&s).unwrap();
        }
        assert!(t.max_deviation() > 0.2);
    }

    #[test]
    fn identities_on_simulated_paths() {
        for seed in 0..3 {
            let path = vrrw(seed, 20_000);
            for x in -4..=4 {
                assert!(check_identity_1est_d(&path, x).unwrap() < 1e-9);
                for side in [Side::Minus, Side::Plus] {
                    assert!(check_identity_pol_a(&path, x, side).unwrap() < 1e-9);
                }
                assert!(check_identity_ri(&path, x).unwrap().holds);
            }
        }
    }

    #[test]
    fn ri_trivial_cases() {
        let r = check_identity_ri(&[0], -2).unwrap();
        assert!(r.holds);
        let path = vrrw(5, 2000);
        let far = check_identity_ri(&path, 10_000).unwrap();
        assert_eq!(far, RiCheck { constant: 0, holds: true, first_break: None });
    }
}
