use std::collections::BTreeMap;

use serde::Serialize;

use super::{alpha, is_checkpoint, Side};
use crate::error::Result;
use crate::graph::Vertex;
use crate::walk::{Step, StepCursor, Tracker, WalkState};

/// Series attached to one site `x` of the line. Arrays are indexed by
/// side, minus first.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct SiteValues {
    /// `α_n^∓(x)`.
    pub alpha: [f64; 2],
    /// `Y_n^∓(x)`: jumps `x -> x∓1`, each weighted by `1/Z_{k-1}(x∓1)`.
    pub y_side: [f64; 2],
    /// `Y_n(x)`: visits to `x` weighted by `1/(Z_{k-1}(x-1) + Z_{k-1}(x+1))`.
    pub y: f64,
    /// `U_{n,∓}^+(x)`: jumps `x -> x∓1` weighted by `1/Z_{k-1}(x)`.
    pub u_plus: [f64; 2],
    /// `U_{n,∓}^-(x)`: jumps `x -> x±1` weighted by
    /// `Z_{k-1}(x∓1) / (Z_{k-1}(x) Z_{k-1}(x±1))`.
    pub u_minus: [f64; 2],
    /// `U_{n,∓}(x)`: visits weighted by `α_{k-1}^∓(x) / Z_{k-1}(x)`.
    pub u: [f64; 2],
}

impl SiteValues {
    /// `Ŷ_n^±(x) = Y_n^±(x) - Y_n(x)`.
    pub fn y_hat(&self, side: Side) -> f64 {
        self.y_side[side.index()] - self.y
    }

    /// `Û_{n,±}^+(x)`.
    pub fn u_hat_plus(&self, side: Side) -> f64 {
        self.u_plus[side.index()] - self.u[side.index()]
    }

    /// `Û_{n,±}^-(x)`.
    pub fn u_hat_minus(&self, side: Side) -> f64 {
        self.u_minus[side.index()] - self.u[side.index()]
    }

    /// `Ǔ_{n,±}(x) = Û^+ - Û^-`.
    pub fn u_check(&self, side: Side) -> f64 {
        self.u_hat_plus(side) - self.u_hat_minus(side)
    }

    pub fn named(&self) -> [(&'static str, f64); 19] {
        use Side::*;
        [
            ("alpha_minus", self.alpha[0]),
            ("alpha_plus", self.alpha[1]),
            ("y_minus", self.y_side[0]),
            ("y_plus", self.y_side[1]),
            ("y", self.y),
            ("y_hat_minus", self.y_hat(Minus)),
            ("y_hat_plus", self.y_hat(Plus)),
            ("u_plus[-]", self.u_plus[0]),
            ("u_plus[+]", self.u_plus[1]),
            ("u_minus[-]", self.u_minus[0]),
            ("u_minus[+]", self.u_minus[1]),
            ("u[-]", self.u[0]),
            ("u[+]", self.u[1]),
            ("u_hat_plus[-]", self.u_hat_plus(Minus)),
            ("u_hat_plus[+]", self.u_hat_plus(Plus)),
            ("u_hat_minus[-]", self.u_hat_minus(Minus)),
            ("u_hat_minus[+]", self.u_hat_minus(Plus)),
            ("u_check[-]", self.u_check(Minus)),
            ("u_check[+]", self.u_check(Plus)),
        ]
    }
}

/// Online site statistics of a walk on the line, with snapshots at the
/// powers of two.
#[derive(Clone, Debug)]
pub struct SiteTracker {
    values: BTreeMap<Vertex, SiteValues>,
    cursor: StepCursor,
    checkpoints: Vec<(u64, Vertex, SiteValues)>,
}

impl SiteTracker {
    pub fn new(sites: impl IntoIterator<Item = Vertex>, x0: Vertex) -> Self {
        let start = WalkState::new(x0);
        let values = sites
            .into_iter()
            .map(|x| {
                let v = SiteValues {
                    alpha: [alpha(&start, x, Side::Minus), alpha(&start, x, Side::Plus)],
                    ..Default::default()
                };
                (x, v)
            })
            .collect();
        SiteTracker {
            values,
            cursor: StepCursor::new(0),
            checkpoints: Vec::new(),
        }
    }

    pub fn values(&self, x: Vertex) -> Option<&SiteValues> {
        self.values.get(&x)
    }

    pub fn sites(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.values.keys().copied()
    }

    pub fn steps(&self) -> u64 {
        self.cursor.steps()
    }

    pub fn checkpoints(&self) -> &[(u64, Vertex, SiteValues)] {
        &self.checkpoints
    }

    /// Rows for [`super::write_series_csv`].
    pub fn series_rows(&self) -> impl Iterator<Item = (u64, Vertex, &'static str, f64)> + '_ {
        self.checkpoints
            .iter()
            .flat_map(|(n, x, v)| v.named().into_iter().map(move |(s, val)| (*n, *x, s, val)))
    }
}

impl Tracker for SiteTracker {
    fn on_step(&mut self, before: &WalkState, step: Step) -> Result<()> {
        self.cursor.advance(before.step)?;
        let x = step.from;
        let Some(v) = self.values.get_mut(&x) else {
            return Ok(());
        };
        let zx = before.vertex_count(x) as f64;
        let zm = before.vertex_count(x - 1) as f64;
        let zp = before.vertex_count(x + 1) as f64;
        v.y += 1.0 / (zm + zp);
        v.u[0] += zm / (zm + zp) / zx;
        v.u[1] += zp / (zm + zp) / zx;
        if step.to == x + 1 {
            v.y_side[1] += 1.0 / zp;
            v.u_plus[1] += 1.0 / zx;
            v.u_minus[0] += zm / (zx * zp);
        } else {
            v.y_side[0] += 1.0 / zm;
            v.u_plus[0] += 1.0 / zx;
            v.u_minus[1] += zp / (zx * zm);
        }
        Ok(())
    }

    fn after_step(&mut self, after: &WalkState) -> Result<()> {
        let p = after.position;
        for x in [p - 1, p + 1] {
            if let Some(v) = self.values.get_mut(&x) {
                v.alpha = [alpha(after, x, Side::Minus), alpha(after, x, Side::Plus)];
            }
        }
        if is_checkpoint(after.step) {
            let n = after.step;
            self.checkpoints
                .extend(self.values.iter().map(|(x, v)| (n, *x, *v)));
        }
        Ok(())
    }
}
