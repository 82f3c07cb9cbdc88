use serde::Serialize;

use crate::error::Result;
use crate::urns::UrnState;
use crate::weights::{WeightFunction, WeightSums};

pub const DEFAULT_LAMBDAS: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UrnMartingaleValues {
    pub step: u64,
    /// `M_n = a_{-1} W*(Z_n(1)) - a_1 W*(Z_n(-1))`.
    pub m: f64,
    /// `log A_n(λ) = log W̃_{λ a_{-1}}(Z_n(1)) - log W̃_{λ a_1}(Z_n(-1))`,
    /// one entry per grid point.
    pub log_a: Vec<f64>,
    /// `W̃_{λ a_{-1}}(Z_n(1)) W̃_{-λ a_1}(Z_n(-1))`, one entry per grid point.
    /// May be zero or negative.
    pub product: Vec<f64>,
}

/// Martingale-type functionals of a two-colour W-urn.
#[derive(Clone, Debug)]
pub struct UrnMartingales {
    sums: WeightSums,
    lambdas: Vec<f64>,
}

impl UrnMartingales {
    pub fn new(w: WeightFunction, lambdas: &[f64]) -> Self {
        UrnMartingales {
            sums: WeightSums::new(w),
            lambdas: lambdas.to_vec(),
        }
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn m(&mut self, s: &UrnState) -> Result<f64> {
        Ok(s.a_minus * self.sums.wstar(s.plus)? - s.a_plus * self.sums.wstar(s.minus)?)
    }

    pub fn log_a(&mut self, s: &UrnState, lambda: f64) -> Result<f64> {
        Ok(self.sums.wtilde_log(lambda * s.a_minus, s.plus)?
            - self.sums.wtilde_log(lambda * s.a_plus, s.minus)?)
    }

    pub fn product(&mut self, s: &UrnState, lambda: f64) -> Result<f64> {
        let up = self.sums.wtilde_log(lambda * s.a_minus, s.plus)?.exp();
        let w = self.sums.weight();
        let down: f64 = (1..s.minus)
            .map(|k| 1.0 - lambda * s.a_plus / w.at(k))
            .product();
        Ok(up * down)
    }

    pub fn values(&mut self, s: &UrnState) -> Result<UrnMartingaleValues> {
        let m = self.m(s)?;
        let lambdas = self.lambdas.clone();
        let log_a = lambdas
            .iter()
            .map(|l| self.log_a(s, *l))
            .collect::<Result<_>>()?;
        let product = lambdas
            .iter()
            .map(|l| self.product(s, *l))
            .collect::<Result<_>>()?;
        Ok(UrnMartingaleValues {
            step: s.step,
            m,
            log_a,
            product,
        })
    }
}
