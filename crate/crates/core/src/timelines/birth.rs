use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Event times of a pure birth (Yule) process started from `n0`
/// individuals: the k-th spacing is exponential with rate `n0 + k - 1`.
pub fn simulate_birth_process(n0: u64, events: usize, rng: &mut SimRng) -> Result<Vec<f64>> {
    if n0 == 0 {
        return Err(Error::InvalidArgument("birth process needs n0 >= 1".into()));
    }
    let mut t = 0.0;
    Ok((0..events)
        .map(|k| {
            t += rng.exponential((n0 + k as u64) as f64);
            t
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct KendallTransform {
    /// `N_T e^{-T}` at the last event time `T`.
    pub w_estimate: f64,
    /// Spacings of the events under the time change `t -> W (e^t - 1)`.
    pub spacings: Vec<f64>,
}

/// Kendall's time change: with `W = lim N_t e^{-t}` (estimated at the last
/// event), the events at `W (e^{S_k} - 1)` form a unit-rate Poisson process.
pub fn kendall_transform(times: &[f64], n0: u64) -> Result<KendallTransform> {
    let last = *times.last().ok_or(Error::EmptySample)?;
    let population = (n0 + times.len() as u64) as f64;
    let w = population * (-last).exp();
    let mut prev = 0.0;
    let spacings = times
        .iter()
        .map(|s| {
            let t = w * s.exp_m1();
            let d = t - prev;
            prev = t;
            d
        })
        .collect();
    Ok(KendallTransform {
        w_estimate: w,
        spacings,
    })
}
