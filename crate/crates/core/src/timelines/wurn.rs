use super::AlarmSource;
use crate::error::Result;
use crate::urns::{Colour, UrnState};
use crate::weights::WeightFunction;

/// Jump chain of a two-colour time-lines urn.
#[derive(Clone, Debug, PartialEq)]
pub struct UrnTimeline {
    /// Colour added at each jump.
    pub colours: Vec<Colour>,
    /// `xi_0 = 0, xi_1, ...`.
    pub times: Vec<f64>,
    /// Counts `(Z(1), Z(-1))` after each jump, starting with the initial counts.
    pub counts: Vec<(u64, u64)>,
    /// Time of the pending alarm of each colour, `(plus, minus)`.
    pub next_alarm: (f64, f64),
    /// Alarms consumed by each colour, `(plus, minus)`.
    pub alarm_sums: (f64, f64),
}

const PLUS_CLOCK: i64 = 1;
const MINUS_CLOCK: i64 = -1;

/// Time-lines urn: colour `i` rings at the partial sums of `Y_k^i`, where
/// `Y_k^i` is exponential with rate `a_i W(Z_0(i) + k - 1)`; each ring adds
/// a ball of that colour.
pub fn simulate_w_urn_timelines<A: AlarmSource>(
    w: &WeightFunction,
    start: &UrnState,
    steps: u64,
    alarms: &A,
) -> Result<UrnTimeline> {
    let rate = |a: f64, count: u64| a * w.at(count);
    let mut plus = start.plus;
    let mut minus = start.minus;
    let mut kp = 1u64;
    let mut km = 1u64;
    let mut tp = alarms.unit(PLUS_CLOCK, kp) / rate(start.a_plus, plus);
    let mut tm = alarms.unit(MINUS_CLOCK, km) / rate(start.a_minus, minus);
    let mut out = UrnTimeline {
        colours: Vec::with_capacity(steps as usize),
        times: vec![0.0],
        counts: vec![(plus, minus)],
        next_alarm: (tp, tm),
        alarm_sums: (0.0, 0.0),
    };
    for n in 0..steps {
        if tp == tm {
            return Err(crate::Error::SimultaneousAlarms { time: tp, jump: n + 1 });
        }
        if tp < tm {
            plus += 1;
            kp += 1;
            out.colours.push(Colour::Plus);
            out.times.push(tp);
            out.alarm_sums.0 = tp;
            tp += alarms.unit(PLUS_CLOCK, kp) / rate(start.a_plus, plus);
        } else {
            minus += 1;
            km += 1;
            out.colours.push(Colour::Minus);
            out.times.push(tm);
            out.alarm_sums.1 = tm;
            tm += alarms.unit(MINUS_CLOCK, km) / rate(start.a_minus, minus);
        }
        out.counts.push((plus, minus));
    }
    out.next_alarm = (tp, tm);
    Ok(out)
}
