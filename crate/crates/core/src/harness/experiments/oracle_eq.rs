use std::collections::BTreeMap;

use num_rational::BigRational;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{build_edge_list, build_line};
use crate::harness::{stats, Ctx, Outcome, Relation, Table};
use crate::rng::StreamKey;
use crate::timelines::{
    simulate_esirw_timelines, simulate_vsirw_directed_timelines, simulate_w_urn_timelines, CounterAlarms,
    DirectedOptions,
};
use crate::urns::{exact_colour_sequences, UrnState};
use crate::walk::{self, exact_path_distribution, Mode, MAX_ENUMERATION_STEPS};
use crate::weights::{rational_to_f64, WeightFunction};

pub(crate) const THRESHOLDS: &[(&str, Relation, f64)] = &[("chi_square_p", Relation::Gt, 0.001)];

#[derive(Serialize)]
struct Comparison {
    statistic: f64,
    p: f64,
    cells: usize,
    /// Sampled prefixes the enumeration gives probability zero.
    impossible: u64,
}

fn compare<K: Ord>(exact: &BTreeMap<K, BigRational>, samples: Vec<K>) -> Result<Comparison> {
    let mut counts: BTreeMap<&K, u64> = exact.keys().map(|k| (k, 0)).collect();
    let mut impossible = 0;
    for s in &samples {
        match counts.get_mut(s) {
            Some(c) => *c += 1,
            None => impossible += 1,
        }
    }
    let observed: Vec<u64> = counts.values().copied().collect();
    let expected: Vec<f64> = exact.values().map(rational_to_f64).collect();
    let (statistic, p) = stats::chi_square(&observed, &expected)?;
    Ok(Comparison {
        statistic,
        p: if impossible > 0 { 0.0 } else { p },
        cells: observed.len(),
        impossible,
    })
}

fn run_case<K, F>(ctx: &Ctx, name: &str, exact: &BTreeMap<K, BigRational>, sample: F) -> Result<(String, f64, Comparison)>
where
    K: Ord + Send,
    F: Fn(StreamKey) -> Result<K> + Sync,
{
    let samples = ctx.replicate(name, ctx.config.replications, |_, key| sample(key))?;
    let c = compare(exact, samples)?;
    Ok((name.to_string(), c.p, c))
}

pub(crate) fn run(ctx: &Ctx) -> Result<Outcome> {
    let k = ctx.config.steps as usize;
    if k > MAX_ENUMERATION_STEPS {
        return Err(Error::Config(format!(
            "prefix length {k} exceeds the enumeration limit {MAX_ENUMERATION_STEPS}"
        )));
    }
    let steps = k as u64;
    let line = build_line(0);
    let shifted = WeightFunction::power(1.0, 1.0)?;
    let triangle = build_edge_list(&[(0, 1, 1.0), (1, 2, 2.0), (0, 2, 3.0)])?;
    let square = WeightFunction::power(0.0, 2.0)?;
    let start = UrnState::new(1, 1, 2.0, 1.0)?;

    let line_law = exact_path_distribution(&line, &shifted, 0, k, Mode::Vertex)?;
    let tri_law = exact_path_distribution(&triangle, &square, 0, k, Mode::Edge)?;
    let urn_law = exact_colour_sequences(&square, &start, k)?;

    let cases = vec![
        run_case(ctx, "vsirw_discrete", &line_law, |key| {
            Ok(walk::run(&line, &shifted, 0, steps, Mode::Vertex, key.rng(), &mut [])?.positions)
        })?,
        run_case(ctx, "vsirw_directed_timelines", &line_law, |key| {
            let r = simulate_vsirw_directed_timelines(
                &line,
                &shifted,
                0,
                steps,
                &CounterAlarms::new(key),
                DirectedOptions::default(),
            )?;
            Ok(r.trace.positions)
        })?,
        run_case(ctx, "esirw_discrete", &tri_law, |key| {
            Ok(walk::run(&triangle, &square, 0, steps, Mode::Edge, key.rng(), &mut [])?.positions)
        })?,
        run_case(ctx, "esirw_timelines", &tri_law, |key| {
            Ok(simulate_esirw_timelines(&triangle, &square, 0, steps, &CounterAlarms::new(key))?
                .trace
                .positions)
        })?,
        run_case(ctx, "w_urn_timelines", &urn_law, |key| {
            Ok(simulate_w_urn_timelines(&square, &start, steps, &CounterAlarms::new(key))?.colours)
        })?,
    ];

    let mut out = Outcome::default();
    let mut t = Table::new("oracle_equivalence", &["case", "statistic", "p", "cells", "impossible"]);
    for (name, p, c) in cases {
        out.checks.push(ctx.check_as(&format!("chi_square_p[{name}]"), "chi_square_p", p));
        t.push(vec![
            name.clone(),
            c.statistic.to_string(),
            c.p.to_string(),
            c.cells.to_string(),
            c.impossible.to_string(),
        ]);
        out.aggregate(&name, c);
    }
    out.tables.push(t);
    Ok(out)
}
