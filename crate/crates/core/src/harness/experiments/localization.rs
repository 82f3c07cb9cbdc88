use std::collections::BTreeMap;

use super::weight_or;
use crate::diagnostics::{alpha, estimate_asymptotic_edges, estimate_asymptotic_range, Side};
use crate::error::{Error, Result};
use crate::graph::{build_cycle, build_line, Graph, Vertex};
use crate::harness::{Ctx, Frequency, Outcome, Relation, Table};
use crate::walk::{run, Mode, Walk};
use crate::weights::{WeightFunction, WeightSpec};

fn histogram<K: Ord + Copy>(xs: impl Iterator<Item = K>) -> BTreeMap<K, u64> {
    let mut h = BTreeMap::new();
    for x in xs {
        *h.entry(x).or_insert(0) += 1;
    }
    h
}

fn largest_power_of_two_at_most(n: u64) -> u64 {
    if n == 0 {
        0
    } else {
        1 << (63 - n.leading_zeros())
    }
}

pub(crate) const FIVE_SITE_THRESHOLDS: &[(&str, Relation, f64)] = &[
    ("five_site_rate", Relation::Ge, 0.9),
    ("stabilized_below_five", Relation::Eq, 0.0),
    ("empty_alpha_bins", Relation::Eq, 0.0),
];

const ALPHA_BINS: usize = 8;

struct FiveSiteRun {
    lo: Vertex,
    hi: Vertex,
    size: usize,
    stabilized: bool,
    alpha_minus: Option<f64>,
}

pub(crate) fn five_site(ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx.config;
    let w = weight_or(ctx, WeightSpec::linear())?;
    let tail = ctx.tail_fraction(0.1);
    let g = build_line(0);
    let last = largest_power_of_two_at_most(cfg.steps) as usize;
    let runs = ctx.replicate("walk", cfg.replications, |_, key| {
        let trace = run(&g, &w, cfg.x0, cfg.steps, Mode::Vertex, key.rng(), &mut [])?;
        let est = estimate_asymptotic_range(&trace.positions, tail)?;
        // estimates at the last two dyadic checkpoints
        let stabilized = last >= 2
            && estimate_asymptotic_range(&trace.positions[..=last], tail)?
                == estimate_asymptotic_range(&trace.positions[..=last / 2], tail)?;
        let lo = *est.first().unwrap();
        let hi = *est.last().unwrap();
        let alpha_minus = (est.len() == 5).then(|| alpha(&trace.final_state, lo + 2, Side::Minus));
        Ok(FiveSiteRun {
            lo,
            hi,
            size: est.len(),
            stabilized,
            alpha_minus,
        })
    })?;

    let five = runs.iter().filter(|r| r.size == 5).count() as u64;
    let f = Frequency::new(five, cfg.replications)?;
    let below = runs.iter().filter(|r| r.stabilized && r.size < 5).count();
    let mut bins = [0u64; ALPHA_BINS];
    for a in runs.iter().filter_map(|r| r.alpha_minus) {
        let k = ((a - 0.1) / 0.1).floor();
        if (0.0..ALPHA_BINS as f64).contains(&k) {
            bins[k as usize] += 1;
        }
    }
    let empty = bins.iter().filter(|b| **b == 0).count();

    let mut out = Outcome::default();
    out.checks.push(ctx.check("five_site_rate", f.rate));
    out.checks.push(ctx.check("stabilized_below_five", below as f64));
    out.checks.push(ctx.check("empty_alpha_bins", empty as f64));
    out.aggregate("five_site", f);
    out.aggregate("range_size_histogram", histogram(runs.iter().map(|r| r.size)));
    out.aggregate("stabilized_runs", runs.iter().filter(|r| r.stabilized).count());
    out.aggregate("alpha_minus_bins", bins);
    let mut t = Table::new("vrrw_five_site", &["replication", "lo", "hi", "size", "stabilized", "alpha_minus"]);
    for (i, r) in runs.iter().enumerate() {
        t.push(vec![
            i.to_string(),
            r.lo.to_string(),
            r.hi.to_string(),
            r.size.to_string(),
            r.stabilized.to_string(),
            r.alpha_minus.map(|a| a.to_string()).unwrap_or_default(),
        ]);
    }
    out.tables.push(t);
    Ok(out)
}

pub(crate) const VOLKOV_THRESHOLDS: &[(&str, Relation, f64)] = &[
    ("two_site_rate", Relation::Ge, 0.99),
    ("spreading_rate", Relation::Ge, 0.95),
];

pub(crate) fn volkov(ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx.config;
    let tail = ctx.tail_fraction(0.1);
    let g = build_line(0);
    let half = (cfg.steps / 2) as usize;
    let mut out = Outcome::default();
    let mut t = Table::new("volkov_dichotomy", &["rho", "replication", "tail_size", "range_half", "range_end"]);
    for rho in [1.2, 0.5] {
        let w = WeightFunction::power(0.0, rho)?;
        let runs = ctx.replicate(&format!("rho={rho}"), cfg.replications, |_, key| {
            let trace = run(&g, &w, cfg.x0, cfg.steps, Mode::Vertex, key.rng(), &mut [])?;
            let p = &trace.positions;
            let span = |s: &[Vertex]| (s.iter().max().unwrap() - s.iter().min().unwrap() + 1) as u64;
            Ok((estimate_asymptotic_range(p, tail)?.len(), span(&p[..=half]), span(p)))
        })?;
        let (name, hits) = if rho > 1.0 {
            ("two_site_rate", runs.iter().filter(|r| r.0 == 2).count())
        } else {
            ("spreading_rate", runs.iter().filter(|r| r.0 > 5 && r.2 > r.1).count())
        };
        let f = Frequency::new(hits as u64, cfg.replications)?;
        out.checks.push(ctx.check_as(&format!("{name}[rho={rho}]"), name, f.rate));
        out.aggregate(&format!("rho={rho}"), f);
        out.aggregate(
            &format!("rho={rho}_tail_size_histogram"),
            histogram(runs.iter().map(|r| r.0)),
        );
        for (i, r) in runs.iter().enumerate() {
            t.push(vec![rho.to_string(), i.to_string(), r.0.to_string(), r.1.to_string(), r.2.to_string()]);
        }
    }
    out.tables.push(t);
    Ok(out)
}

pub(crate) const EDGE_THRESHOLDS: &[(&str, Relation, f64)] = &[
    ("single_edge_rate", Relation::Ge, 0.99),
    ("edge_or_odd_cycle_rate", Relation::Ge, 1.0),
];

pub(crate) fn attracting_edge(ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx.config;
    let w = weight_or(ctx, WeightSpec::power(0.0, 2.0))?;
    let tail = ctx.tail_fraction(0.1);
    let cases: [(&str, Graph, Vertex); 3] = [
        ("line", build_line(0), cfg.x0),
        ("cycle4", build_cycle(4)?, 0),
        ("triangle", build_cycle(3)?, 0),
    ];
    let mut out = Outcome::default();
    let mut t = Table::new("esirw_attracting_edge", &["graph", "replication", "tail_edges"]);
    for (name, g, x0) in &cases {
        let sizes = ctx.replicate(name, cfg.replications, |_, key| {
            let trace = run(g, &w, *x0, cfg.steps, Mode::Edge, key.rng(), &mut [])?;
            Ok(estimate_asymptotic_edges(&trace.positions, tail)?.len())
        })?;
        let (check, hits) = if *name == "triangle" {
            ("edge_or_odd_cycle_rate", sizes.iter().filter(|s| **s == 1 || **s == 3).count())
        } else {
            ("single_edge_rate", sizes.iter().filter(|s| **s == 1).count())
        };
        let f = Frequency::new(hits as u64, cfg.replications)?;
        out.checks.push(ctx.check_as(&format!("{check}[{name}]"), check, f.rate));
        out.aggregate(name, f);
        out.aggregate(&format!("{name}_tail_edges_histogram"), histogram(sizes.iter().copied()));
        for (i, s) in sizes.iter().enumerate() {
            t.push(vec![name.to_string(), i.to_string(), s.to_string()]);
        }
    }
    out.tables.push(t);
    Ok(out)
}

pub(crate) const SELLKE_THRESHOLDS: &[(&str, Relation, f64)] = &[
    ("trap_wilson_lo", Relation::Gt, 0.0),
    ("trap_change", Relation::Lt, 0.01),
    ("contrast_all_vertices_rate", Relation::Ge, 0.99),
];

/// Counts start at one, so the returns to the start cross edges whose
/// counts are even: those must carry the summable weights.
pub(crate) fn sellke_weight() -> WeightSpec {
    WeightSpec::Alternating {
        even: Box::new(WeightSpec::Geometric { base: 2.0 }),
        odd: Box::new(WeightSpec::power(0.0, 0.0)),
    }
}

pub(crate) fn sellke(ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx.config;
    let w = sellke_weight().build()?;
    let mut marks = cfg.params.checkpoints.clone().unwrap_or_else(|| vec![cfg.steps]);
    marks.sort_unstable();
    marks.dedup();
    if marks.is_empty() || marks.iter().any(|m| *m > cfg.steps) {
        return Err(Error::Config(format!(
            "checkpoints must be nonempty and at most steps = {}",
            cfg.steps
        )));
    }
    let g = build_line(0);
    let x0 = cfg.x0;
    // first n with X_{2n} != x0, or None if trapped through `steps`
    let escapes = ctx.replicate("walk", cfg.replications, |_, key| {
        let mut walk = Walk::new(&g, w.clone(), Mode::Edge, x0, key.rng())?;
        for n in 1..=cfg.steps {
            walk.step()?;
            walk.step()?;
            if walk.state().position != x0 {
                return Ok(Some(n));
            }
        }
        Ok(None)
    })?;
    let trapped = |n: u64| escapes.iter().filter(|e| e.map_or(true, |k| k > n)).count() as u64;
    let freqs: Vec<(u64, Frequency)> = marks
        .iter()
        .map(|&n| Ok((n, Frequency::new(trapped(n), cfg.replications)?)))
        .collect::<Result<_>>()?;
    let (_, last) = freqs.last().unwrap();
    let change = (freqs[0].1.rate - last.rate).abs();

    let contrast_reps = cfg.params.contrast_replications.unwrap_or(1000);
    let contrast_steps = cfg.params.contrast_steps.unwrap_or(10_000);
    let tail = ctx.tail_fraction(0.1);
    let cycle = build_cycle(6)?;
    let root = WeightFunction::power(0.0, 0.5)?;
    let covered = ctx.replicate("contrast", contrast_reps, |_, key| {
        let trace = run(&cycle, &root, 0, contrast_steps, Mode::Edge, key.rng(), &mut [])?;
        Ok(estimate_asymptotic_range(&trace.positions, tail)?.len())
    })?;
    let all = covered.iter().filter(|c| **c == 6).count() as u64;
    let contrast = Frequency::new(all, contrast_reps)?;

    let mut out = Outcome::default();
    out.checks.push(ctx.check("trap_wilson_lo", last.lo));
    out.checks.push(ctx.check("trap_change", change));
    out.checks.push(ctx.check("contrast_all_vertices_rate", contrast.rate));
    for (n, f) in &freqs {
        out.aggregate(&format!("trapped_through_{n}"), f);
    }
    out.aggregate("contrast_all_vertices", contrast);
    out.aggregate("contrast_tail_size_histogram", histogram(covered.iter().copied()));
    let mut t = Table::new("sellke_parity", &["replication", "escape_n"]);
    for (i, e) in escapes.iter().enumerate() {
        t.push(vec![i.to_string(), e.map(|k| k.to_string()).unwrap_or_default()]);
    }
    out.tables.push(t);
    Ok(out)
}
