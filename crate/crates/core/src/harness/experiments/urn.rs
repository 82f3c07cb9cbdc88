use std::collections::BTreeMap;

use serde::Serialize;
use statrs::distribution::{Beta, ContinuousCDF};

use super::{ks, mean_se, weight_or};
use crate::diagnostics::{Side, SiteTracker, UrnMartingales};
use crate::error::{Error, Result};
use crate::graph::build_line;
use crate::harness::{Ctx, Frequency, Outcome, Relation, Table};
use crate::urns::{detect_monopoly, geometric_checkpoints, Urn, UrnState};
use crate::walk::{Mode, Walk};
use crate::weights::{WeightFunction, WeightSpec};

pub(crate) const POLYA_THRESHOLDS: &[(&str, Relation, f64)] = &[("ks_p", Relation::Gt, 0.01)];

pub(crate) fn polya(ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx.config;
    let w = weight_or(ctx, WeightSpec::linear())?;
    let delta = match w.spec() {
        WeightSpec::Power { delta, rho } if *rho == 1.0 => *delta,
        other => {
            return Err(Error::Config(format!(
                "the beta limit needs a linear weight (n + delta), got {other:?}"
            )))
        }
    };
    let fractions = ctx.replicate("urn", cfg.replications, |_, key| {
        let mut urn = Urn::new(UrnState::symmetric(), w.clone(), key.rng());
        urn.run_to(cfg.steps, &[]);
        Ok(urn.state().fraction())
    })?;
    let beta = Beta::new(1.0 + delta, 1.0 + delta).map_err(|e| Error::Config(e.to_string()))?;
    let (d, p) = ks(&fractions, |x| beta.cdf(x));
    let (mean, se) = mean_se(&fractions);
    let mut out = Outcome::default();
    out.checks.push(ctx.check("ks_p", p));
    out.aggregate("ks_statistic", d);
    out.aggregate("beta_parameter", 1.0 + delta);
    out.aggregate("mean_fraction", mean);
    out.aggregate("mean_fraction_se", se);
    let mut t = Table::new("polya_beta_limit", &["replication", "fraction"]);
    for (i, f) in fractions.iter().enumerate() {
        t.push(vec![i.to_string(), f.to_string()]);
    }
    out.tables.push(t);
    Ok(out)
}

pub(crate) const WEAK_THRESHOLDS: &[(&str, Relation, f64)] = &[("runs_outside_band", Relation::Eq, 0.0)];

/// `(rho, a_plus, a_minus)`; the ratio limit is `(a_plus / a_minus)^(1 / (1 - rho))`.
const WEAK_CASES: [(f64, f64, f64); 2] = [(0.5, 4.0, 1.0), (-1.0, 2.0, 1.0)];

pub(crate) fn weak(ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx.config;
    let mut out = Outcome::default();
    let mut t = Table::new("weak_reinforcement_ratio", &["rho", "replication", "ratio", "target"]);
    for (rho, ap, am) in WEAK_CASES {
        let w = WeightFunction::power(0.0, rho)?;
        let target = (ap / am).powf(1.0 / (1.0 - rho));
        let start = UrnState::new(1, 1, ap, am)?;
        let ratios = ctx.replicate(&format!("rho={rho}"), cfg.replications, |_, key| {
            let mut urn = Urn::new(start, w.clone(), key.rng());
            urn.run_to(cfg.steps, &[]);
            Ok(urn.state().plus as f64 / urn.state().minus as f64)
        })?;
        let outside = ratios.iter().filter(|r| !((*r / target - 1.0).abs() <= 0.05)).count();
        out.checks
            .push(ctx.check_as(&format!("runs_outside_band[rho={rho}]"), "runs_outside_band", outside as f64));
        let worst = ratios.iter().map(|r| (r / target - 1.0).abs()).fold(0.0, f64::max);
        out.aggregate(
            &format!("rho={rho}"),
            serde_json::json!({
                "a": [ap, am],
                "target": target,
                "band": 0.05,
                "worst_relative_error": worst,
                "mean_ratio": mean_se(&ratios).0,
            }),
        );
        for (i, r) in ratios.iter().enumerate() {
            t.push(vec![rho.to_string(), i.to_string(), r.to_string(), target.to_string()]);
        }
    }
    out.tables.push(t);
    Ok(out)
}

pub(crate) const MONOPOLY_THRESHOLDS: &[(&str, Relation, f64)] = &[
    ("monopoly_rate", Relation::Ge, 0.99),
    ("monopoly_wilson_lo", Relation::Gt, 0.97),
];

pub(crate) fn monopoly(ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx.config;
    let w = weight_or(ctx, WeightSpec::power(0.0, 2.0))?;
    let tail = ctx.tail_fraction(0.5);
    // a checkpoint exactly at the start of the trailing window
    let window_start = (cfg.steps as f64 - tail * cfg.steps as f64).floor() as u64;
    let mut marks = geometric_checkpoints(cfg.steps);
    marks.push(window_start);
    let runs = ctx.replicate("urn", cfg.replications, |_, key| {
        let mut urn = Urn::new(UrnState::symmetric(), w.clone(), key.rng());
        let h = urn.run_to(cfg.steps, &marks);
        let (_, plus, minus) = h.last();
        Ok((detect_monopoly(&h, tail), plus, minus))
    })?;
    let hits = runs.iter().filter(|r| r.0.is_some()).count() as u64;
    let f = Frequency::new(hits, cfg.replications)?;
    let mut out = Outcome::default();
    out.checks.push(ctx.check("monopoly_rate", f.rate));
    out.checks.push(ctx.check("monopoly_wilson_lo", f.lo));
    out.aggregate("monopoly", f);
    if cfg.steps <= EXACT_MONOPOLY_MAX_STEPS {
        out.aggregate("exact_monopoly_probability", exact_monopoly_probability(&w, cfg.steps, window_start));
    }
    let mut t = Table::new("strong_monopoly", &["replication", "z_plus", "z_minus", "monopoly"]);
    for (i, (m, p, q)) in runs.iter().enumerate() {
        let label = match m {
            Some(c) => format!("{c:?}").to_lowercase(),
            None => "none".into(),
        };
        t.push(vec![i.to_string(), p.to_string(), q.to_string(), label]);
    }
    out.tables.push(t);
    Ok(out)
}

const EXACT_MONOPOLY_MAX_STEPS: u64 = 20_000;

/// Probability that, started from one ball of each colour, one colour gets
/// no draw during steps `from..n`: the law of the counts at `from` by
/// dynamic programming, then the product of the winner's draw probabilities.
pub(crate) fn exact_monopoly_probability(w: &WeightFunction, n: u64, from: u64) -> f64 {
    if from >= n {
        return 0.0;
    }
    // law[a - 1] = P(Z(1) = a) once `m` draws are made, Z(1) + Z(-1) = m + 2
    let mut law = vec![1.0f64];
    for m in 0..from {
        let mut next = vec![0.0; law.len() + 1];
        for (i, p) in law.iter().enumerate() {
            let (a, b) = (i as u64 + 1, m + 1 - i as u64);
            let q = w.at(a) / (w.at(a) + w.at(b));
            next[i + 1] += p * q;
            next[i] += p * (1.0 - q);
        }
        law = next;
    }
    let stays = |winner: u64, loser: u64| -> f64 {
        let wl = w.at(loser);
        (0..n - from)
            .map(|j| {
                let ww = w.at(winner + j);
                (ww / (ww + wl)).ln()
            })
            .sum::<f64>()
            .exp()
    };
    law.iter()
        .enumerate()
        .filter(|(_, p)| **p > 0.0)
        .map(|(i, p)| {
            let (a, b) = (i as u64 + 1, from + 1 - i as u64);
            p * (stays(a, b) + stays(b, a))
        })
        .sum()
}

pub(crate) const MARTINGALE_THRESHOLDS: &[(&str, Relation, f64)] = &[("z_score", Relation::Le, 4.0)];

#[derive(Default)]
struct Snapshot {
    a: Vec<f64>,
    product: Vec<f64>,
    m: f64,
    y_hat: [f64; 2],
}

#[derive(Serialize)]
struct MeanSummary {
    initial: f64,
    mean: f64,
    se: f64,
    z: f64,
}

fn summary(initial: f64, xs: &[f64]) -> MeanSummary {
    let (mean, se) = mean_se(xs);
    MeanSummary {
        initial,
        mean,
        se,
        z: (mean - initial).abs() / se,
    }
}

pub(crate) fn martingales(ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx.config;
    let w = weight_or(ctx, WeightSpec::linear())?;
    let lambdas = cfg.params.lambdas.clone().unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
    let mut marks = cfg.params.checkpoints.clone().unwrap_or_else(|| vec![cfg.steps]);
    marks.sort_unstable();
    marks.dedup();
    if let Some(m) = marks.iter().find(|m| **m > cfg.steps) {
        return Err(Error::Config(format!("checkpoint {m} beyond steps {}", cfg.steps)));
    }
    let g = build_line(0);
    let x0 = cfg.x0;
    let runs = ctx.replicate("martingales", cfg.replications, |_, key| {
        let mut urn = Urn::new(UrnState::symmetric(), w.clone(), key.child("urn").rng());
        let mut funcs = UrnMartingales::new(w.clone(), &lambdas);
        let mut walk = Walk::new(&g, w.clone(), Mode::Vertex, x0, key.child("walk").rng())?;
        let mut site = SiteTracker::new([x0], x0);
        let mut snaps = Vec::with_capacity(marks.len());
        for &m in &marks {
            urn.run_to(m - urn.state().step, &[]);
            let v = funcs.values(urn.state())?;
            walk.advance(m - walk.state().step, &mut [&mut site], None)?;
            let s = site.values(x0).expect("tracked site");
            snaps.push(Snapshot {
                a: v.log_a.iter().map(|l| l.exp()).collect(),
                product: v.product,
                m: v.m,
                y_hat: [s.y_hat(Side::Minus), s.y_hat(Side::Plus)],
            });
        }
        Ok(snaps)
    })?;

    let mut out = Outcome::default();
    let mut t = Table::new("martingale_means", &["statistic", "n", "initial", "mean", "se", "z"]);
    for (j, &n) in marks.iter().enumerate() {
        let col = |f: &dyn Fn(&Snapshot) -> f64| runs.iter().map(|r| f(&r[j])).collect::<Vec<f64>>();
        let mut gated: Vec<(String, MeanSummary)> = Vec::new();
        let mut info: BTreeMap<String, MeanSummary> = BTreeMap::new();
        for (i, l) in lambdas.iter().enumerate() {
            gated.push((format!("A({l})@{n}"), summary(1.0, &col(&|s| s.a[i]))));
            info.insert(format!("product({l})@{n}"), summary(1.0, &col(&|s| s.product[i])));
        }
        gated.push((format!("M@{n}"), summary(0.0, &col(&|s| s.m))));
        gated.push((format!("Y_hat_minus@{n}"), summary(0.0, &col(&|s| s.y_hat[0]))));
        gated.push((format!("Y_hat_plus@{n}"), summary(0.0, &col(&|s| s.y_hat[1]))));
        for (name, s) in gated {
            out.checks.push(ctx.check_as(&format!("z_score[{name}]"), "z_score", s.z));
            t.push(vec![name.clone(), n.to_string(), s.initial.to_string(), s.mean.to_string(), s.se.to_string(), s.z.to_string()]);
            out.aggregate(&name, s);
        }
        for (name, s) in info {
            t.push(vec![name.clone(), n.to_string(), s.initial.to_string(), s.mean.to_string(), s.se.to_string(), s.z.to_string()]);
            out.aggregate(&name, s);
        }
    }
    out.tables.push(t);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::urns::exact_colour_sequences;
    use crate::weights::rational_to_f64;

    #[test]
    fn exact_monopoly_matches_enumeration() {
        for rho in [1.0, 2.0] {
            let w = WeightFunction::power(0.0, rho).unwrap();
            let (n, from) = (9u64, 4u64);
            let law = exact_colour_sequences(&w, &UrnState::symmetric(), n as usize).unwrap();
            let expect: f64 = law
                .iter()
                .filter(|(seq, _)| seq[from as usize..].windows(2).all(|c| c[0] == c[1]))
                .map(|(_, p)| rational_to_f64(p))
                .sum();
            let got = exact_monopoly_probability(&w, n, from);
            assert!((got - expect).abs() < 1e-12, "rho={rho}: {got} vs {expect}");
        }
        let w = WeightFunction::power(0.0, 2.0).unwrap();
        assert_eq!(exact_monopoly_probability(&w, 5, 5), 0.0);
    }
}
