use serde::Serialize;

use super::weight_or;
use crate::diagnostics::{replay_line, Identity1estD, IdentityPolA, IdentityRi, Side};
use crate::error::Result;
use crate::graph::build_line;
use crate::harness::{Ctx, Outcome, Relation, Table};
use crate::walk::{run as run_walk, Mode, Tracker};
use crate::weights::WeightSpec;

pub(crate) const THRESHOLDS: &[(&str, Relation, f64)] = &[
    ("max_deviation_1est_d", Relation::Lt, 1e-9),
    ("max_deviation_pol_a", Relation::Lt, 1e-9),
    ("ri_violations", Relation::Eq, 0.0),
];

#[derive(Serialize)]
struct Rep {
    lo: i64,
    hi: i64,
    one_est: f64,
    pol_a: f64,
    ri_checked: u64,
    ri_broken: u64,
}

pub(crate) fn run(ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx.config;
    let w = weight_or(ctx, WeightSpec::linear())?;
    let g = build_line(0);
    let x0 = cfg.x0;
    let reps = ctx.replicate("walk", cfg.replications, |_, key| {
        let trace = run_walk(&g, &w, x0, cfg.steps, Mode::Vertex, key.rng(), &mut [])?;
        let lo = *trace.positions.iter().min().unwrap();
        let hi = *trace.positions.iter().max().unwrap();
        let mut one: Vec<Identity1estD> = (lo - 1..=hi + 1).map(|x| Identity1estD::new(x, x0)).collect();
        let mut pol: Vec<IdentityPolA> = (lo - 1..=hi + 1)
            .flat_map(|x| [Side::Minus, Side::Plus].map(|s| IdentityPolA::new(x, s, x0)))
            .collect();
        let mut ri: Vec<IdentityRi> = (lo - 6..=hi + 1).map(|o| IdentityRi::new(o, x0)).collect();
        {
            let mut trackers: Vec<&mut dyn Tracker> = Vec::new();
            trackers.extend(one.iter_mut().map(|t| t as &mut dyn Tracker));
            trackers.extend(pol.iter_mut().map(|t| t as &mut dyn Tracker));
            trackers.extend(ri.iter_mut().map(|t| t as &mut dyn Tracker));
            replay_line(&trace.positions, &mut trackers)?;
        }
        Ok(Rep {
            lo,
            hi,
            one_est: one.iter().map(|t| t.max_deviation()).fold(0.0, f64::max),
            pol_a: pol.iter().map(|t| t.max_deviation()).fold(0.0, f64::max),
            ri_checked: ri.len() as u64,
            ri_broken: ri.iter().filter(|t| !t.result().holds).count() as u64,
        })
    })?;

    let mut out = Outcome::default();
    let max_one = reps.iter().map(|r| r.one_est).fold(0.0, f64::max);
    let max_pol = reps.iter().map(|r| r.pol_a).fold(0.0, f64::max);
    let broken: u64 = reps.iter().map(|r| r.ri_broken).sum();
    out.checks.push(ctx.check("max_deviation_1est_d", max_one));
    out.checks.push(ctx.check("max_deviation_pol_a", max_pol));
    out.checks.push(ctx.check("ri_violations", broken as f64));
    out.aggregate("ri_origins_checked", reps.iter().map(|r| r.ri_checked).sum::<u64>());
    out.aggregate(
        "sites_checked",
        reps.iter().map(|r| (r.hi - r.lo + 3) as u64).sum::<u64>(),
    );
    let mut t = Table::new("identity_suite", &["replication", "lo", "hi", "dev_1est_d", "dev_pol_a", "ri_broken"]);
    for (i, r) in reps.iter().enumerate() {
        t.push(vec![
            i.to_string(),
            r.lo.to_string(),
            r.hi.to_string(),
            r.one_est.to_string(),
            r.pol_a.to_string(),
            r.ri_broken.to_string(),
        ]);
    }
    out.tables.push(t);
    Ok(out)
}
