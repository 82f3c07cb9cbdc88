use statrs::distribution::{ContinuousCDF, Gamma};

use super::{ks, mean_se};
use crate::error::{Error, Result};
use crate::harness::{Ctx, Outcome, Relation, Table};
use crate::timelines::{kendall_transform, simulate_birth_process};

pub(crate) const THRESHOLDS: &[(&str, Relation, f64)] = &[
    ("spacings_ks_p", Relation::Gt, 0.01),
    ("w_ks_p", Relation::Gt, 0.01),
];

pub(crate) fn run(ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx.config;
    let n0 = cfg.params.n0.unwrap_or(50);
    if n0 == 0 || cfg.steps == 0 {
        return Err(Error::Config("the birth process needs n0 >= 1 and at least one event".into()));
    }
    let runs = ctx.replicate("birth", cfg.replications, |_, key| {
        let times = simulate_birth_process(n0, cfg.steps as usize, &mut key.rng())?;
        kendall_transform(&times, n0)
    })?;
    let spacings: Vec<f64> = runs.iter().flat_map(|r| r.spacings.iter().copied()).collect();
    let ws: Vec<f64> = runs.iter().map(|r| r.w_estimate).collect();
    let gamma = Gamma::new(n0 as f64, 1.0).map_err(|e| Error::Config(e.to_string()))?;
    let (d_s, p_s) = ks(&spacings, |x| if x <= 0.0 { 0.0 } else { -(-x).exp_m1() });
    let (d_w, p_w) = ks(&ws, |x| gamma.cdf(x));

    let mut out = Outcome::default();
    out.checks.push(ctx.check("spacings_ks_p", p_s));
    out.checks.push(ctx.check("w_ks_p", p_w));
    let (ms, ses) = mean_se(&spacings);
    let (mw, sew) = mean_se(&ws);
    out.aggregate(
        "spacings",
        serde_json::json!({"ks_statistic": d_s, "count": spacings.len(), "mean": ms, "se": ses}),
    );
    out.aggregate(
        "w_estimate",
        serde_json::json!({"ks_statistic": d_w, "mean": mw, "se": sew, "gamma_shape": n0}),
    );
    let mut t = Table::new("kendall_transform", &["replication", "w_estimate"]);
    for (i, w) in ws.iter().enumerate() {
        t.push(vec![i.to_string(), w.to_string()]);
    }
    out.tables.push(t);
    Ok(out)
}
