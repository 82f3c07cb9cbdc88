use crate::coupling::{check_eie, check_eie_paths, check_holding_sums, run_coupled, Perturbation};
use crate::error::{Error, Result};
use crate::harness::{Ctx, Outcome, Relation, Table};
use crate::timelines::CounterAlarms;
use crate::weights::WeightSpec;

pub(crate) const THRESHOLDS: &[(&str, Relation, f64)] = &[
    ("eie_violations", Relation::Eq, 0.0),
    ("holding_violations", Relation::Eq, 0.0),
    ("fixture_flagged", Relation::Eq, 1.0),
];

/// Pair `r` delays the `n`-th return across `(x, x-1)`.
fn perturbation_for(rep: u64) -> Result<Perturbation> {
    Perturbation::delay_return((rep % 3) as i64 - 1, 1 + (rep / 3) % 3)
}

pub(crate) fn run(ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx.config;
    let specs = match &cfg.weight {
        Some(w) => vec![w.clone()],
        None => vec![WeightSpec::power(0.0, 1.0), WeightSpec::power(0.0, 2.0)],
    };
    let mut out = Outcome::default();
    let mut t = Table::new(
        "coupling_monotonicity",
        &["weight", "replication", "matched", "equalities", "eie_violations", "holding_checked", "holding_violations"],
    );
    let mut eie_total = 0;
    let mut holding_total = 0;
    for spec in &specs {
        let w = spec.build().map_err(|e| Error::Config(e.to_string()))?;
        let label = serde_json::to_string(spec).expect("weight spec serializes");
        let pairs = ctx.replicate(&format!("pairs/{label}"), cfg.replications, |rep, key| {
            let pair = run_coupled(&CounterAlarms::new(key), &perturbation_for(rep)?, cfg.x0, cfg.steps, &w)?;
            Ok((check_eie(&pair), check_holding_sums(&pair)))
        })?;
        let eie: u64 = pairs.iter().map(|p| p.0.violations).sum();
        let holding: u64 = pairs.iter().map(|p| p.1.violations).sum();
        eie_total += eie;
        holding_total += holding;
        out.aggregate(
            &label,
            serde_json::json!({
                "pairs": cfg.replications,
                "eie_violations": eie,
                "holding_violations": holding,
                "matched_indices": pairs.iter().map(|p| p.0.matched).sum::<u64>(),
                "first_violation": pairs.iter().find_map(|p| p.0.first_violation),
            }),
        );
        for (i, (e, h)) in pairs.iter().enumerate() {
            t.push(vec![
                format!("\"{}\"", label.replace('"', "\"\"")),
                i.to_string(),
                e.matched.to_string(),
                e.equalities.to_string(),
                e.violations.to_string(),
                h.checked.to_string(),
                h.violations.to_string(),
            ]);
        }
    }
    let fixture = check_eie_paths(&[0, 1, 0, -1, 0], &[0, -1, 0, 1, 0]);
    out.checks.push(ctx.check("eie_violations", eie_total as f64));
    out.checks.push(ctx.check("holding_violations", holding_total as f64));
    out.checks.push(ctx.check("fixture_flagged", f64::from(u8::from(!fixture.holds))));
    out.aggregate("fixture", fixture);
    out.tables.push(t);
    Ok(out)
}
